"""Layered shallow circuits, statevectors, light cones and parent projectors.

Conventions
-----------
Qubit 0 is the most significant bit of an amplitude index, so ``|10>`` on two
qubits is amplitude index 2. Gate matrices use the same ordering over the
qubits they list. A depth-``t`` circuit is a list of ``t`` layers; every
layer counts towards the depth, single-qubit layers included.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import operator_norm, trace_norm

MAX_QUBITS = 20
MAX_OPERATOR_QUBITS = 12

_SQ2 = 1.0 / np.sqrt(2.0)

NAMED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

PAULI_Z = NAMED_GATES["Z"]


class ConnectivityError(ValueError):
    pass


@dataclass(frozen=True)
class Connectivity:
    """Gate connectivity model.

    ``kind`` is ``"all-to-all"`` or ``"lattice"``. Lattice sites are numbered
    in row-major order over ``dims``.
    """

    kind: str = "all-to-all"
    dims: tuple = ()
    periodic: bool = False

    def __post_init__(self):
        if self.kind not in ("all-to-all", "lattice"):
            raise ValueError(f"unknown connectivity kind {self.kind!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.kind == "lattice" and (not self.dims or min(self.dims) < 1):
            raise ValueError("lattice connectivity needs positive side lengths")

    @classmethod
    def all_to_all(cls):
        return cls("all-to-all")

    @classmethod
    def line(cls, n, periodic=False):
        return cls("lattice", (n,), periodic)

    @property
    def dimension(self):
        return len(self.dims)

    def _coords(self, site):
        return np.unravel_index(site, self.dims)

    def allows(self, qubits):
        if len(qubits) < 2 or self.kind == "all-to-all":
            return True
        a, b = (self._coords(q) for q in qubits)
        dist = 0
        for x, y, side in zip(a, b, self.dims):
            d = abs(int(x) - int(y))
            if self.periodic:
                d = min(d, side - d)
            dist += d
        return dist == 1


def lightcone_function(conn, t):
    """Largest number of qubits a depth-``t`` circuit can influence from one site."""
    if t < 0:
        raise ValueError("depth must be non-negative")
    if conn.kind == "all-to-all":
        return 2 ** int(t)
    return (2 * int(t) + 1) ** conn.dimension


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple
    matrix: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if not 1 <= len(self.qubits) <= 2:
            raise ValueError("gates act on one or two qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in gate {self.name} {self.qubits}")
        if self.matrix is None:
            if self.name not in NAMED_GATES:
                raise ValueError(f"unknown gate {self.name!r}")
            m = NAMED_GATES[self.name]
        else:
            m = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** len(self.qubits)
        if m.shape != (dim, dim):
            raise ValueError(f"gate {self.name} on {len(self.qubits)} qubit(s) needs a {dim}x{dim} matrix")
        if not np.allclose(m.conj().T @ m, np.eye(dim), atol=1e-10, rtol=0):
            raise ValueError(f"gate {self.name} is not unitary")
        object.__setattr__(self, "matrix", m)


@dataclass
class Circuit:
    n: int
    layers: list = field(default_factory=list)
    connectivity: Connectivity = field(default_factory=Connectivity.all_to_all)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        self.layers = [list(layer) for layer in self.layers]
        if self.connectivity.kind == "lattice" and int(np.prod(self.connectivity.dims)) != self.n:
            raise ValueError("lattice size does not match the qubit count")
        for depth, layer in enumerate(self.layers):
            seen = set()
            for gate in layer:
                if any(q < 0 or q >= self.n for q in gate.qubits):
                    raise ValueError(f"gate {gate.name} {gate.qubits} outside {self.n} qubits")
                if seen.intersection(gate.qubits):
                    raise ValueError(f"layer {depth} has overlapping gates")
                seen.update(gate.qubits)
                if not self.connectivity.allows(gate.qubits):
                    raise ConnectivityError(f"gate {gate.name} {gate.qubits} violates connectivity")

    @property
    def depth(self):
        return len(self.layers)

    def inverse(self):
        layers = [[Gate(g.name + "^dg", g.qubits, g.matrix.conj().T) for g in layer]
                  for layer in reversed(self.layers)]
        return Circuit(self.n, layers, self.connectivity)


def zero_state(n):
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(bits):
    """Computational basis state from a bit string such as ``"0110"``."""
    n = len(bits)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[int("".join(str(int(b)) for b in bits), 2)] = 1.0
    return psi


def num_qubits(state):
    n = int(round(np.log2(len(state))))
    if 2 ** n != len(state):
        raise ValueError(f"state length {len(state)} is not a power of two")
    return n


def check_state(state, n=None, atol=1e-10):
    state = np.asarray(state, dtype=complex).ravel()
    m = num_qubits(state)
    if m > MAX_QUBITS:
        raise ValueError(f"statevector on {m} qubits exceeds the {MAX_QUBITS}-qubit cap")
    if n is not None and m != n:
        raise ValueError(f"expected a {n}-qubit state, got {m} qubits")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state is not normalized (norm {norm:.12g})")
    return state


def check_region(region, n):
    region = tuple(sorted(int(q) for q in region))
    if len(set(region)) != len(region):
        raise ValueError(f"region {region} has repeated sites")
    if any(q < 0 or q >= n for q in region):
        raise ValueError(f"region {region} not inside [0, {n})")
    return region


def apply_matrix(state, matrix, qubits, n):
    """Apply a ``2^k x 2^k`` matrix to the listed qubits of an ``n``-qubit state."""
    k = len(qubits)
    psi = state.reshape((2,) * n)
    psi = np.moveaxis(psi, qubits, range(k))
    shape = psi.shape
    psi = (matrix @ psi.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), qubits).reshape(-1)


def apply_circuit(circuit, state=None):
    """Run ``circuit`` on ``state`` (``|0...0>`` when omitted)."""
    psi = zero_state(circuit.n) if state is None else check_state(state, circuit.n)
    for layer in circuit.layers:
        for gate in layer:
            psi = apply_matrix(psi, gate.matrix, gate.qubits, circuit.n)
    return psi


def circuit_unitary(circuit):
    dim = 2 ** circuit.n
    cols = [apply_circuit(circuit, np.eye(dim, dtype=complex)[:, j]) for j in range(dim)]
    return np.stack(cols, axis=1)


def _grow(cone, layers):
    cone = set(cone)
    for layer in layers:
        for gate in layer:
            if cone.intersection(gate.qubits):
                cone.update(gate.qubits)
    return cone


def circuit_lightcone(circuit, seed, stacked_depth=None):
    """Sites reachable from ``seed`` through the stacked layers of U-dagger then U.

    The stack is the reversed gate layout followed by the forward one, and the
    first ``stacked_depth`` layers of it are traced (all of them by default).
    With ``stacked_depth == circuit.depth`` the result is the support of
    ``U^dagger P U`` for ``P`` on ``seed``.
    """
    seed = check_region(seed, circuit.n)
    stack = list(reversed(circuit.layers)) + list(circuit.layers)
    if stacked_depth is None:
        stacked_depth = len(stack)
    if stacked_depth < 0 or stacked_depth > len(stack):
        raise ValueError(f"stacked depth must lie in [0, {len(stack)}]")
    return tuple(sorted(_grow(seed, stack[:stacked_depth])))


def forward_lightcone(circuit, seed):
    """Support of ``U O U^dagger`` for ``O`` on ``seed``."""
    return tuple(sorted(_grow(check_region(seed, circuit.n), circuit.layers)))


def backward_lightcone(circuit, seed):
    """Support of ``U^dagger O U`` for ``O`` on ``seed``."""
    return tuple(sorted(_grow(check_region(seed, circuit.n), reversed(circuit.layers))))


@dataclass
class LocalOperator:
    """Dense operator on a sorted tuple of sites."""

    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        order = np.argsort(support, kind="stable")
        m = np.asarray(self.matrix, dtype=complex)
        k = len(support)
        if m.shape != (2 ** k, 2 ** k):
            raise ValueError(f"operator on {k} sites needs a {2 ** k}x{2 ** k} matrix, got {m.shape}")
        if len(set(support)) != k:
            raise ValueError("operator support has repeated sites")
        if k > MAX_OPERATOR_QUBITS:
            raise ValueError(f"operator support larger than {MAX_OPERATOR_QUBITS} sites")
        if list(order) != list(range(k)):
            t = m.reshape((2,) * (2 * k))
            perm = list(order) + [k + i for i in order]
            m = t.transpose(perm).reshape(2 ** k, 2 ** k)
            support = tuple(support[i] for i in order)
        self.support = support
        self.matrix = m

    @property
    def size(self):
        return len(self.support)

    def is_hermitian(self, atol=1e-10):
        return np.allclose(self.matrix, self.matrix.conj().T, atol=atol, rtol=0)

    def norm(self):
        return operator_norm(self.matrix)

    def embed(self, sites):
        """Matrix of this operator on the (sorted) superset ``sites``."""
        sites = tuple(sorted(sites))
        if not set(self.support) <= set(sites):
            raise ValueError(f"{self.support} is not inside {sites}")
        k = len(sites)
        full = np.eye(2 ** k, dtype=complex)
        pos = [sites.index(q) for q in self.support]
        cols = [apply_matrix(full[:, j], self.matrix, pos, k) for j in range(2 ** k)]
        return np.stack(cols, axis=1)


def single_site(matrix, site):
    return LocalOperator((site,), matrix)


def operator_product(a, b):
    """``a @ b`` as a local operator on the union of supports."""
    sites = tuple(sorted(set(a.support) | set(b.support)))
    return LocalOperator(sites, a.embed(sites) @ b.embed(sites))


def apply_operator(state, op, n=None):
    state = np.asarray(state, dtype=complex).ravel()
    n = num_qubits(state) if n is None else n
    return apply_matrix(state, op.matrix, list(op.support), n)


def expectation(state, op):
    state = np.asarray(state, dtype=complex).ravel()
    return complex(np.vdot(state, apply_operator(state, op)))


def reduced_density_matrix(state, region):
    """Partial trace of ``|state><state|`` onto ``region`` (sites in increasing order)."""
    state = np.asarray(state, dtype=complex).ravel()
    n = num_qubits(state)
    region = check_region(region, n)
    psi = np.moveaxis(state.reshape((2,) * n), region, range(len(region)))
    m = psi.reshape(2 ** len(region), -1)
    return m @ m.conj().T


def rdm_difference_norm(a, b, region):
    return trace_norm(reduced_density_matrix(a, region) - reduced_density_matrix(b, region))


def state_overlap(a, b):
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def fubini_study_angle(a, b):
    return float(np.arccos(min(1.0, abs(state_overlap(a, b)))))


def pure_state_trace_distance(a, b):
    """``|| aa^dag - bb^dag ||_1`` in closed form, ``2 sin`` of the Fubini-Study angle."""
    return 2.0 * np.sqrt(max(0.0, 1.0 - abs(state_overlap(a, b)) ** 2))


def _embed_gate(matrix, qubits, sites):
    k = len(sites)
    pos = [sites.index(q) for q in qubits]
    eye = np.eye(2 ** k, dtype=complex)
    return np.stack([apply_matrix(eye[:, j], matrix, pos, k) for j in range(2 ** k)], axis=1)


def conjugate_operator(circuit, op):
    """``U O U^dagger`` restricted to its forward light cone."""
    sites = forward_lightcone(circuit, op.support)
    if len(sites) > MAX_OPERATOR_QUBITS:
        raise ValueError(f"light cone of {len(sites)} sites is too large to build densely")
    m = op.embed(sites)
    cone = set(op.support)
    for layer in circuit.layers:
        for gate in layer:
            if cone.intersection(gate.qubits):
                cone.update(gate.qubits)
                g = _embed_gate(gate.matrix, gate.qubits, sites)
                m = g @ m @ g.conj().T
    return LocalOperator(sites, m)


def conjugated_parent_projector(circuit, site):
    """``(1 - U Z_site U^dagger) / 2``, the projector annihilating ``U|0^n>``."""
    zc = conjugate_operator(circuit, single_site(PAULI_Z, site))
    dim = zc.matrix.shape[0]
    return LocalOperator(zc.support, 0.5 * (np.eye(dim) - zc.matrix))


def parent_projectors(circuit):
    return [conjugated_parent_projector(circuit, i) for i in range(circuit.n)]


@dataclass
class ClusteringReport:
    support_p: tuple
    support_q: tuple
    cone_p: tuple
    cone_q: tuple
    cones_intersect: bool
    expect_pq: float
    expect_p: float
    expect_q: float
    residual: float


def clustering_check(circuit, p, q, state=None):
    """Compare ``<PQ>`` with ``<P><Q>`` on ``U|0^n>``.

    When the backward light cones of the two supports are disjoint the state
    factorizes over them and the residual must vanish.
    """
    if set(p.support) & set(q.support):
        raise ValueError("P and Q must have disjoint supports")
    psi = apply_circuit(circuit) if state is None else check_state(state, circuit.n)
    cone_p = backward_lightcone(circuit, p.support)
    cone_q = backward_lightcone(circuit, q.support)
    intersect = bool(set(cone_p) & set(cone_q))
    epq = expectation(psi, operator_product(p, q)).real
    ep = expectation(psi, p).real
    eq = expectation(psi, q).real
    residual = abs(epq - ep * eq)
    if not intersect and residual > 1e-10:
        raise AssertionError(f"disjoint light cones but residual {residual:.3g}")
    return ClusteringReport(p.support, q.support, cone_p, cone_q, intersect, epq, ep, eq, residual)


def random_unitary(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(n, rng):
    psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return psi / np.linalg.norm(psi)


def _candidate_pairs(n, conn):
    return [(a, b) for a in range(n) for b in range(a + 1, n) if conn.allows((a, b))]


def random_circuit(n, depth, conn, rng, two_qubit_fraction=0.7):
    """Random circuit of exactly ``depth`` layers respecting ``conn``.

    Each layer greedily places Haar-random two-qubit gates on shuffled
    allowed pairs, then fills some leftover sites with random single-qubit
    gates.
    """
    pairs = _candidate_pairs(n, conn)
    layers = []
    for _ in range(depth):
        used, layer = set(), []
        for idx in rng.permutation(len(pairs)):
            a, b = pairs[idx]
            if a in used or b in used or rng.random() > two_qubit_fraction:
                continue
            used.update((a, b))
            layer.append(Gate("U2", (a, b), random_unitary(4, rng)))
        for q in range(n):
            if q not in used and rng.random() < 0.5:
                layer.append(Gate("U1", (q,), random_unitary(2, rng)))
        layers.append(layer)
    return Circuit(n, layers, conn)

