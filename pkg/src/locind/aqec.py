"""Subsystem variance, distinguishing operators and code-level conditions."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .circuits import (Connectivity, LocalOperator, apply_circuit, apply_operator, check_state,
                       conjugated_parent_projector, expectation, lightcone_function, num_qubits,
                       operator_product, pure_state_trace_distance, state_overlap)
from .linalg import batched_trace_norm, trace_norm

E = math.e
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class Code:
    """Orthonormal basis (rows) of a ``2^k``-dimensional subspace of ``n`` qubits."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=complex))
        k = int(round(np.log2(b.shape[0])))
        if 2 ** k != b.shape[0]:
            raise ValueError(f"a code needs 2^k basis states, got {b.shape[0]}")
        num_qubits(b[0])
        gram = b.conj() @ b.T
        if not np.allclose(gram, np.eye(b.shape[0]), atol=1e-10, rtol=0):
            raise ValueError("code basis is not orthonormal")
        self.basis = b

    @property
    def n(self):
        return num_qubits(self.basis[0])

    @property
    def k(self):
        return int(round(np.log2(self.basis.shape[0])))

    def state(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        return coeffs @ self.basis / np.linalg.norm(coeffs)

    def projector_onto(self, state):
        """Coefficients of the projection of ``state`` onto the code space."""
        return self.basis.conj() @ np.asarray(state, dtype=complex)


def _region_blocks(basis, region, n):
    """``R[a, b] = tr_rest |psi_a><psi_b|`` for every pair of basis states."""
    d = len(region)
    psi = basis.reshape((basis.shape[0],) + (2,) * n)
    psi = np.moveaxis(psi, [1 + q for q in region], range(1, d + 1))
    m = psi.reshape(basis.shape[0], 2 ** d, -1)
    return np.einsum("aix,bjx->abij", m, m.conj())


@dataclass
class VarianceReport:
    d: int
    epsilon: float
    argmax_region: tuple
    argmax_coeffs: np.ndarray
    samples_evaluated: int
    seed: int = 0

    def as_dict(self):
        return {"d": self.d, "epsilon": self.epsilon, "argmax_region": list(self.argmax_region),
                "argmax_coeffs": [[float(c.real), float(c.imag)] for c in self.argmax_coeffs],
                "samples_evaluated": self.samples_evaluated, "seed": self.seed}


def variance_at(code, region, coeffs):
    """``|| tr_rest(|psi><psi| - Gamma) ||_1`` for one region and code state."""
    blocks = _region_blocks(code.basis, tuple(region), code.n)
    gamma = np.mean([blocks[a, a] for a in range(blocks.shape[0])], axis=0)
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    rho = np.einsum("a,b,abij->ij", c, c.conj(), blocks)
    return trace_norm(rho - gamma)


def _candidates(k, grid_points, random_samples, rng):
    dim = 2 ** k
    cands = [np.eye(dim, dtype=complex)]
    if k == 1 and grid_points > 0:
        side = max(2, int(round(math.sqrt(grid_points))))
        theta = np.linspace(0.0, np.pi / 2, side)
        phi = np.linspace(0.0, 2 * np.pi, side, endpoint=False)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        cands.append(np.stack([np.cos(tt).ravel(), (np.sin(tt) * np.exp(1j * pp)).ravel()], axis=1))
    if k >= 1 and random_samples > 0:
        z = rng.normal(size=(random_samples, dim)) + 1j * rng.normal(size=(random_samples, dim))
        cands.append(z / np.linalg.norm(z, axis=1, keepdims=True))
    return np.concatenate(cands, axis=0)


def _evaluate(blocks, gamma, coeffs):
    rho = np.einsum("sa,sb,abij->sij", coeffs, coeffs.conj(), blocks)
    return batched_trace_norm(rho - gamma)


def _refine(blocks, gamma, coeffs, rounds, width=0.25, inner=30):
    """Coordinate ascent over the real and imaginary parts of each coefficient."""
    x = np.concatenate([coeffs.real, coeffs.imag])
    dim = coeffs.size

    def value(v):
        c = v[:dim] + 1j * v[dim:]
        nrm = np.linalg.norm(c)
        if nrm < 1e-12:
            return -1.0
        return float(_evaluate(blocks, gamma, (c / nrm)[None, :])[0])

    best = value(x)
    for r in range(rounds):
        h = width / (2 ** r)
        for j in range(x.size):
            lo, hi = x[j] - h, x[j] + h
            a = hi - _GOLDEN * (hi - lo)
            b = lo + _GOLDEN * (hi - lo)

            def at(t):
                y = x.copy()
                y[j] = t
                return value(y)

            fa, fb = at(a), at(b)
            for _ in range(inner):
                if fa > fb:
                    hi, b, fb = b, a, fa
                    a = hi - _GOLDEN * (hi - lo)
                    fa = at(a)
                else:
                    lo, a, fa = a, b, fb
                    b = lo + _GOLDEN * (hi - lo)
                    fb = at(b)
            t = a if fa > fb else b
            ft = max(fa, fb)
            if ft > best:
                x[j], best = t, ft
    c = x[:dim] + 1j * x[dim:]
    return c / np.linalg.norm(c), best


def subsystem_variance(code, d, grid_points=2500, random_samples=2000, refine_iters=3,
                       seed=0, n_jobs=1, refine_regions=4):
    """Certified lower estimate of the subsystem variance at region size ``d``.

    Every region of exactly ``d`` sites is enumerated. Code states are drawn
    from the basis, an angle grid (``k == 1``) and Haar-random coefficient
    vectors (``k >= 1``); the best candidates of the leading regions are then
    polished by golden-section coordinate ascent. The reported value is a
    Jacobi-certified evaluation at the returned point, so it never exceeds
    the true maximum.
    """
    n, k = code.n, code.k
    if not 0 <= d <= n:
        raise ValueError(f"region size {d} not in [0, {n}]")
    if d == 0 or k == 0:
        return VarianceReport(d, 0.0, tuple(range(d)), np.ones(1, dtype=complex), 0, seed)
    rng = np.random.default_rng(seed)
    cands = _candidates(k, grid_points, random_samples, rng)
    regions = list(combinations(range(n), d))

    def scan(region):
        blocks = _region_blocks(code.basis, region, n)
        gamma = np.mean([blocks[a, a] for a in range(blocks.shape[0])], axis=0)
        vals = _evaluate(blocks, gamma, cands)
        j = int(np.argmax(vals))
        return float(vals[j]), j, blocks, gamma

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            scans = list(pool.map(scan, regions))
    else:
        scans = [scan(r) for r in regions]

    # stable sort keeps the lowest region on ties
    order = sorted(range(len(regions)), key=lambda r: -scans[r][0])
    best_val, best_region, best_coeffs = -1.0, None, None
    for r in order[:max(1, refine_regions)]:
        val, j, blocks, gamma = scans[r]
        coeffs = cands[j]
        if refine_iters > 0:
            coeffs, val = _refine(blocks, gamma, coeffs, refine_iters)
        if val > best_val + 1e-15:
            best_val, best_region, best_coeffs = val, regions[r], coeffs
    # fix the global phase so reports are reproducible
    lead = best_coeffs[np.argmax(np.abs(best_coeffs) > 1e-12)]
    best_coeffs = best_coeffs * (abs(lead) / lead)
    eps = variance_at(code, best_region, best_coeffs)
    return VarianceReport(d, eps, best_region, best_coeffs,
                          len(regions) * len(cands), seed)


@dataclass
class CertificateReport:
    p: float
    K: int
    c: float
    condition_holds: bool
    bound: float
    exact: float
    status: str
    expectations: list = field(default_factory=list)

    @property
    def contradiction(self):
        return self.status == "contradiction"

    def as_dict(self):
        return {"p": self.p, "K": self.K, "c": self.c, "condition_holds": self.condition_holds,
                "bound": self.bound, "exact": self.exact, "status": self.status,
                "expectations": self.expectations}


def _check_projectors(projectors, atol=1e-8):
    for i, p in enumerate(projectors):
        if not np.allclose(p.matrix @ p.matrix, p.matrix, atol=atol, rtol=0) or not p.is_hermitian(atol):
            raise ValueError(f"operator {i} is not an orthogonal projector")
    for i in range(len(projectors)):
        for j in range(i + 1, len(projectors)):
            a, b = projectors[i], projectors[j]
            if not set(a.support) & set(b.support):
                continue
            ab = operator_product(a, b).matrix
            ba = operator_product(b, a).matrix
            if not np.allclose(ab, ba, atol=atol, rtol=0):
                raise ValueError(f"projectors {i} and {j} do not commute")


def commuting_projector_certificate(projectors, state, regions=None, c=1.0):
    """Evaluate the local-lemma certificate for a commuting projector family.

    ``p`` is the largest projector expectation, ``K`` the largest number of
    other projectors touching a region ``R_i``. When ``c e (K+1) p <= 1`` the
    ground-space weight must exceed ``(1 - c e p)^n``; if the exact weight
    does not, the status is ``"contradiction"``, meaning the clustering
    hypothesis fails for this state.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    state = check_state(state)
    n_proj = len(projectors)
    if regions is None:
        regions = [tuple(p.support) for p in projectors]
    if len(regions) != n_proj:
        raise ValueError("need one region per projector")
    for i, (p, r) in enumerate(zip(projectors, regions)):
        if not set(p.support) <= set(r):
            raise ValueError(f"region {i} does not cover the support of projector {i}")
    _check_projectors(projectors)

    exps = [expectation(state, p).real for p in projectors]
    p_max = max(exps) if exps else 0.0
    K = 0
    for i, r in enumerate(regions):
        touching = sum(1 for j, q in enumerate(projectors) if j != i and set(q.support) & set(r))
        K = max(K, touching)
    holds = c * E * (K + 1) * p_max <= 1.0
    bound = (1.0 - c * E * p_max) ** n_proj if holds else None

    psi = state
    for p in projectors:
        psi = psi - apply_operator(psi, p)
    exact = float(np.vdot(psi, psi).real)

    if not holds:
        status = "condition-violation"
    elif exact > bound or (p_max == 0.0 and exact >= bound - 1e-12):
        status = "certified"
    else:
        status = "contradiction"
    return CertificateReport(p_max, K, c, holds, bound, exact, status, exps)


def parent_certificate(circuit, state, c=1.0):
    """Certificate with the parent projectors of ``circuit`` and regions equal to supports."""
    projs = [conjugated_parent_projector(circuit, i) for i in range(circuit.n)]
    return commuting_projector_certificate(projs, state, None, c)


def distinguishability_bound(delta, n, t, conn):
    """Right-hand side ``(2/e) min{1 - delta^(2/n), 1/f(4t)}``; ``0^(2/n)`` is 0."""
    first = 1.0 - (0.0 if delta == 0 else delta ** (2.0 / n))
    return (2.0 / E) * min(first, 1.0 / lightcone_function(conn, 4 * t))


@dataclass
class DistinguishReport:
    operator: LocalOperator
    value: float
    bound: float
    t: int
    delta: float
    connectivity: Connectivity
    site: int
    overlap: float
    status: str = "ok"

    @property
    def holds(self):
        return self.status == "ok" and self.value > self.bound

    def as_dict(self):
        conn = self.connectivity
        return {"status": self.status, "value": self.value, "bound": self.bound,
                "holds": self.holds, "t": self.t, "delta": self.delta, "site": self.site,
                "overlap": self.overlap,
                "connectivity": {"kind": conn.kind, "dims": list(conn.dims), "periodic": conn.periodic},
                "operator": None if self.operator is None else {
                    "support": list(self.operator.support),
                    "matrix": [[[float(z.real), float(z.imag)] for z in row]
                               for row in self.operator.matrix]}}


def distinguishing_operator(circuit1, state2):
    """``2 P* - 1`` for the parent projector of ``circuit1`` most excited by ``state2``.

    Ties go to the lowest site. ``value`` is ``2 <psi2|P*|psi2>``, which is
    the expectation gap because ``P*`` annihilates ``U1|0^n>``.
    """
    state2 = check_state(state2, circuit1.n)
    psi1 = apply_circuit(circuit1)
    best, best_site, best_proj = -1.0, None, None
    for i in range(circuit1.n):
        proj = conjugated_parent_projector(circuit1, i)
        v = expectation(state2, proj).real
        if v > best + 1e-13:
            best, best_site, best_proj = v, i, proj
    dim = best_proj.matrix.shape[0]
    op = LocalOperator(best_proj.support, 2.0 * best_proj.matrix - np.eye(dim))
    value = abs(expectation(psi1, op).real - expectation(state2, op).real)
    overlap = abs(state_overlap(psi1, state2))
    bound = distinguishability_bound(overlap, circuit1.n, circuit1.depth, circuit1.connectivity)
    return DistinguishReport(op, value, bound, circuit1.depth, overlap, circuit1.connectivity,
                             best_site, overlap)


def verify_distinguishability(circuit1, circuit2, delta):
    """Check the expectation gap against ``(2/e) min{1 - delta^(2/n), 1/f(4t)}``.

    Both directions are tried and the larger gap kept. An overlap above
    ``delta`` yields a ``"precondition-violation"`` report rather than an
    exception.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    if circuit1.n != circuit2.n:
        raise ValueError("circuits act on different qubit counts")
    if circuit1.connectivity != circuit2.connectivity:
        raise ValueError("circuits use different connectivity models")
    psi1, psi2 = apply_circuit(circuit1), apply_circuit(circuit2)
    overlap = abs(state_overlap(psi1, psi2))
    t = max(circuit1.depth, circuit2.depth)
    conn = circuit1.connectivity
    bound = distinguishability_bound(delta, circuit1.n, t, conn)
    if overlap > delta + 1e-12:
        return DistinguishReport(None, 0.0, bound, t, delta, conn, None, overlap,
                                 status="precondition-violation")
    a = distinguishing_operator(circuit1, psi2)
    b = distinguishing_operator(circuit2, psi1)
    best = a if a.value >= b.value else b
    status = "ok" if best.value > bound else "violated"
    return DistinguishReport(best.operator, best.value, bound, t, delta, conn, best.site,
                             overlap, status)


@dataclass
class SvBoundReport:
    status: str
    t: int
    delta: float
    f_t: int
    f_4t: int
    delta_threshold: float
    epsilon: float
    rhs: float
    margin: float
    holds: bool
    variance: VarianceReport = None
    message: str = ""

    def as_dict(self):
        out = {k: getattr(self, k) for k in ("status", "t", "delta", "f_t", "f_4t", "delta_threshold",
                                             "epsilon", "rhs", "margin", "holds", "message")}
        out["variance"] = None if self.variance is None else self.variance.as_dict()
        return out


def sv_lower_bound_check(code, circuits, t, delta, conn=None, **search):
    """Evaluate ``eps(f(t)) > 1/(e f(4t)) - delta`` for a code with two shallow states.

    The theorem applies when ``delta <= (1 - 1/f(4t))^(n/2)``, both circuits
    have depth at most ``t`` and each prepares a state within trace distance
    ``delta`` of a code state, the two code states being orthogonal.
    Inapplicability is reported, not raised.
    """
    c1, c2 = circuits
    conn = c1.connectivity if conn is None else conn
    n = code.n
    ft, f4t = lightcone_function(conn, t), lightcone_function(conn, 4 * t)
    threshold = (1.0 - 1.0 / f4t) ** (n / 2.0)
    rhs = 1.0 / (E * f4t) - delta

    def report(status, msg, eps=float("nan"), var=None, holds=False):
        return SvBoundReport(status, t, delta, ft, f4t, threshold, eps, rhs,
                             eps - rhs, holds, var, msg)

    if delta > threshold:
        return report("theorem-inapplicable", f"delta {delta} exceeds (1 - 1/f(4t))^(n/2) = {threshold:.6g}")
    if max(c1.depth, c2.depth) > t:
        return report("precondition-violation", "a preparation circuit is deeper than t")
    nearest = []
    for circ in (c1, c2):
        psi = apply_circuit(circ)
        coeffs = code.projector_onto(psi)
        if np.linalg.norm(coeffs) < 1e-12:
            return report("precondition-violation", "a prepared state is orthogonal to the code")
        phi = code.state(coeffs)
        if pure_state_trace_distance(psi, phi) > delta + 1e-9:
            return report("precondition-violation", "a prepared state is farther than delta from the code")
        nearest.append(phi)
    if abs(state_overlap(*nearest)) > 1e-8:
        return report("precondition-violation", "the nearest code states are not orthogonal")
    var = subsystem_variance(code, min(ft, n), **search)
    holds = var.epsilon > rhs
    return report("ok" if holds else "violated", "", var.epsilon, var, holds)


def clifford_group_1q():
    """The 24 single-qubit Cliffords modulo phase, generated from H and S."""
    from .circuits import NAMED_GATES

    gens = [NAMED_GATES["H"], NAMED_GATES["S"]]

    def canon(u):
        flat = u.ravel()
        lead = flat[np.argmax(np.abs(flat) > 1e-9)]
        v = u * (abs(lead) / lead)
        return tuple(np.round(v.ravel(), 9).tolist())

    group = {canon(np.eye(2, dtype=complex)): np.eye(2, dtype=complex)}
    frontier = list(group.values())
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = canon(w)
                if key not in group:
                    group[key] = w
                    nxt.append(w)
        frontier = nxt
    return list(group.values())


def clifford_average_overlap(state, k=1):
    """Group average of ``|<psi|U|psi>|^2`` over the Clifford group on ``k`` qubits."""
    if k != 1:
        raise NotImplementedError("only the single-qubit Clifford group is enumerated")
    psi = check_state(state, 1)
    group = clifford_group_1q()
    avg = float(np.mean([abs(np.vdot(psi, u @ psi)) ** 2 for u in group]))
    if abs(avg - 0.5) > 1e-10:
        raise AssertionError(f"Clifford average {avg} differs from 1/2")
    return avg


def _leq(a, b):
    return a <= b or math.isclose(a, b, rel_tol=1e-12, abs_tol=0.0)


def code_condition_report(epsilon_ft, conn, t, k, n):
    """Evaluate the universal-transversal and transversal-Clifford code conditions."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    f4t = lightcone_function(conn, 4 * t)
    universal_rhs = 1.0 / (E * f4t)
    clifford_rhs = min(1.0 - 2.0 ** (-k / n), 1.0 / f4t) / E
    universal = _leq(epsilon_ft, universal_rhs)
    clifford = _leq(epsilon_ft, clifford_rhs)
    implied = []
    if universal:
        implied.append(f"with a universal transversal gate set, every code state has complexity > {t}")
    if clifford:
        implied.append(f"with transversal Clifford gates, every code state has complexity > {t}")
    return {"epsilon_ft": epsilon_ft, "t": t, "k": k, "n": n, "f_4t": f4t,
            "universal_rhs": universal_rhs, "universal_holds": universal,
            "clifford_rhs": clifford_rhs, "clifford_holds": clifford, "implied": implied}


def u1_filling_bound(delta_tl, delta_ti, n):
    """Lower bound ``Delta T_L / (n max_i Delta T_i)`` on the one-site subsystem variance."""
    top = max(delta_ti)
    if top <= 0:
        raise ValueError("the local charge ranges must not all vanish")
    return delta_tl / (n * top)
