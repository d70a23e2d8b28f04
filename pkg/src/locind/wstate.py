"""W states, the W code, and the two depth lower-bound pipelines for W states."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .aqec import Code
from .circuits import Circuit, Connectivity, Gate, MAX_QUBITS, num_qubits
from .linalg import trace_norm

E = math.e

# The geometric patch argument is carried out at this delta; smaller delta can
# only raise the approximate complexity.
GEOMETRIC_DELTA = 0.1
CORRELATION_DELTA = 1.0 / 3.0


def build_w(n):
    """Uniform superposition of the ``n`` weight-one basis states."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must lie in [1, {MAX_QUBITS}]")
    psi = np.zeros(2 ** n, dtype=complex)
    psi[[1 << (n - 1 - x) for x in range(n)]] = 1.0 / math.sqrt(n)
    return psi


def w_code(n):
    basis = np.zeros((2, 2 ** n), dtype=complex)
    basis[0, 0] = 1.0
    basis[1] = build_w(n)
    return Code(basis)


def patch_excitation(state, patch):
    """``<psi| (1 - |0^m><0^m|)_patch |psi>``."""
    n = num_qubits(state)
    psi = np.moveaxis(np.asarray(state).reshape((2,) * n), list(patch), range(len(patch)))
    psi = psi.reshape(2 ** len(patch), -1)
    return float(1.0 - np.sum(np.abs(psi[0]) ** 2))


def _compressed_rdm(state, regions_basis):
    """Reduced density matrix of ``state`` expressed in a basis per region.

    ``regions_basis`` is a list of ``(region, vectors)`` pairs with the
    vectors orthonormal on that region. Returns the reduced matrix on the
    tensor product of the spans and the weight of ``state`` inside it.
    """
    n = num_qubits(state)
    kept = [q for region, _ in regions_basis for q in region]
    psi = np.moveaxis(np.asarray(state, dtype=complex).reshape((2,) * n), kept, range(len(kept)))
    tensor, out_dim = psi.reshape(1, -1), 1
    for region, vecs in regions_basis:
        tensor = tensor.reshape(out_dim, 2 ** len(region), -1)
        tensor = np.einsum("vi,aix->avx", np.asarray(vecs, dtype=complex).conj(), tensor)
        out_dim *= len(vecs)
    m = tensor.reshape(out_dim, -1)
    weight = float(np.sum(np.abs(m) ** 2))
    return m @ m.conj().T, weight


def w_correlation_norm(n, k):
    """``|| W_AB - W_A (x) W_B ||_1`` for the first and last ``k`` sites.

    The numeric value comes from partial traces of the statevector, taken in
    the span of ``|0^k>`` and ``|W_k>`` on each end (the W state lies inside
    that span, which is checked). The analytic value is ``2k/n + 2k^2/n^2``.
    """
    if k == 0:
        return {"analytic": 0.0, "numeric": 0.0}
    if not 1 <= k <= n / 2:
        raise ValueError("need 1 <= k <= n/2")
    if n > 16:
        raise ValueError("n must be at most 16")
    psi = build_w(n)
    a = list(range(k))
    b = list(range(n - k, n))
    span = np.stack([np.eye(2 ** k)[0], build_w(k)])
    rho_ab, w_ab = _compressed_rdm(psi, [(a, span), (b, span)])
    rho_a, w_a = _compressed_rdm(psi, [(a, span)])
    rho_b, w_b = _compressed_rdm(psi, [(b, span)])
    for w in (w_ab, w_a, w_b):
        if abs(w - 1.0) > 1e-12:
            raise AssertionError("W state left the compressed span")
    numeric = trace_norm(rho_ab - np.kron(rho_a, rho_b))
    analytic = 2 * k / n + 2 * k * k / (n * n)
    if abs(numeric - analytic) > 1e-10:
        raise AssertionError(f"trace norm {numeric} differs from {analytic}")
    return {"analytic": analytic, "numeric": numeric}


@dataclass
class WBoundReport:
    n: int
    delta: float
    connectivity: str
    path: str
    patch_size: float
    condition_lhs: float
    condition_rhs: float
    implied_depth_bound: int
    chain_depth_bound: int = None
    correlation_k: int = None
    note: str = ""

    @property
    def t_min(self):
        return self.implied_depth_bound

    def as_dict(self):
        out = asdict(self)
        out["t_min"] = self.t_min
        return out


def _smallest_depth(pred, t_max=10_000):
    # depth 0 only prepares |0^n>, which is orthogonal to W_n
    for t in range(1, t_max + 1):
        if pred(t):
            return t
    raise RuntimeError("no depth found below the search cap")


def _patch_sizes(n, m):
    count = max(1, n // m)
    sizes = [m] * count
    sizes[-1] += n - m * count
    return sizes


def w_bound_report(n, delta, connectivity="line"):
    """Depth lower bound for preparing ``W_n`` to trace distance ``delta``.

    Paths: on a line, the patch (local lemma) argument for ``delta <= 1/10``
    and the long-range-correlation argument for ``delta < 1/3``; all-to-all,
    the patch argument for ``0 < delta < n^(-1/2)`` and the correlation
    argument otherwise below 1/3.
    """
    if connectivity not in ("line", "all"):
        raise ValueError("connectivity must be 'line' or 'all'")
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 <= delta < CORRELATION_DELTA:
        raise ValueError(f"delta = {delta} is outside every path's validity")

    if connectivity == "line" and delta <= GEOMETRIC_DELTA:
        m = max(1, int(round(delta * n)))
        m_worst = max(_patch_sizes(n, m))
        p = delta / 2 + m_worst / n
        rhs = 1.0 / E
        lll_total = (1.0 - E * p) ** (n / m) if E * p < 1 else 0.0
        chain = None
        if lll_total >= delta ** 2 / 4:
            chain = _smallest_depth(lambda t: ((m + 4 * t) / m + 2) * p > rhs)
        t_min = math.ceil(n / 3)
        lhs = ((m + 4 * t_min) / m + 2) * p
        return WBoundReport(n, delta, connectivity, "geometric-lll", m, lhs, rhs, t_min, chain,
                            note="t_min is the linear bound t > n/3 established at delta = 1/10; "
                                 "chain_depth_bound is the smallest depth violating the patch "
                                 "condition with m = delta*n")

    if connectivity == "all" and 0.0 < delta < n ** -0.5:
        alpha = -math.log(delta) / math.log(n)
        rhs = 1.0 / (3 * E)
        lhs_at = lambda t: 2.0 ** (2 * t - 1) * n ** (1 - 2 * alpha)
        t_min = _smallest_depth(lambda t: lhs_at(t) > rhs)
        return WBoundReport(n, delta, connectivity, "all-to-all-lll", delta * n, lhs_at(t_min), rhs,
                            t_min, t_min, note=f"alpha = {alpha:.6g}")

    k = max(1, math.ceil(1.5 * delta * n - 1e-12))
    if k > n / 2:
        raise ValueError(f"delta = {delta} gives k = {k} > n/2")
    if connectivity == "line":
        t_min = _smallest_depth(lambda t: k + 2 * t > n / 2)
        lhs, rhs = k + 2 * t_min, n / 2
    else:
        t_min = _smallest_depth(lambda t: (2 ** (2 * t) + 1) * k > n)
        lhs, rhs = (2 ** (2 * t_min) + 1) * k, n
    return WBoundReport(n, delta, connectivity, "correlation", float(k), float(lhs), float(rhs),
                        t_min, correlation_k=k)


def _split_gate(remaining):
    """Two-qubit gate sending ``|10>`` to ``sqrt(1/r)|10> + sqrt((r-1)/r)|01>``."""
    c = math.sqrt(1.0 / remaining)
    s = math.sqrt(1.0 - 1.0 / remaining)
    g = np.eye(4, dtype=complex)
    g[2, 2], g[1, 2] = c, s
    g[2, 1], g[1, 1] = -s, c
    return g


def w_staircase_circuit(n):
    """Linear-depth W preparation on a line: X on site 0, then a chain of splits."""
    layers = [[Gate("X", (0,))]]
    for i in range(n - 1):
        layers.append([Gate(f"split{n - i}", (i, i + 1), _split_gate(n - i))])
    return Circuit(n, layers, Connectivity.line(n))


def translate(state, shift=1):
    """Cyclic translation ``T^shift`` on equal local dimensions (site x -> x+1)."""
    n = num_qubits(state)
    psi = np.asarray(state).reshape((2,) * n)
    for _ in range(shift % n):
        psi = np.moveaxis(psi, n - 1, 0)
    return psi.reshape(-1)
