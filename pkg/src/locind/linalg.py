"""Hermitian eigensolver and the norms built on it.

The eigensolver is a cyclic complex Jacobi iteration. It is slow compared
with LAPACK but has no moving parts, which is the point: trace distances in
this package are certified by it, and LAPACK is only used as a test oracle
and in hot search loops.
"""

import numpy as np

OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 100


def check_hermitian(m, atol=1e-8):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
        dev = np.max(np.abs(m - m.conj().T))
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return m


def _off_norm(a):
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def jacobi_eigh(m, tol=OFF_DIAGONAL_TOL, max_sweeps=MAX_SWEEPS, vectors=False):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies the classical real rotation that zeroes it. Sweeps stop when the
    off-diagonal Frobenius norm falls below ``tol`` (scaled by the matrix
    norm when that exceeds one).

    Returns ascending eigenvalues, plus the unitary of eigenvectors (as
    columns) when ``vectors`` is true.
    """
    a = check_hermitian(m).copy()
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex) if vectors else None
    threshold = tol * max(1.0, np.linalg.norm(a))

    for _ in range(max_sweeps):
        if _off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                if vectors:
                    v[:, idx] = v[:, idx] @ g
    else:
        if _off_norm(a) > threshold:
            raise RuntimeError("Jacobi eigensolver did not converge")

    w = np.diag(a).real
    order = np.argsort(w)
    if vectors:
        return w[order], v[:, order]
    return w[order]


def eigvalsh(m):
    return jacobi_eigh(m)


def trace_norm(m):
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(jacobi_eigh(m))))


def operator_norm(m):
    """Largest absolute eigenvalue of a Hermitian matrix."""
    w = jacobi_eigh(m)
    return float(np.max(np.abs(w))) if w.size else 0.0


def batched_trace_norm(ms):
    """Trace norms of a stack of Hermitian matrices (LAPACK, for search loops)."""
    return np.sum(np.abs(np.linalg.eigvalsh(ms)), axis=-1)


def hermitian_function(m, fn):
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = jacobi_eigh(m, vectors=True)
    return (v * fn(w)) @ v.conj().T
