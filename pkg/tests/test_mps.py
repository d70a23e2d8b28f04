import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locind.circuits import Gate, apply_circuit, reduced_density_matrix
from locind.mps import (ChargeAssignment, MPSTensor, NotTranslationInvariant, TiledCircuit, aklt_tensor,
                        canonicalize, charge_phase, circuit_to_imps, clustering_constant, ghz_tensor,
                        imps_correlation, imps_expectation, large_gauge_transform, lsm_conditions,
                        lsm_report, momentum_phase, product_tensor, random_tensor, ring_truncation,
                        site_rdm, transfer_matrix, translate)
from locind.wstate import build_w

Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_transfer_matrix_examples():
    np.testing.assert_allclose(transfer_matrix(product_tensor([1, 0])), [[1]])
    np.testing.assert_allclose(transfer_matrix(product_tensor([1, 0]), Z), [[1]])
    np.testing.assert_allclose(transfer_matrix(ghz_tensor()), np.diag([1, 0, 0, 1]))
    with pytest.raises(ValueError):
        transfer_matrix(ghz_tensor(), np.eye(3))


def test_transfer_matrix_identity_op_and_two_sites(rng):
    a = random_tensor(2, 3, rng)
    e = transfer_matrix(a)
    np.testing.assert_allclose(transfer_matrix(a, np.eye(2)), e, atol=1e-13)
    np.testing.assert_allclose(transfer_matrix(a, np.eye(4)), e @ e, atol=1e-12)
    np.testing.assert_allclose(transfer_matrix(a, np.kron(Z, X)), transfer_matrix(a, Z) @ transfer_matrix(a, X),
                               atol=1e-12)


def test_canonicalize_examples():
    c = canonicalize(product_tensor([0.6, 0.8]))
    assert c.is_normal and c.lambda2 == 0
    np.testing.assert_allclose(c.rho, [[1]])
    assert not canonicalize(ghz_tensor()).is_normal


def test_aklt_against_direct_diagonalization():
    a = aklt_tensor().matrices
    e = sum(np.kron(m, m.conj()) for m in a)
    mods = np.sort(np.abs(np.linalg.eigvals(e)))[::-1]
    assert mods[0] == pytest.approx(1, abs=1e-12)
    c = canonicalize(aklt_tensor())
    assert c.is_normal
    assert c.lambda2 == pytest.approx(mods[1], abs=1e-12)
    assert c.lambda2 == pytest.approx(1 / 3, abs=1e-10)
    np.testing.assert_allclose(c.rho, np.eye(2) / 2, atol=1e-10)


def test_aklt_sz_correlation():
    # spin-1 Sz correlations decay as (-1/3)^r with prefactor 4/3
    sz = np.diag([1.0, 0.0, -1.0])
    c = canonicalize(aklt_tensor())
    for gap in range(4):
        val = imps_correlation(c, sz, sz, gap).real
        assert val == pytest.approx((4 / 3) * (-1 / 3) ** (gap + 1), abs=1e-12)


def test_gauge_residuals(rng):
    for _ in range(10):
        c = canonicalize(random_tensor(3, 4, rng))
        a = c.tensor.matrices
        np.testing.assert_allclose(sum(m @ m.conj().T for m in a), np.eye(4), atol=1e-10)
        np.testing.assert_allclose(sum(m.conj().T @ c.rho @ m for m in a), c.rho, atol=1e-10)
        assert np.trace(c.rho).real == pytest.approx(1, abs=1e-12)
        assert np.max(np.abs(np.linalg.eigvals(transfer_matrix(c.tensor)))) <= 1 + 1e-8


def test_clustering_examples():
    res = clustering_constant(product_tensor([1, 0]), np.eye(2), np.eye(2))
    assert res.ell == 1 and res.c == pytest.approx(1 + res.lam)
    res = clustering_constant(aklt_tensor(), np.diag([1, 0, 0]), np.diag([1, 0, 0]), lam=0.4)
    assert res.c == pytest.approx(1 + 0.4 ** res.ell * 2)
    assert res.all_verified
    with pytest.raises(ValueError):
        clustering_constant(ghz_tensor(), np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        clustering_constant(aklt_tensor(), -np.eye(3), np.eye(3))


def test_ell_is_minimal_for_aklt():
    res = clustering_constant(aklt_tensor(), np.eye(3), np.eye(3), lam=0.4)
    c = canonicalize(aklt_tensor())
    e = transfer_matrix(c.tensor)
    einf = np.outer(np.eye(2).ravel(), c.rho.T.ravel())
    resid = e - einf
    for m in range(1, 6):
        np.testing.assert_allclose(np.linalg.matrix_power(resid, m), np.linalg.matrix_power(e, m) - einf,
                                   atol=1e-13)
    norms = [np.linalg.norm(np.linalg.matrix_power(resid, m), 2) for m in range(1, 40)]
    ok = [nm <= 0.4 ** m for m, nm in enumerate(norms, start=1)]
    assert all(ok[res.ell - 1:])
    assert res.ell == 1 or not ok[res.ell - 2]


def test_ring_truncation_examples():
    np.testing.assert_allclose(ring_truncation(product_tensor([1, 0]), 3), np.eye(8)[0])
    ghz = np.zeros(8)
    ghz[[0, 7]] = 1 / math.sqrt(2)
    np.testing.assert_allclose(ring_truncation(ghz_tensor(), 3), ghz, atol=1e-15)
    assert momentum_phase(ring_truncation(aklt_tensor(), 6), 6) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        ring_truncation(MPSTensor(np.array([[[0, 1], [0, 0]]])), 3)


def test_momentum_examples():
    assert momentum_phase(np.eye(16)[0], 4) == 0
    assert momentum_phase(build_w(5), 5) == pytest.approx(0, abs=1e-12)
    p = momentum_phase(large_gauge_transform(build_w(6), ChargeAssignment(6)), 6)
    assert p == pytest.approx(2 * math.pi - 2 * math.pi / 6, abs=1e-10)
    with pytest.raises(NotTranslationInvariant):
        momentum_phase(np.eye(8)[1], 3)


def test_large_gauge_transform_examples():
    L = 5
    q = ChargeAssignment(L)
    np.testing.assert_allclose(large_gauge_transform(np.eye(2 ** L)[0], q), np.eye(2 ** L)[0])
    expected = np.zeros(2 ** L, dtype=complex)
    for x in range(L):
        expected[1 << (L - 1 - x)] = np.exp(2j * math.pi * x / L) / math.sqrt(L)
    np.testing.assert_allclose(large_gauge_transform(build_w(L), q), expected, atol=1e-15)
    assert abs(np.vdot(build_w(L), expected)) < 1e-15
    with pytest.raises(ValueError):
        large_gauge_transform(np.ones(4) / 2, q)
    with pytest.raises(ValueError):
        ChargeAssignment(4, np.diag([0.0, 0.5]))


def test_lsm_report_examples():
    rep = lsm_report(build_w(8), ChargeAssignment(8))
    assert rep.alpha == pytest.approx(2 * math.pi / 8)
    assert rep.overlap <= 1e-10
    assert rep.table[2] <= 4 * 2 / 8
    assert lsm_report(np.eye(2 ** 6)[0], ChargeAssignment(6)).status == "theorem-inapplicable"
    rep = lsm_report(build_w(8), ChargeAssignment(8), t=2, delta=0.0)
    threshold = math.sqrt(8 * 2 / (9 * math.pi) / (7 * math.e))
    assert rep.conditions["cond2_threshold"] == pytest.approx(threshold)
    assert rep.conditions["cond2_holds"]


def test_lsm_conditions_arithmetic():
    c = lsm_conditions(1, 0.001, 1000, 1.0)
    inner = 1 - math.e * 0.001 - math.e * (9 * math.pi / 2000) ** 2
    assert c["cond1_rhs"] == pytest.approx(inner ** 1000)
    assert not c["cond1_holds"]
    threshold = math.sqrt(1000 * 2 / (9 * math.pi) * (1 / (7 * math.e) - 0.001))
    assert c["cond2_threshold"] == pytest.approx(threshold)
    assert threshold > 1 and not c["cond2_holds"]
    assert c["depth_excluded"]
    assert lsm_conditions(1, 0.01, 100, 1.0)["cond1_holds"]
    assert lsm_conditions(3, 0.2, 10, 1.0)["cond2_threshold"] == 0.0


def test_charge_phase_requires_sector():
    mixed = (np.eye(4)[0] + np.eye(4)[1]) / math.sqrt(2)
    with pytest.raises(ValueError):
        charge_phase(mixed, ChargeAssignment(2))


def cluster_cell():
    return TiledCircuit(2, [[Gate("H", (0,)), Gate("H", (1,))], [Gate("CZ", (1, 2))]])


def test_circuit_to_imps_trivial_cases():
    assert circuit_to_imps(TiledCircuit(2, [])).bond_dim == 1
    ident = TiledCircuit(2, [[Gate("I", (0,)), Gate("I", (1,))]])
    assert circuit_to_imps(ident).bond_dim == 1
    assert circuit_to_imps(cluster_cell()).bond_dim == 2


def test_circuit_to_imps_guards():
    with pytest.raises(ValueError):
        TiledCircuit(2, [[]] * 3)
    with pytest.raises(ValueError):
        TiledCircuit(2, [[Gate("CZ", (0, 2))]])
    with pytest.raises(ValueError):
        TiledCircuit(2, [[Gate("CZ", (0, 1)), Gate("CZ", (1, 2))]])


def test_circuit_to_imps_matches_ring():
    cell = cluster_cell()
    canon = canonicalize(circuit_to_imps(cell))
    psi = apply_circuit(cell.ring(5))
    rho = reduced_density_matrix(psi, [2, 3, 4, 5])
    i2 = np.eye(2)
    ops = [np.kron(np.kron(Z, i2), np.eye(4)), np.kron(np.kron(i2, Z), np.kron(Z, i2)),
           np.kron(np.kron(i2, X), np.kron(Z, i2)), np.kron(np.kron(X, Z), np.eye(4))]
    for op in ops:
        assert imps_expectation(canon, op).real == pytest.approx(np.trace(op @ rho).real, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 3), st.integers(1, 3), st.integers(3, 7))
def test_ring_is_translation_invariant(seed, chi, d, L):
    rng = np.random.default_rng(seed)
    psi = ring_truncation(random_tensor(chi, d, rng), L)
    np.testing.assert_allclose(translate(psi, L), psi, atol=1e-10)
    assert momentum_phase(psi, L) == pytest.approx(0, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 8))
def test_momentum_additivity(seed, L):
    rng = np.random.default_rng(seed)
    # a random translation-invariant state in a fixed charge sector
    k = int(rng.integers(1, L))
    psi = np.zeros(2 ** L, dtype=complex)
    for s in range(2 ** L):
        if bin(s).count("1") == k:
            psi[s] = rng.normal() + 1j * rng.normal()
    psi = sum(translate(psi, L, r) for r in range(L))
    if np.linalg.norm(psi) < 1e-8:
        return
    psi /= np.linalg.norm(psi)
    q = ChargeAssignment(L)
    alpha = charge_phase(psi, q)
    shifted = momentum_phase(large_gauge_transform(psi, q), L)
    diff = (shifted - (momentum_phase(psi, L) - alpha)) % (2 * math.pi)
    assert min(diff, 2 * math.pi - diff) <= 1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_clustering_property(seed):
    rng = np.random.default_rng(seed)
    a = random_tensor(2, int(rng.integers(1, 4)), rng)
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    n = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    res = clustering_constant(a, m @ m.conj().T, n @ n.conj().T)
    assert res.all_verified


def test_site_rdm_matches_circuit_rdm(rng):
    psi = rng.normal(size=32) + 1j * rng.normal(size=32)
    psi /= np.linalg.norm(psi)
    np.testing.assert_allclose(site_rdm(psi, [1, 3], 2, 5), reduced_density_matrix(psi, [1, 3]), atol=1e-14)
