import numpy as np
import pytest

from relaybf import matkernel as mk
from _oracles import double_loop_vec_identity, rand_herm


def test_herm_eig_diagonal():
    pair = mk.herm_eig(np.diag([3.0, 1.0]))
    assert np.allclose(pair.eigenvalues, [3.0, 1.0])
    assert np.allclose(np.abs(pair.basis), np.eye(2))


def test_herm_eig_rank_one_outer():
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    pair = mk.herm_eig(np.outer(v, v))
    assert np.allclose(pair.eigenvalues, [1.0, 0.0], atol=1e-12)


def test_herm_eig_reconstruction_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rand_herm(rng, 8)
        vals, basis = mk.herm_eig(m)
        assert np.all(np.diff(vals) <= 1e-12)
        recon = (basis * vals) @ basis.conj().T
        assert np.linalg.norm(recon - m) <= 1e-9 * max(np.linalg.norm(m), 1e-30)
        assert np.linalg.norm(basis.conj().T @ basis - np.eye(8)) <= 1e-9


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(mk.NotHermitianError):
        mk.herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_psd_sqrt_trivial():
    assert np.allclose(mk.psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(mk.psd_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]))


def test_psd_sqrt_random_multiplication():
    rng = np.random.default_rng(2)
    for _ in range(10):
        m = rand_herm(rng, 16, psd=True)
        s = mk.psd_sqrt(m)
        assert np.linalg.norm(s @ s - m) <= 1e-8 * np.linalg.norm(m)
        assert np.linalg.norm(s - s.conj().T) <= 1e-12 * max(1.0, np.abs(s).max())


def test_psd_sqrt_projector_idempotent():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    q, _ = np.linalg.qr(a)
    proj = q @ q.conj().T
    assert np.allclose(mk.psd_sqrt(proj), proj, atol=1e-10)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(mk.NotPsdError):
        mk.psd_sqrt(np.diag([1.0, -0.1]))


def test_psd_sqrt_clamps_tiny_negatives():
    m = np.diag([1.0, -1e-12])
    s = mk.psd_sqrt(m)
    assert np.allclose(s, np.diag([1.0, 0.0]), atol=1e-9)


def test_sample_cn_zero_covariance():
    rng = np.random.default_rng(4)
    assert np.allclose(mk.sample_cn(np.zeros((3, 3)), rng), 0.0)


def test_sample_cn_deterministic():
    a = mk.sample_cn(np.eye(4), np.random.default_rng(7))
    b = mk.sample_cn(np.eye(4), np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_sample_cn_identity_covariance_moments():
    rng = np.random.default_rng(5)
    n = 4
    draws = np.array([mk.sample_cn(np.eye(n), rng) for _ in range(20_000)])
    cov = draws.conj().T @ draws / draws.shape[0]
    assert np.abs(cov - np.eye(n)).max() < 0.05


def test_sample_cn_scaling_linearity():
    rng = np.random.default_rng(6)
    cov = rand_herm(rng, 5, psd=True)
    c = 2.7
    a = mk.sample_cn(c * cov, np.random.default_rng(11))
    b = mk.sample_cn(cov, np.random.default_rng(11))
    assert np.allclose(a, np.sqrt(c) * b, rtol=1e-10, atol=1e-12)


def test_kron_hadamard_trivial():
    assert np.allclose(mk.kron([1.0, 0.0], [0.0, 1.0]), [0.0, 1.0, 0.0, 0.0])
    assert np.allclose(mk.hadamard([1.0, 2.0], [3.0, 4.0]), [3.0, 8.0])
    with pytest.raises(ValueError):
        mk.hadamard([1.0, 2.0], [3.0])


def test_vectorization_identity():
    rng = np.random.default_rng(8)
    for _ in range(20):
        L = rng.integers(2, 6)
        q = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        f = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        v = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
        lhs = np.conj(q) @ v @ f
        rhs = np.vdot(mk.kron(f.conj(), q), mk.vec(v))
        direct = double_loop_vec_identity(q, v, f)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))
        assert abs(lhs - direct) < 1e-12 * max(1.0, abs(lhs))


def test_unvec_roundtrip():
    rng = np.random.default_rng(9)
    v = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.array_equal(mk.unvec(mk.vec(v), 3), v)
