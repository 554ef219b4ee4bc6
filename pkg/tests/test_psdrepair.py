import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from optdep.psdrepair import NotSymmetricError, repair_psd, spectral_decompose


def _random_symmetric(n, seed, shift=0.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T) + shift * np.eye(n)


def test_identity_eigenvalues():
    dec = spectral_decompose(np.eye(3))
    assert_allclose(dec.eigenvalues, [1, 1, 1])


def test_two_by_two_eigenvalues():
    dec = spectral_decompose([[1.0, 2.0], [2.0, 1.0]])
    assert_allclose(dec.eigenvalues, [3.0, -1.0], atol=1e-14)
    # eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2 up to sign
    assert_allclose(np.abs(dec.eigenvectors), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_decomposition_invariants(seed):
    m = _random_symmetric(8, seed)
    dec = spectral_decompose(m)
    q = dec.eigenvectors
    assert np.max(np.abs(q.T @ q - np.eye(8))) <= 1e-10
    assert np.max(np.abs(dec.reconstruct() - m)) <= 1e-8 * np.max(np.abs(m))
    assert np.all(np.diff(dec.eigenvalues) <= 0)


def test_decomposition_deterministic():
    m = _random_symmetric(10, 3)
    a, b = spectral_decompose(m), spectral_decompose(m.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


@pytest.mark.parametrize("m", [[[1.0, 2.0], [2.1, 1.0]], np.ones((2, 3))])
def test_not_symmetric(m):
    with pytest.raises(NotSymmetricError):
        spectral_decompose(m)
    with pytest.raises(NotSymmetricError):
        repair_psd(m)


def test_psd_input_untouched():
    m = _random_symmetric(6, 1)
    m = m @ m.T
    res = repair_psd(m, 0.0)
    assert np.array_equal(res.perturbation, np.zeros_like(m))
    assert res.frobenius_norm == 0.0
    assert np.array_equal(res.matrix, m)


def test_two_by_two_repair():
    res = repair_psd([[1.0, 2.0], [2.0, 1.0]], 0.0)
    assert_allclose(res.matrix, [[1.5, 1.5], [1.5, 1.5]], atol=1e-14)
    assert res.frobenius_norm == pytest.approx(1.0)
    assert_allclose(res.perturbation, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-14)


def test_negative_delta_rejected():
    with pytest.raises(ValueError):
        repair_psd(np.eye(2), -1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 16), st.sampled_from([0.0, 1e-8, 1e-6, 0.5]),
       st.floats(-3, 3))
def test_repair_properties(n, seed, delta, shift):
    m = _random_symmetric(n, seed, shift)
    res = repair_psd(m, delta)
    lam = np.linalg.eigvalsh(res.matrix)
    assert lam[0] >= delta - 1e-10
    # closed-form norm agrees with the matrix norm of the perturbation
    ev = np.linalg.eigvalsh(m)
    closed = np.sqrt(np.sum(np.where(ev < delta, delta - ev, 0.0) ** 2))
    assert res.frobenius_norm == pytest.approx(closed, rel=1e-10, abs=1e-14)
    assert np.linalg.norm(res.perturbation, "fro") == pytest.approx(res.frobenius_norm, rel=1e-10, abs=1e-13)
    assert_allclose(res.matrix - m, res.perturbation, atol=1e-12)
    assert np.max(np.abs(res.matrix - res.matrix.T)) <= 1e-12
    again = repair_psd(res.matrix, delta)
    assert np.max(np.abs(again.perturbation)) <= 1e-10


def test_repair_matches_spectral_clipping():
    m = _random_symmetric(7, 11)
    dec = spectral_decompose(m)
    expected = dec.reconstruct(np.maximum(dec.eigenvalues, 1e-3))
    assert_allclose(repair_psd(m, 1e-3).matrix, expected, atol=1e-12)


def test_forced_negative_eigenvalue_becomes_invertible():
    m = _random_symmetric(9, 5)
    dec = spectral_decompose(m)
    lam = dec.eigenvalues.copy()
    lam[-1] = -2.0
    m = dec.reconstruct(lam)
    m = 0.5 * (m + m.T)
    res = repair_psd(m, 1e-6)
    assert np.linalg.eigvalsh(res.matrix)[0] >= 1e-6 - 1e-10
    np.linalg.cholesky(res.matrix)
