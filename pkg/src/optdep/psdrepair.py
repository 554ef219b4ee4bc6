"""Spectral decomposition and minimal-Frobenius eigenvalue repair."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SYMMETRY_TOL = 1e-12
DEFAULT_DELTA = 1e-8


class NotSymmetricError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self, values=None):
        lam = self.eigenvalues if values is None else np.asarray(values, dtype=float)
        q = self.eigenvectors
        return (q * lam) @ q.T


def _check_symmetric(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetricError("matrix is not symmetric")
    return m


def spectral_decompose(m) -> SpectralDecomposition:
    """Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.

    Backed by LAPACK's symmetric solver on the symmetrised input.
    """
    m = _check_symmetric(m)
    w, q = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(w[order], q[:, order])


class PsdRepair(NamedTuple):
    matrix: np.ndarray
    perturbation: np.ndarray
    frobenius_norm: float


def repair_psd(m, delta: float = 0.0) -> PsdRepair:
    """Lift every eigenvalue below ``delta`` up to ``delta``.

    The perturbation is ``Q diag(tau) Q^T`` with ``tau_i = max(delta - lambda_i, 0)``,
    the Frobenius-optimal correction; its norm is ``sqrt(sum tau_i^2)``.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    m = _check_symmetric(m)
    dec = spectral_decompose(m)
    tau = np.where(dec.eigenvalues < delta, delta - dec.eigenvalues, 0.0)
    if not np.any(tau > 0):
        return PsdRepair(m.copy(), np.zeros_like(m), 0.0)
    e = dec.reconstruct(tau)
    e = 0.5 * (e + e.T)
    repaired = m + e
    repaired = 0.5 * (repaired + repaired.T)
    return PsdRepair(repaired, e, float(np.sqrt(np.sum(tau ** 2))))


def repair_dependency_matrix(dm, delta: float = DEFAULT_DELTA):
    """Repaired copy of a ``DependencyMatrix`` with the perturbation norm recorded."""
    res = repair_psd(dm.values, delta)
    return dm.with_values(res.matrix, res.frobenius_norm)
