"""Empirical marginals and pseudo-observations on the copula scale."""
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class MarginalModel:
    """Empirical distribution of one underlier's terminal value.

    The CDF uses the ``m + 1`` normalisation so that evaluated values stay in
    ``[0, m/(m+1)]`` and pseudo-observations never touch the boundary.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size < 1:
            raise ValueError("MarginalModel needs at least one sample")
        if not np.all(np.isfinite(s)):
            raise ValueError("MarginalModel samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def m(self) -> int:
        return int(self.samples.size)

    def cdf(self, x):
        return empirical_cdf(self, x)


def empirical_cdf(model: MarginalModel, x):
    """``#{samples <= x} / (m + 1)``; accepts scalars or arrays."""
    counts = np.searchsorted(model.samples, x, side="right")
    out = counts / (model.m + 1.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class PseudoObservations:
    """Paired observations ``(u_i, v_i)`` strictly inside the unit square."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float).ravel()
        v = np.array(self.v, dtype=float).ravel()
        if u.shape != v.shape:
            raise ValueError("u and v must have the same length")
        if u.size == 0:
            raise ValueError("pseudo-observations must be nonempty")
        if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)) or not (
            np.all(np.isfinite(u)) and np.all(np.isfinite(v))
        ):
            raise ValueError("pseudo-observations must lie in the open unit square")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return int(self.u.size)

    @property
    def pairs(self):
        return np.column_stack([self.u, self.v])


def pseudo_observations(samples_a, samples_b) -> PseudoObservations:
    """Rank-transform two paired samples to ``rank / (m + 1)``.

    Ties receive their average rank.
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    m = a.size
    if m < 2:
        raise ValueError(f"need at least 2 joint observations, got {m}")
    return PseudoObservations(rankdata(a) / (m + 1.0), rankdata(b) / (m + 1.0))


def period_ratios(spots, terminals):
    """Terminal-over-start price ratios for non-overlapping periods."""
    spots = np.asarray(spots, dtype=float)
    terminals = np.asarray(terminals, dtype=float)
    return terminals / spots


def marginal_from_ratios(ratios, spot) -> MarginalModel:
    """Terminal-value distribution for a period starting at ``spot``."""
    return MarginalModel(float(spot) * np.asarray(ratios, dtype=float))
