"""Bivariate Archimedean copulas, the empirical copula and tail dependence.

CDFs follow the explicit bivariate formulas of the Clayton, Frank and Gumbel
families; densities are their closed-form mixed second partials.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _families as fam
from . import kernels
from .marginals import PseudoObservations


class CopulaFamily(str, Enum):
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"
    INDEPENDENCE = "independence"
    # upper Frechet bound; used for options written on the same underlier
    COMONOTONE = "comonotone"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown copula family {name!r}") from None


_CODES = {
    CopulaFamily.INDEPENDENCE: fam.INDEPENDENCE,
    CopulaFamily.CLAYTON: fam.CLAYTON,
    CopulaFamily.FRANK: fam.FRANK,
    CopulaFamily.GUMBEL: fam.GUMBEL,
    CopulaFamily.COMONOTONE: fam.COMONOTONE,
}

#: canonical order used for tie-breaks
FITTABLE_FAMILIES = (CopulaFamily.CLAYTON, CopulaFamily.FRANK, CopulaFamily.GUMBEL)


class ParameterDomainError(ValueError):
    pass


@dataclass(frozen=True)
class CopulaParam:
    family: CopulaFamily
    theta: float = float("nan")

    def __post_init__(self):
        family = CopulaFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        t = float(self.theta)
        if family is CopulaFamily.CLAYTON and not t > 0:
            raise ParameterDomainError(f"Clayton requires theta > 0, got {t}")
        if family is CopulaFamily.FRANK and not (np.isfinite(t) and t != 0):
            raise ParameterDomainError(f"Frank requires finite theta != 0, got {t}")
        if family is CopulaFamily.GUMBEL and not t >= 1:
            raise ParameterDomainError(f"Gumbel requires theta >= 1, got {t}")
        if family in (CopulaFamily.CLAYTON, CopulaFamily.GUMBEL) and not np.isfinite(t):
            raise ParameterDomainError(f"theta must be finite, got {t}")
        object.__setattr__(self, "theta", t)

    @property
    def code(self) -> int:
        return self.family.code


INDEPENDENCE = CopulaParam(CopulaFamily.INDEPENDENCE)
COMONOTONE = CopulaParam(CopulaFamily.COMONOTONE)


def _scalar_or_array(x):
    if np.ndim(x) == 0:
        return float(x)
    return x


def copula_cdf(c: CopulaParam, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return _scalar_or_array(fam.cdf(c.code, c.theta, u, v))


def copula_density(c: CopulaParam, u, v):
    if c.family is CopulaFamily.COMONOTONE:
        raise ValueError("the comonotone copula has no density")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise ValueError("copula density needs arguments in the open interval (0, 1)")
    return _scalar_or_array(np.exp(fam.log_pdf(c.code, c.theta, u, v)))


def h_function(c: CopulaParam, u, v):
    """Conditional CDF of V given U = u, i.e. dC/du."""
    return _scalar_or_array(fam.h_func(c.code, c.theta, u, v))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _open_uniform(rng, n):
    return np.clip(rng.random(n), 2.0 ** -60, 1.0 - 2.0 ** -53)


def sample_conditional(c: CopulaParam, u, seed=None):
    """Draw V | U = u for each entry of ``u`` by inverting the h-function."""
    rng = _rng(seed)
    u = np.asarray(u, dtype=float)
    w = _open_uniform(rng, u.size)
    v = kernels.h_inverse(c.code, c.theta, u.ravel(), w)
    return np.clip(v, 2.0 ** -60, 1.0 - 2.0 ** -53).reshape(u.shape)


def sample_pair(c: CopulaParam, n: int, seed=None) -> PseudoObservations:
    """``n`` iid pairs from ``c`` via conditional-distribution inversion.

    ``u`` is uniform and ``v`` solves ``dC/du(u, v) = w`` for a second uniform
    ``w``, by a bracketed root search to relative tolerance 1e-10 (plain
    bisection in the numpy backend; the compiled backend takes Newton steps on
    the density and bisects whenever a step leaves the bracket).  Deterministic
    in ``seed`` for a given backend.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    u = _open_uniform(rng, n)
    v = sample_conditional(c, u, rng)
    return PseudoObservations(u, v)


def empirical_copula(obs: PseudoObservations, u, v):
    """Fraction of pairs with both coordinates below ``(u, v)``."""
    uu = np.asarray(u, dtype=float)
    vv = np.asarray(v, dtype=float)
    if uu.ndim == 0 and vv.ndim == 0:
        return float(np.mean((obs.u <= uu) & (obs.v <= vv)))
    uu, vv = np.broadcast_arrays(uu, vv)
    out = np.empty(uu.shape)
    for idx in np.ndindex(uu.shape):
        out[idx] = np.mean((obs.u <= uu[idx]) & (obs.v <= vv[idx]))
    return out


def empirical_copula_grid(obs: PseudoObservations, grid_u, grid_v=None):
    """Empirical copula on the tensor grid ``grid_u x grid_v`` (sorted)."""
    grid_u = np.asarray(grid_u, dtype=float)
    grid_v = grid_u if grid_v is None else np.asarray(grid_v, dtype=float)
    if np.any(np.diff(grid_u) < 0) or np.any(np.diff(grid_v) < 0):
        raise ValueError("grids must be sorted ascending")
    return kernels.empirical_copula_grid(obs.u, obs.v, grid_u, grid_v)


@dataclass(frozen=True)
class TailCoefficients:
    lambda_L: float
    lambda_U: float


TAIL_ORDERS = np.arange(1, 9)


def _extrapolate_limit(seq, noise):
    """Limit of a sequence sampled at geometrically shrinking distances.

    Aitken's delta-squared step on the last three terms removes an error term
    ``a * r**k`` whatever its ratio ``r`` (power-law corners such as the Gumbel
    lower tail converge too slowly for a fixed-order step).  If the last
    difference is within ``noise`` the sequence has converged and its last term
    is returned; a ratio outside (0, 1) falls back to one linear Richardson step.
    """
    d1 = seq[-2] - seq[-3]
    d2 = seq[-1] - seq[-2]
    if abs(d2) <= noise:
        val = seq[-1]
    else:
        ratio = d2 / d1 if d1 != 0 else np.nan
        if 0.0 < ratio < 1.0:
            val = seq[-1] + d2 * ratio / (1.0 - ratio)
        else:
            val = (10.0 * seq[-1] - seq[-2]) / 9.0
    return float(min(max(val, 0.0), 1.0))


def tail_dependence(c: CopulaParam) -> TailCoefficients:
    """Lower/upper tail dependence by numerical limits of the diagonal section.

    The quotients ``C(u,u)/u`` and ``(1 - 2u + C(u,u))/(1 - u)`` are evaluated
    at distances ``10^-k`` (k = 1..8) from the corner and extrapolated to the
    corner from the last three terms (see ``_extrapolate_limit``).
    """
    eps = 10.0 ** (-TAIL_ORDERS.astype(float))
    lower = fam.cdf(c.code, c.theta, eps, eps) / eps
    u = 1.0 - eps
    upper = (1.0 - 2.0 * u + fam.cdf(c.code, c.theta, u, u)) / (1.0 - u)
    # rounding in the numerators: relative for the lower quotient, absolute
    # (cancellation among O(1) terms) for the upper one
    lower_noise = 64 * np.finfo(float).eps * max(abs(lower[-1]), np.finfo(float).tiny)
    upper_noise = 64 * np.finfo(float).eps / eps[-1]
    return TailCoefficients(_extrapolate_limit(lower, lower_noise),
                            _extrapolate_limit(upper, upper_noise))
