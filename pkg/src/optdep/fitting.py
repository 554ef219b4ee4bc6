"""Semi-parametric copula fitting and L2 model selection."""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _families as fam
from . import kernels
from .copulas import (
    FITTABLE_FAMILIES,
    CopulaFamily,
    CopulaParam,
    copula_cdf,
    empirical_copula_grid,
)
from .marginals import PseudoObservations

THETA_TOL = 1e-6
GRID_SIZE = 50
MIN_PAIRS = 10

# parameter search segments per family
SEARCH_BOUNDS = {
    CopulaFamily.CLAYTON: ((1e-3, 50.0),),
    CopulaFamily.FRANK: ((-50.0, -1e-3), (1e-3, 50.0)),
    CopulaFamily.GUMBEL: ((1.0, 50.0),),
}

_SCAN_POINTS = 48
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FittedCopula:
    param: CopulaParam
    loglik: float
    l2_distance: float
    pair: Optional[Tuple[str, str]] = None

    @property
    def family(self) -> CopulaFamily:
        return self.param.family

    @property
    def theta(self) -> float:
        return self.param.theta


def pseudo_loglik(family: CopulaFamily, theta: float, obs: PseudoObservations) -> float:
    """Sum of log copula densities at the pseudo-observations (-inf if not finite)."""
    val = kernels.log_density_sum(family.code, float(theta), obs.u, obs.v)
    return val if math.isfinite(val) else -math.inf


def _scan_grid(lo, hi):
    """Ascending scan points, geometric in the distance from the segment's inner end."""
    if lo >= 1.0:  # Gumbel: domain starts at 1 (independence)
        return lo + np.concatenate([[0.0], np.geomspace(1e-3, hi - lo, _SCAN_POINTS - 1)])
    if hi < 0:
        return -np.geomspace(-hi, -lo, _SCAN_POINTS)[::-1]
    return np.geomspace(lo, hi, _SCAN_POINTS)


def _golden_max(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return a, b


def _derivative(f, x, lo, hi):
    h = 1e-7 * max(1.0, abs(x))
    if x - h < lo:
        return (f(x + h) - f(x)) / h
    if x + h > hi:
        return (f(x) - f(x - h)) / h
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _maximise_segment(f, lo, hi):
    grid = _scan_grid(lo, hi)
    vals = np.array([f(t) for t in grid])
    if not np.any(np.isfinite(vals)):
        return None
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    a, b = _golden_max(f, a, b, 1e-3 * max(1.0, abs(grid[k])))
    # refine by bisection on the sign of the derivative
    da = _derivative(f, a, lo, hi)
    db = _derivative(f, b, lo, hi)
    if da <= 0 and db <= 0:
        theta = a
    elif da >= 0 and db >= 0:
        theta = b
    else:
        while b - a > THETA_TOL:
            mid = 0.5 * (a + b)
            if _derivative(f, mid, lo, hi) > 0:
                a = mid
            else:
                b = mid
        theta = 0.5 * (a + b)
    # keep the best of the refined point and the bracketing endpoints
    cands = [theta, a, b, grid[k]]
    scores = [f(t) for t in cands]
    j = int(np.argmax(scores))
    return cands[j], scores[j]


def _check_obs(obs: PseudoObservations):
    if len(obs) < MIN_PAIRS:
        raise FitError(f"need at least {MIN_PAIRS} pseudo-observations, got {len(obs)}")


def fit_semiparametric(obs: PseudoObservations, family, pair=None) -> FittedCopula:
    """Maximise the pseudo-log-likelihood over the family's search bracket.

    A coarse scan locates the best bracket, golden-section search narrows it
    and bisection on the sign of the numerical derivative pins ``theta`` to
    an absolute tolerance of 1e-6.  Boundary maxima return the bracket end.
    """
    family = CopulaFamily.parse(family)
    if family not in SEARCH_BOUNDS:
        raise FitError(f"family {family.value} has no free parameter to fit")
    _check_obs(obs)

    def f(theta):
        return pseudo_loglik(family, theta, obs)

    best = None
    for lo, hi in SEARCH_BOUNDS[family]:
        res = _maximise_segment(f, lo, hi)
        if res is not None and (best is None or res[1] > best[1]):
            best = res
    if best is None or not math.isfinite(best[1]):
        raise FitError(f"{family.value}: likelihood not finite anywhere on the search bracket")
    param = CopulaParam(family, float(best[0]))
    return FittedCopula(param, float(best[1]), l2_distance(param, obs), pair)


def _midpoints(g):
    return (np.arange(g) + 0.5) / g


def l2_distance(param: CopulaParam, obs: PseudoObservations, grid_size: int = GRID_SIZE) -> float:
    """Midpoint-rule L2 distance between the model and the empirical copula."""
    g = _midpoints(grid_size)
    emp = empirical_copula_grid(obs, g)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    model = fam.cdf(param.code, param.theta, uu, vv)
    return float(np.sqrt(np.mean((emp - model) ** 2)))


def fit_candidates(obs: PseudoObservations, families=FITTABLE_FAMILIES, pair=None):
    """Fit every family; returns ``{family: FittedCopula | FitError}`` in canonical order."""
    wanted = {CopulaFamily.parse(f) for f in families}
    out = {}
    for family in FITTABLE_FAMILIES:
        if family not in wanted:
            continue
        try:
            out[family] = fit_semiparametric(obs, family, pair)
        except FitError as exc:
            out[family] = exc
    return out


def select_copula(obs: PseudoObservations, families=FITTABLE_FAMILIES, pair=None) -> FittedCopula:
    """Fit each candidate family and keep the one closest to the empirical copula.

    Ties on distance go to the higher log-likelihood, then to the canonical
    order Clayton, Frank, Gumbel.
    """
    families = list(families)
    if not families:
        raise ValueError("families must be nonempty")
    for f in families:
        if CopulaFamily.parse(f) not in SEARCH_BOUNDS:
            raise ValueError(f"cannot select among non-parametric family {f!r}")
    return best_fit(fit_candidates(obs, families, pair), pair)


def best_fit(fits, pair=None) -> FittedCopula:
    """Pick from ``fit_candidates`` output: least L2 distance, then higher
    log-likelihood, then canonical family order."""
    ok = [(i, r) for i, r in enumerate(fits.values()) if isinstance(r, FittedCopula)]
    if not ok:
        reasons = "; ".join(str(r) for r in fits.values())
        raise FitError(f"no copula family could be fitted for pair {pair}: {reasons}")
    _, best = min(ok, key=lambda item: (item[1].l2_distance, -item[1].loglik, item[0]))
    return best
