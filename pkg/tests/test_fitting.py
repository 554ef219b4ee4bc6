import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from optdep.copulas import INDEPENDENCE, CopulaFamily, CopulaParam, copula_cdf, copula_density, sample_pair
from optdep.fitting import (
    SEARCH_BOUNDS,
    FitError,
    FittedCopula,
    fit_candidates,
    fit_semiparametric,
    l2_distance,
    pseudo_loglik,
    select_copula,
)
from optdep.marginals import PseudoObservations, pseudo_observations


def _ranked(c, n, seed):
    """Samples from ``c`` mapped through ranks, as the fitter would see them."""
    raw = sample_pair(c, n, seed=seed)
    return pseudo_observations(raw.u, raw.v)


@pytest.fixture(scope="module")
def clayton_obs():
    return _ranked(CopulaParam("clayton", 2.0), 5000, 101)


def test_clayton_recovery(clayton_obs):
    fit = fit_semiparametric(clayton_obs, "clayton", pair=("A", "B"))
    assert 1.8 <= fit.theta <= 2.2
    assert fit.pair == ("A", "B")
    assert np.isfinite(fit.loglik) and fit.l2_distance >= 0


def test_independence_fits_gumbel_at_one():
    obs = _ranked(INDEPENDENCE, 5000, 7)
    fit = fit_semiparametric(obs, CopulaFamily.GUMBEL)
    assert 1.0 <= fit.theta <= 1.1
    assert abs(fit.loglik) <= 5


def test_diagonal_data_hits_upper_bound():
    g = np.arange(1, 11) / 11
    fit = fit_semiparametric(PseudoObservations(g, g), "gumbel")
    assert fit.theta == pytest.approx(SEARCH_BOUNDS[CopulaFamily.GUMBEL][-1][1], abs=1e-6)


@pytest.mark.parametrize(
    "c, seed",
    [(CopulaParam("clayton", 0.7), 1), (CopulaParam("frank", -3.0), 2), (CopulaParam("frank", 6.0), 3),
     (CopulaParam("gumbel", 1.8), 4)],
    ids=str,
)
def test_matches_scipy_bounded_optimum(c, seed):
    obs = _ranked(c, 800, seed)
    fit = fit_semiparametric(obs, c.family)

    def nll(t):
        return -np.sum(np.log(copula_density(CopulaParam(c.family, t), obs.u, obs.v)))

    lo, hi = (0.5 * c.theta, 2.0 * c.theta) if c.theta > 0 else (2.0 * c.theta, 0.5 * c.theta)
    ref = minimize_scalar(nll, bounds=(max(lo, 1.0) if c.family is CopulaFamily.GUMBEL else lo, hi),
                          method="bounded", options={"xatol": 1e-9})
    assert fit.theta == pytest.approx(ref.x, abs=1e-4)
    assert fit.loglik == pytest.approx(-ref.fun, abs=1e-6)


@pytest.mark.parametrize("family", ["clayton", "frank", "gumbel"])
@pytest.mark.parametrize("seed", range(3))
def test_fit_is_stationary_or_boundary(family, seed):
    true = {"clayton": 1.5, "frank": 4.0, "gumbel": 2.0}[family]
    obs = _ranked(CopulaParam(family, true), 400, 50 + seed)
    fit = fit_semiparametric(obs, family)
    for step in (-1e-4, 1e-4):
        t = fit.theta + step
        try:
            other = pseudo_loglik(fit.family, t, obs)
        except Exception:
            continue
        assert fit.loglik >= other - 1e-7


def test_negative_frank_branch_found():
    obs = _ranked(CopulaParam("frank", -5.0), 3000, 5)
    fit = fit_semiparametric(obs, "frank")
    assert -5.6 < fit.theta < -4.4


@pytest.mark.parametrize("n", [1, 5, 9])
def test_too_few_pairs(n):
    obs = PseudoObservations(np.linspace(0.1, 0.9, n), np.linspace(0.1, 0.9, n))
    with pytest.raises(FitError):
        fit_semiparametric(obs, "clayton")


@pytest.mark.parametrize("family", [CopulaFamily.INDEPENDENCE, CopulaFamily.COMONOTONE])
def test_parameter_free_families_rejected(family, clayton_obs):
    with pytest.raises(FitError):
        fit_semiparametric(clayton_obs, family)


def _l2_brute(param, obs, g=50):
    mid = (np.arange(g) + 0.5) / g
    total = 0.0
    for a in mid:
        for b in mid:
            emp = np.mean((obs.u <= a) & (obs.v <= b))
            total += (emp - copula_cdf(param, a, b)) ** 2
    return np.sqrt(total / g ** 2)


@pytest.mark.parametrize("param", [INDEPENDENCE, CopulaParam("frank", 3.0), CopulaParam("gumbel", 2.5)], ids=str)
def test_l2_matches_brute_force(param):
    obs = _ranked(CopulaParam("clayton", 1.0), 300, 9)
    assert l2_distance(param, obs) == pytest.approx(_l2_brute(param, obs), rel=1e-12)


def test_l2_independence_small_for_product_sample():
    obs = sample_pair(INDEPENDENCE, 10_000, seed=3)
    assert l2_distance(INDEPENDENCE, obs) <= 0.02


def test_l2_single_pair_finite_and_deterministic():
    obs = PseudoObservations([0.5], [0.5])
    d = l2_distance(INDEPENDENCE, obs)
    assert np.isfinite(d) and d > 0
    assert l2_distance(INDEPENDENCE, obs) == d


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2 ** 16), st.sampled_from(["clayton", "frank", "gumbel"]))
def test_l2_nonnegative(n, seed, family):
    rng = np.random.default_rng(seed)
    obs = PseudoObservations(rng.uniform(0.01, 0.99, n), rng.uniform(0.01, 0.99, n))
    param = CopulaParam(family, 2.0)
    d = l2_distance(param, obs)
    assert d >= 0 and np.isfinite(d)
    # a finite sample is a step function, never equal to a smooth copula everywhere
    assert d > 0


@pytest.mark.parametrize("c", [CopulaParam("gumbel", 3.0), CopulaParam("clayton", 3.0)], ids=str)
def test_select_recovers_family(c):
    obs = _ranked(c, 5000, 17)
    assert select_copula(obs).family is c.family


def test_single_candidate_returned():
    fit = select_copula(_ranked(CopulaParam("gumbel", 3.0), 500, 2), ["clayton"])
    assert fit.family is CopulaFamily.CLAYTON


def test_selection_permutation_invariant():
    obs = _ranked(CopulaParam("frank", 2.0), 600, 8)
    picks = {select_copula(obs, list(p)) for p in itertools.permutations(["gumbel", "frank", "clayton"])}
    assert len(picks) == 1


def test_fit_candidates_canonical_order(clayton_obs):
    res = fit_candidates(clayton_obs, ["gumbel", "clayton", "frank"])
    assert list(res) == [CopulaFamily.CLAYTON, CopulaFamily.FRANK, CopulaFamily.GUMBEL]
    assert all(isinstance(r, FittedCopula) for r in res.values())


def test_all_families_fail_names_pair():
    obs = PseudoObservations([0.2, 0.4], [0.3, 0.6])
    with pytest.raises(FitError, match="AAA"):
        select_copula(obs, pair=("AAA", "BBB"))


def test_select_rejects_empty_or_parameter_free():
    obs = _ranked(INDEPENDENCE, 50, 0)
    with pytest.raises(ValueError):
        select_copula(obs, [])
    with pytest.raises(ValueError):
        select_copula(obs, ["independence"])
