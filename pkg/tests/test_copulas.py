"""Closed forms, copula axioms, sampling and tail limits for the copula families."""
import decimal
from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from optdep.copulas import (
    COMONOTONE,
    INDEPENDENCE,
    CopulaFamily,
    CopulaParam,
    ParameterDomainError,
    copula_cdf,
    copula_density,
    empirical_copula,
    empirical_copula_grid,
    h_function,
    sample_pair,
    tail_dependence,
)
from optdep.marginals import PseudoObservations

PARAMS = [
    CopulaParam("clayton", 0.5),
    CopulaParam("clayton", 2.0),
    CopulaParam("clayton", 8.0),
    CopulaParam("frank", -5.0),
    CopulaParam("frank", 1.0),
    CopulaParam("frank", 5.0),
    CopulaParam("gumbel", 1.0),
    CopulaParam("gumbel", 1.5),
    CopulaParam("gumbel", 3.0),
]
ids = [f"{p.family.value}-{p.theta:g}" for p in PARAMS]
interior = st.floats(0.02, 0.98)


def test_clayton_hand_value():
    # (2 + 2 - 1)^-1
    assert copula_cdf(CopulaParam("clayton", 1.0), 0.5, 0.5) == pytest.approx(1 / 3, rel=1e-14)


def test_clayton_density_hand_value():
    # c(u,v) = (1+t)(uv)^(-1-t)(u^-t + v^-t - 1)^(-2-1/t) at t=1, u=v=1/2
    assert copula_density(CopulaParam("clayton", 1.0), 0.5, 0.5) == pytest.approx(32 / 27, rel=1e-12)


@given(interior, interior)
def test_gumbel_one_is_product(u, v):
    c = CopulaParam("gumbel", 1.0)
    assert copula_cdf(c, u, v) == pytest.approx(u * v, rel=1e-12)
    assert copula_density(c, u, v) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("c", PARAMS + [INDEPENDENCE, COMONOTONE], ids=ids + ["indep", "comon"])
def test_uniform_margins(c):
    v = np.linspace(0.0, 1.0, 21)
    assert_allclose(copula_cdf(c, np.ones_like(v), v), v, atol=1e-14)
    assert_allclose(copula_cdf(c, v, np.ones_like(v)), v, atol=1e-14)
    assert_allclose(copula_cdf(c, np.zeros_like(v), v), 0.0, atol=1e-14)


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_frechet_bounds_and_symmetry(c):
    g = np.linspace(0.0, 1.0, 41)
    uu, vv = np.meshgrid(g, g)
    cu = copula_cdf(c, uu, vv)
    assert np.all(cu >= np.maximum(uu + vv - 1.0, 0.0) - 1e-13)
    assert np.all(cu <= np.minimum(uu, vv) + 1e-13)
    assert_allclose(cu, cu.T, atol=1e-13)


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_two_increasing_random_rectangles(c):
    rng = np.random.default_rng(11)
    u = np.sort(rng.random((2, 2000)), axis=0)
    v = np.sort(rng.random((2, 2000)), axis=0)
    vol = (copula_cdf(c, u[1], v[1]) - copula_cdf(c, u[0], v[1])
           - copula_cdf(c, u[1], v[0]) + copula_cdf(c, u[0], v[0]))
    assert np.all(vol >= -1e-13)


def _cdf_decimal(c, u, v):
    """Copula CDF evaluated in 60-digit decimal arithmetic (independent oracle)."""
    t = Decimal(repr(c.theta))
    if c.family is CopulaFamily.CLAYTON:
        return (u ** -t + v ** -t - 1) ** (-1 / t)
    if c.family is CopulaFamily.FRANK:
        num = ((-t * u).exp() - 1) * ((-t * v).exp() - 1)
        return -(1 + num / ((-t).exp() - 1)).ln() / t
    x, y = -u.ln(), -v.ln()
    return (-((x ** t + y ** t) ** (1 / t))).exp()


def _fd_oracle(c, u, v, order):
    # central differences with h = 1e-15; truncation ~h^2 is far below 1e-20
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        u, v, h = Decimal(repr(u)), Decimal(repr(v)), Decimal("1e-15")
        if order == 1:
            return float((_cdf_decimal(c, u + h, v) - _cdf_decimal(c, u - h, v)) / (2 * h))
        return float((_cdf_decimal(c, u + h, v + h) - _cdf_decimal(c, u + h, v - h)
                      - _cdf_decimal(c, u - h, v + h) + _cdf_decimal(c, u - h, v - h)) / (4 * h * h))


GRID9 = [(float(a), float(b)) for a in np.linspace(0.1, 0.9, 5) for b in np.linspace(0.05, 0.95, 5)]


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_density_matches_mixed_finite_difference(c):
    for u, v in GRID9:
        assert copula_density(c, u, v) == pytest.approx(_fd_oracle(c, u, v, 2), rel=1e-10)


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_h_function_is_partial_derivative(c):
    for u, v in GRID9:
        assert h_function(c, u, v) == pytest.approx(_fd_oracle(c, u, v, 1), rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_cdf_matches_decimal_oracle(c):
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        for u, v in GRID9:
            expected = float(_cdf_decimal(c, Decimal(repr(u)), Decimal(repr(v))))
            assert copula_cdf(c, u, v) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("c", [CopulaParam("clayton", 2.0), CopulaParam("frank", -5.0),
                               CopulaParam("gumbel", 3.0)], ids=str)
def test_density_integrates_to_box_mass(c):
    a, b = 0.01, 0.99
    x, w = np.polynomial.legendre.leggauss(300)
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    uu, vv = np.meshgrid(nodes, nodes)
    integral = weights @ copula_density(c, uu, vv) @ weights
    mass = (copula_cdf(c, b, b) - copula_cdf(c, a, b) - copula_cdf(c, b, a) + copula_cdf(c, a, a))
    assert integral == pytest.approx(mass, rel=1e-6)


def _frank_h_decimal(theta, u, v):
    # dC/du = e^{-tu}(e^{-tv}-1) / ((e^{-t}-1) + (e^{-tu}-1)(e^{-tv}-1)), at 50 digits
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        t, u, v = Decimal(theta), Decimal(u), Decimal(v)
        eu, ev, e1 = (-t * u).exp(), (-t * v).exp(), (-t).exp()
        return float(eu * (ev - 1) / ((e1 - 1) + (eu - 1) * (ev - 1)))


@pytest.mark.parametrize("theta", [-40.0, -5.0, 5.0, 40.0])
@pytest.mark.parametrize("u, v", [(0.9447, 0.8895), (0.5, 0.5), (0.02, 0.97), (0.999, 0.998)])
def test_frank_h_no_cancellation_at_large_theta(theta, u, v):
    expected = _frank_h_decimal(theta, u, v)
    assert h_function(CopulaParam("frank", theta), u, v) == pytest.approx(expected, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("c", PARAMS, ids=ids)
def test_h_function_monotone_in_v(c):
    v = np.linspace(0.0, 1.0, 401)
    for u in (0.01, 0.3, 0.7, 0.99):
        h = h_function(c, np.full_like(v, u), v)
        assert np.all(np.diff(h) >= -1e-14)
        assert h[0] == 0.0 and h[-1] == 1.0


@pytest.mark.parametrize(
    "family, theta",
    [("clayton", 0.0), ("clayton", -1.0), ("frank", 0.0), ("gumbel", 0.99), ("gumbel", np.inf),
     ("frank", np.nan)],
)
def test_domain_errors(family, theta):
    with pytest.raises(ParameterDomainError):
        CopulaParam(family, theta)


def test_unknown_family():
    with pytest.raises(ValueError):
        CopulaFamily.parse("student")
    assert CopulaFamily.parse(" Gumbel ") is CopulaFamily.GUMBEL


@pytest.mark.parametrize("u, v", [(0.0, 0.5), (0.5, 1.0)])
def test_density_rejects_boundary(u, v):
    with pytest.raises(ValueError):
        copula_density(CopulaParam("clayton", 2.0), u, v)


def test_cdf_rejects_outside_unit_square():
    with pytest.raises(ValueError):
        copula_cdf(CopulaParam("frank", 2.0), 1.2, 0.5)


def test_sampling_is_deterministic():
    c = CopulaParam("frank", 4.0)
    a, b = sample_pair(c, 500, seed=42), sample_pair(c, 500, seed=42)
    assert np.array_equal(a.pairs, b.pairs)
    assert not np.array_equal(a.pairs, sample_pair(c, 500, seed=43).pairs)


def test_sampling_gumbel_one_uncorrelated():
    obs = sample_pair(CopulaParam("gumbel", 1.0), 100_000, seed=1)
    # sd of the sample correlation is ~ n^-1/2 = 0.0032
    assert abs(np.corrcoef(obs.u, obs.v)[0, 1]) < 0.01


@pytest.mark.parametrize("c", [CopulaParam("clayton", 5.0), CopulaParam("frank", -5.0),
                               CopulaParam("gumbel", 3.0)], ids=str)
def test_sampling_matches_cdf(c):
    n = 100_000
    obs = sample_pair(c, n, seed=5)
    for (a, b) in [(0.2, 0.2), (0.5, 0.7), (0.9, 0.3)]:
        p = copula_cdf(c, a, b)
        se = np.sqrt(p * (1 - p) / n)
        assert abs(empirical_copula(obs, a, b) - p) < 3 * se


def test_sample_margins_uniform():
    from scipy import stats

    obs = sample_pair(CopulaParam("clayton", 3.0), 20_000, seed=9)
    assert stats.kstest(obs.u, "uniform").pvalue > 1e-3
    assert stats.kstest(obs.v, "uniform").pvalue > 1e-3


def test_sample_pair_rejects_empty():
    with pytest.raises(ValueError):
        sample_pair(INDEPENDENCE, 0)


def test_empirical_copula_corners():
    obs = sample_pair(CopulaParam("gumbel", 2.0), 200, seed=3)
    assert empirical_copula(obs, 1.0, 1.0) == 1.0
    assert empirical_copula(obs, 0.0, 0.7) == 0.0


def test_empirical_copula_converges_to_clayton():
    c = CopulaParam("clayton", 2.0)
    obs = sample_pair(c, 10_000, seed=2)
    g = (np.arange(20) + 0.5) / 20
    diff = empirical_copula_grid(obs, g) - copula_cdf(c, *np.meshgrid(g, g, indexing="ij"))
    assert np.max(np.abs(diff)) <= 0.02


@settings(max_examples=30)
@given(st.integers(1, 60), st.integers(0, 10_000))
def test_grid_matches_pointwise(n, seed):
    rng = np.random.default_rng(seed)
    obs = PseudoObservations(rng.uniform(0.01, 0.99, n), rng.uniform(0.01, 0.99, n))
    gu = np.sort(np.concatenate([rng.random(7), obs.u[:2]]))
    gv = np.sort(rng.random(5))
    uu, vv = np.meshgrid(gu, gv, indexing="ij")
    assert_allclose(empirical_copula_grid(obs, gu, gv), empirical_copula(obs, uu, vv))


def test_grid_must_be_sorted():
    obs = PseudoObservations([0.3, 0.6], [0.2, 0.5])
    with pytest.raises(ValueError):
        empirical_copula_grid(obs, [0.5, 0.2])


@pytest.mark.parametrize(
    "c, lower, upper",
    [
        (CopulaParam("gumbel", 1.0), 0.0, 0.0),
        (INDEPENDENCE, 0.0, 0.0),
        (CopulaParam("clayton", 2.0), 2 ** -0.5, 0.0),
        (CopulaParam("clayton", 0.5), 2 ** -2.0, 0.0),
        (CopulaParam("gumbel", 2.0), 0.0, 2 - 2 ** 0.5),
        (CopulaParam("gumbel", 3.0), 0.0, 2 - 2 ** (1 / 3)),
    ],
    ids=["gumbel1", "indep", "clayton2", "clayton0.5", "gumbel2", "gumbel3"],
)
def test_tail_dependence_closed_forms(c, lower, upper):
    # oracles: 2^(-1/t) for Clayton's lower tail, 2 - 2^(1/t) for Gumbel's upper tail
    tc = tail_dependence(c)
    assert tc.lambda_L == pytest.approx(lower, abs=1e-3)
    assert tc.lambda_U == pytest.approx(upper, abs=1e-3)


@pytest.mark.parametrize("theta", [-5.0, 1.0, 5.0])
def test_frank_has_no_tail_dependence(theta):
    tc = tail_dependence(CopulaParam("frank", theta))
    assert tc.lambda_L <= 1e-3 and tc.lambda_U <= 1e-3


def test_comonotone_is_upper_bound():
    assert tail_dependence(COMONOTONE) == tail_dependence(COMONOTONE)
    assert tail_dependence(COMONOTONE).lambda_U == pytest.approx(1.0)
    assert copula_cdf(COMONOTONE, 0.3, 0.8) == 0.3
    with pytest.raises(ValueError):
        copula_density(COMONOTONE, 0.3, 0.4)


@pytest.mark.parametrize("theta", [0.1, 0.5, 2.0, 20.0, 50.0])
def test_clayton_tails_across_range(theta):
    tc = tail_dependence(CopulaParam("clayton", theta))
    assert tc.lambda_L == pytest.approx(2 ** (-1 / theta), abs=1e-3)
    assert tc.lambda_U <= 1e-3


@pytest.mark.parametrize("theta", [1.05, 1.5, 3.0, 50.0, 100.0])
def test_gumbel_tails_across_range(theta):
    # the lower quotient decays like u^(2^(1/t) - 1), very slowly for large t
    tc = tail_dependence(CopulaParam("gumbel", theta))
    assert tc.lambda_U == pytest.approx(2 - 2 ** (1 / theta), abs=1e-3)
    assert tc.lambda_L <= 1e-3


@pytest.mark.parametrize("c", [CopulaParam("clayton", 50.0), CopulaParam("gumbel", 50.0)], ids=str)
@pytest.mark.parametrize("u", [1e-8, 1e-3, 0.5, 1 - 1e-7])
def test_cdf_extreme_theta_no_overflow(c, u):
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        expected = float(_cdf_decimal(c, Decimal(repr(u)), Decimal(repr(u))))
    assert copula_cdf(c, u, u) == pytest.approx(expected, rel=1e-12)
