"""Rolling-window rebalancing and out-of-sample backtests."""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..copulas import FITTABLE_FAMILIES, CopulaFamily
from ..dependence import DegenerateMatrixError, DependencyMatrix, dependency_matrix
from ..fitting import FittedCopula, select_copula
from ..marginals import MarginalModel, marginal_from_ratios, pseudo_observations
from ..optimizer import QpProblem, groups_from_spec, solve_box_qp
from ..psdrepair import DEFAULT_DELTA, repair_dependency_matrix
from .data import DataError, InsufficientDataError, MarketDataset
from .stats import PerformanceStats, performance_stats
from .universe import OptionTemplate, build_option_universe, option_return

log = logging.getLogger(__name__)


@dataclass
class BacktestConfig:
    window: int = 96
    alpha: float = 5.0
    delta: float = DEFAULT_DELTA
    families: List[str] = field(default_factory=lambda: [f.value for f in FITTABLE_FAMILIES])
    lower: float = 0.0
    upper: float = 1.0
    groups: list = field(default_factory=list)
    risk_free: float = 0.0
    fallback: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.window < 12:
            raise ValueError("window must be at least 12 periods")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        self.families = [CopulaFamily.parse(f).value for f in self.families]


class FitCache:
    """Memo of pair fits keyed by the exact window ratios (fits ignore alpha)."""

    def __init__(self):
        self._store: Dict[tuple, FittedCopula] = {}

    def get(self, key, compute):
        if key not in self._store:
            self._store[key] = compute()
        return self._store[key]

    def __len__(self):
        return len(self._store)


def _option_period_return(data: MarketDataset, t: int, opt, terminal: float) -> float:
    ask = data.premium(t, opt.underlier, opt.kind, opt.strike, opt.strike2)
    return option_return(ask, float(opt.payoff(terminal)))


def _template_returns(data: MarketDataset, templates, tickers):
    """Realised return of every template option in every period of ``data``."""
    col = {tk: j for j, tk in enumerate(data.tickers)}
    out = np.empty((data.n_periods, len(templates) * len(tickers)))
    for t in range(data.n_periods):
        spots = {tk: data.spots[t, col[tk]] for tk in tickers}
        # quantiles are irrelevant for realised returns
        opts = _universe_no_quantiles(templates, tickers, spots)
        for i, opt in enumerate(opts):
            out[t, i] = _option_period_return(data, t, opt, data.terminals[t, col[opt.underlier]])
    return out


def _universe_no_quantiles(templates, tickers, spots):
    dummy = {tk: MarginalModel([spots[tk]]) for tk in tickers}
    return build_option_universe(tickers, templates, spots, dummy)


def check_premiums(data: MarketDataset, templates, periods=None):
    """Raise ``DataError`` naming the first template option without an ask."""
    tickers = list(data.tickers)
    for t in range(data.n_periods) if periods is None else periods:
        spots = {tk: data.spots[t, j] for j, tk in enumerate(tickers)}
        for opt in _universe_no_quantiles(templates, tickers, spots):
            data.premium(t, opt.underlier, opt.kind, opt.strike, opt.strike2)


@dataclass
class RebalanceResult:
    weights: np.ndarray
    options: list
    fallback: bool
    expected_returns: Optional[np.ndarray] = None
    matrix: Optional[DependencyMatrix] = None
    kkt_residual: Optional[float] = None
    fits: Dict[tuple, FittedCopula] = field(default_factory=dict)

    @property
    def ids(self):
        return [o.id for o in self.options]


def fit_pairs(window: MarketDataset, families, cache: Optional[FitCache] = None):
    """Select a copula for every ticker pair from the window's period ratios."""
    ratios = window.ratios()
    fits = {}
    for (ia, a), (ib, b) in itertools.combinations(enumerate(window.tickers), 2):
        ra, rb = ratios[:, ia], ratios[:, ib]

        def compute(ra=ra, rb=rb, a=a, b=b):
            return select_copula(pseudo_observations(ra, rb), families, pair=(a, b))

        if cache is None:
            fits[(a, b)] = compute()
        else:
            key = (a, b, tuple(families), ra.tobytes(), rb.tobytes())
            fits[(a, b)] = cache.get(key, compute)
    return fits


def _window_marginals(window: MarketDataset, spot):
    ratios = window.ratios()
    return {tk: marginal_from_ratios(ratios[:, j], float(spot[j])) for j, tk in enumerate(window.tickers)}


def window_universe(window: MarketDataset, spot, templates):
    tickers = list(window.tickers)
    spots = {tk: float(spot[j]) for j, tk in enumerate(tickers)}
    return build_option_universe(tickers, templates, spots, _window_marginals(window, spot))


def never_paid(window: MarketDataset, spot, options):
    """Ids of options whose payoff was zero on every terminal value in the window.

    This is the empirical zero-probability condition.  The quantile ``u`` alone
    cannot detect it for Calls, since the ``m + 1`` denominator keeps
    ``1 - u >= 1 / (m + 1)``.
    """
    marginals = _window_marginals(window, spot)
    return [o.id for o in options if not np.any(o.payoff(marginals[o.underlier].samples) > 0)]


def rebalance(window: MarketDataset, spot, templates, cfg: BacktestConfig,
              cache: Optional[FitCache] = None) -> RebalanceResult:
    """Weights for options traded at the end of ``window`` with spots ``spot``.

    Reads only the window's completed periods and the current spot.  Falls back
    to equal weights when some option never paid in the window (zero empirical
    payout probability, see ``never_paid``), or raises ``DegenerateMatrixError`` if
    ``cfg.fallback`` is off.
    """
    templates = [OptionTemplate.parse(t) for t in templates]
    if window.n_periods < cfg.window:
        raise InsufficientDataError(f"window has {window.n_periods} periods, need {cfg.window}")
    options = window_universe(window, spot, templates)
    n = len(options)
    zero = never_paid(window, spot, options)
    if zero:
        if not cfg.fallback:
            raise DegenerateMatrixError(zero)
        log.info("zero payout probability for %s; using equal weights", ", ".join(zero))
        return RebalanceResult(np.full(n, 1.0 / n), options, True)

    fits = fit_pairs(window, cfg.families, cache)
    dm = dependency_matrix(options, fits)
    repaired = repair_dependency_matrix(dm, cfg.delta)
    er = _template_returns(window, templates, list(window.tickers)).mean(axis=0)
    problem = QpProblem(er, repaired.values, cfg.alpha, cfg.lower, cfg.upper,
                        groups_from_spec(cfg.groups, [o.id for o in options]))
    sol = solve_box_qp(problem)
    return RebalanceResult(sol.weights, options, False, er, repaired, sol.kkt_residual, fits)


@dataclass
class BacktestReport:
    dates: List[str]
    expiries: List[str]
    ids: List[str]
    weights: np.ndarray
    option_returns: np.ndarray
    returns: np.ndarray
    fallback: np.ndarray
    benchmark_returns: np.ndarray
    summary: PerformanceStats
    benchmark_summary: PerformanceStats

    @property
    def pnl(self):
        return np.cumsum(self.returns)

    @property
    def benchmark_pnl(self):
        return np.cumsum(self.benchmark_returns)

    def _periods(self, weights, returns, fallback):
        return [
            {
                "date": d,
                "weights": {oid: float(x) for oid, x in zip(self.ids, w)},
                "return": float(r),
                "fallback": bool(f),
            }
            for d, w, r, f in zip(self.dates, weights, returns, fallback)
        ]

    def to_dict(self):
        n = len(self.ids)
        eq = np.full((len(self.dates), n), 1.0 / n)
        return {
            "periods": self._periods(self.weights, self.returns, self.fallback),
            "summary": self.summary.summary(),
            "benchmark": {
                "periods": self._periods(eq, self.benchmark_returns, np.zeros(len(self.dates), bool)),
                "summary": self.benchmark_summary.summary(),
            },
        }

    def pnl_csv(self) -> str:
        lines = ["date,portfolio_pnl,benchmark_pnl"]
        for d, p, b in zip(self.expiries, self.pnl, self.benchmark_pnl):
            lines.append(f"{d},{format(float(p), '.17g')},{format(float(b), '.17g')}")
        return "\n".join(lines) + "\n"

    def weights_csv(self) -> str:
        lines = [",".join(["date"] + self.ids)]
        for d, w in zip(self.dates, self.weights):
            lines.append(",".join([d] + [format(float(x), ".17g") for x in w]))
        return "\n".join(lines) + "\n"


def run_backtest(data: MarketDataset, templates, cfg: BacktestConfig,
                 cache: Optional[FitCache] = None) -> BacktestReport:
    """Rebalance at every period after the first ``cfg.window`` and realise returns.

    The equal-weight benchmark trades the identical universe each period.
    """
    templates = [OptionTemplate.parse(t) for t in templates]
    w_len = cfg.window
    n_oos = data.n_periods - w_len
    if n_oos < 1:
        raise InsufficientDataError(f"need more than {w_len} periods, dataset has {data.n_periods}")
    check_premiums(data, templates)
    cache = FitCache() if cache is None else cache
    col = {tk: j for j, tk in enumerate(data.tickers)}
    dates, expiries, weights, opt_rets, port, bench, flags = [], [], [], [], [], [], []
    ids = None
    for t in range(w_len, data.n_periods):
        window = data.window(t - w_len, t)
        res = rebalance(window, data.spots[t], templates, cfg, cache)
        if ids is None:
            ids = res.ids
        realised = np.array([
            _option_period_return(data, t, o, data.terminals[t, col[o.underlier]]) for o in res.options
        ])
        dates.append(data.dates[t])
        expiries.append(data.dates[t + 1])
        weights.append(res.weights)
        opt_rets.append(realised)
        r_pi = float(res.weights @ realised)
        if np.all(res.weights >= 0):
            # a long-only book cannot lose more than its capital; clamp rounding
            r_pi = max(r_pi, -1.0)
        port.append(r_pi)
        bench.append(float(realised.mean()))
        flags.append(res.fallback)
        log.debug("%s: return %.4f fallback=%s", data.dates[t], port[-1], res.fallback)
    port = np.array(port)
    bench = np.array(bench)
    if n_oos >= 2:
        summary = performance_stats(port, cfg.risk_free)
        bsummary = performance_stats(bench, cfg.risk_free)
    else:
        summary = _single_period_stats(port)
        bsummary = _single_period_stats(bench)
    return BacktestReport(dates, expiries, ids, np.array(weights), np.array(opt_rets), port,
                          np.array(flags), bench, summary, bsummary)


def _single_period_stats(r):
    x = float(r[0])
    return PerformanceStats(1, x, x, float("nan"), None, None, None)
