"""Rolling-window backtests of dependence-aware option portfolios."""
from .data import DataError, InsufficientDataError, MarketDataset, load_dataset, write_premiums, write_prices
from .engine import (
    BacktestConfig,
    BacktestReport,
    FitCache,
    RebalanceResult,
    rebalance,
    run_backtest,
)
from .stats import PerformanceStats, performance_stats, weight_entropy
from .synth import SynthConfig, synth_market
from .universe import OptionTemplate, build_option_universe, option_return, template_strikes

__all__ = [
    "BacktestConfig", "BacktestReport", "DataError", "InsufficientDataError", "FitCache", "MarketDataset",
    "OptionTemplate", "PerformanceStats", "RebalanceResult", "SynthConfig",
    "build_option_universe", "load_dataset", "option_return", "performance_stats",
    "rebalance", "run_backtest", "synth_market", "template_strikes", "weight_entropy",
    "write_premiums", "write_prices",
]
