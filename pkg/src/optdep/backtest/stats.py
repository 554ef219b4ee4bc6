"""Summary statistics for a sequence of per-period portfolio returns."""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PerformanceStats:
    """Moments of per-period returns under unit re-capitalisation.

    ``total`` is the plain sum of period returns (capital reset to one each
    period).  ``kurtosis_excess`` is the moment kurtosis minus 3 and
    ``skew`` the moment skewness; ``std`` uses ``ddof=1``.
    """

    n: int
    mean: float
    total: float
    std: float
    skew: Optional[float]
    kurtosis_excess: Optional[float]
    sharpe: Optional[float]

    def to_dict(self):
        return asdict(self)

    def summary(self):
        return {
            "total_return": self.total,
            "avg_monthly_return": self.mean,
            "kurtosis_excess": self.kurtosis_excess,
            "skew": self.skew,
            "sharpe": self.sharpe,
            "std": self.std,
        }


def performance_stats(returns, rf: float = 0.0) -> PerformanceStats:
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 2:
        raise ValueError("need at least two returns")
    mean = float(r.mean())
    std = float(r.std(ddof=1))
    dev = r - mean
    m2 = float(np.mean(dev ** 2))
    if np.any(r != r[0]):
        skew = float(np.mean(dev ** 3) / m2 ** 1.5)
        kurt = float(np.mean(dev ** 4) / m2 ** 2 - 3.0)
        sharpe = (mean - rf) / std
    else:
        # zero dispersion: ratios undefined rather than infinite
        std = 0.0
        skew = kurt = sharpe = None
    return PerformanceStats(int(r.size), mean, float(r.sum()), std, skew, kurt, sharpe)


def weight_entropy(weights) -> float:
    """Shannon entropy of a long-only weight vector (natural log)."""
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    total = w.sum()
    if total <= 0:
        return 0.0
    p = w[w > 0] / total
    return float(-np.sum(p * np.log(p)))
