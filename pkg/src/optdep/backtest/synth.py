"""Synthetic option markets for desk-scale experiments.

Log-returns per period are ``drift + vol * z`` with ``z`` standard normal;
the uniforms behind ``z`` are coupled by a one-factor copula construction
(each underlier's uniform is drawn conditionally on a common factor uniform).
Asks are lognormal (Black-Scholes) prices at the configured volatility times
a spread multiplier.
"""
import calendar
import datetime as dt
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

from ..copulas import CopulaParam, sample_conditional
from ..dependence import CALL, PUT, STRANGLE
from .data import MarketDataset
from .universe import OptionTemplate, template_strikes


def bs_price(kind: str, spot: float, strike: float, vol: float, rate: float = 0.0,
             tau: float = 1.0) -> float:
    """Lognormal price of a European Call or Put; ``vol`` and ``rate`` per unit ``tau``."""
    if spot <= 0 or strike <= 0:
        raise ValueError("spot and strike must be positive")
    if vol < 0:
        raise ValueError("vol must be non-negative")
    disc = np.exp(-rate * tau)
    fwd = spot * np.exp(rate * tau)
    sd = vol * np.sqrt(tau)
    if sd == 0.0:
        if kind == CALL:
            return float(max(fwd - strike, 0.0) * disc)
        return float(max(strike - fwd, 0.0) * disc)
    d1 = (np.log(fwd / strike) + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    if kind == CALL:
        return float(disc * (fwd * ndtr(d1) - strike * ndtr(d2)))
    if kind == PUT:
        return float(disc * (strike * ndtr(-d2) - fwd * ndtr(-d1)))
    raise ValueError(f"unsupported kind {kind!r}")


def template_price(tpl: OptionTemplate, spot, vol, rate):
    k1, k2 = template_strikes(tpl, spot)
    if tpl.kind == STRANGLE:
        return bs_price(PUT, spot, k1, vol, rate) + bs_price(CALL, spot, k2, vol, rate), k1, k2
    return bs_price(tpl.kind, spot, k1, vol, rate), k1, k2


def third_fridays(start: str, count: int) -> List[str]:
    """ISO dates of ``count`` consecutive monthly third Fridays from ``YYYY-MM``."""
    year, month = (int(x) for x in start.split("-")[:2])
    out = []
    for _ in range(count):
        weeks = calendar.monthcalendar(year, month)
        fridays = [w[calendar.FRIDAY] for w in weeks if w[calendar.FRIDAY]]
        out.append(dt.date(year, month, fridays[2]).isoformat())
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return out


def _default_templates():
    return [{"kind": CALL, "moneyness": 0.10}]


@dataclass
class SynthConfig:
    tickers: Union[int, List[str]] = 15
    periods: int = 120
    spot0: float = 100.0
    drift: Union[float, List[float]] = 0.005
    vol: Union[float, List[float]] = 0.08
    copula: dict = field(default_factory=lambda: {"family": "gumbel", "theta": 2.0})
    risk_free: float = 0.0
    spread: float = 1.05
    min_premium: float = 0.01
    templates: list = field(default_factory=_default_templates)
    start: str = "2009-05"
    seed: int = 0

    def ticker_names(self) -> List[str]:
        if isinstance(self.tickers, int):
            return [f"S{i:02d}" for i in range(self.tickers)]
        return list(self.tickers)

    def per_ticker(self, value, k, name):
        arr = np.broadcast_to(np.asarray(value, dtype=float), (k,)).copy()
        if name == "vol" and np.any(arr <= 0):
            raise ValueError("vol must be positive")
        return arr


def synth_market(cfg: SynthConfig, seed: Optional[int] = None) -> MarketDataset:
    """Deterministic synthetic dataset for ``cfg`` (``seed`` overrides ``cfg.seed``)."""
    seed = cfg.seed if seed is None else seed
    names = cfg.ticker_names()
    k = len(names)
    if cfg.periods < 1:
        raise ValueError("periods must be >= 1")
    if cfg.spot0 <= 0:
        raise ValueError("spot0 must be positive")
    drift = cfg.per_ticker(cfg.drift, k, "drift")
    vol = cfg.per_ticker(cfg.vol, k, "vol")
    copula = CopulaParam(cfg.copula["family"], cfg.copula.get("theta", float("nan")))
    templates = [OptionTemplate.parse(t) for t in cfg.templates]
    rng = np.random.default_rng(seed)

    factor = np.clip(rng.random(cfg.periods), 2.0 ** -60, 1.0 - 2.0 ** -53)
    u = sample_conditional(copula, np.repeat(factor, k), rng).reshape(cfg.periods, k)
    logret = drift + vol * ndtri(u)
    closes = np.empty((cfg.periods + 1, k))
    closes[0] = cfg.spot0
    closes[1:] = cfg.spot0 * np.exp(np.cumsum(logret, axis=0))

    premiums = {}
    for t in range(cfg.periods):
        for j, name in enumerate(names):
            for tpl in templates:
                price, k1, k2 = template_price(tpl, closes[t, j], vol[j], cfg.risk_free)
                ask = max(price * cfg.spread, cfg.min_premium)
                premiums.setdefault((t, name, tpl.kind), []).append((k1, k2, ask))
    dates = third_fridays(cfg.start, cfg.periods + 1)
    return MarketDataset(dates, names, closes, premiums)
