"""Market data container and CSV ingestion.

``prices.csv`` has columns ``date,ticker,close``; ``premiums.csv`` has
``date,ticker,kind,strike,strike2,ask`` with ``strike2`` empty except for
Strangles.  Dates are rebalancing dates: options traded on one date expire
at the next, and that date's close is the terminal price.
"""
import csv
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

PRICE_COLUMNS = ("date", "ticker", "close")
PREMIUM_COLUMNS = ("date", "ticker", "kind", "strike", "strike2", "ask")
STRIKE_RTOL = 1e-9


class DataError(ValueError):
    pass


class InsufficientDataError(DataError):
    """Too few periods for the requested window or fit."""


@dataclass
class MarketDataset:
    """Closes on ``T + 1`` rebalancing dates and option asks on the first ``T``.

    Period ``t`` runs from ``dates[t]`` to ``dates[t + 1]``; its spot is
    ``closes[t]`` and its terminal price ``closes[t + 1]``.
    """

    dates: List[str]
    tickers: List[str]
    closes: np.ndarray
    # (period, ticker, kind) -> [(strike, strike2, ask), ...]
    premiums: Dict[Tuple[int, str, str], list] = field(default_factory=dict)

    def __post_init__(self):
        self.closes = np.asarray(self.closes, dtype=float)
        if self.closes.shape != (len(self.dates), len(self.tickers)):
            raise DataError(f"closes shape {self.closes.shape} does not match "
                            f"{len(self.dates)} dates x {len(self.tickers)} tickers")
        if not np.all(self.closes > 0):
            raise DataError("all closing prices must be positive")
        for key, rows in self.premiums.items():
            for row in rows:
                if not row[2] > 0:
                    raise DataError(f"non-positive ask {row[2]} for {key}")

    @property
    def n_periods(self) -> int:
        return len(self.dates) - 1

    @property
    def spots(self) -> np.ndarray:
        return self.closes[:-1]

    @property
    def terminals(self) -> np.ndarray:
        return self.closes[1:]

    def ratios(self) -> np.ndarray:
        """Per-period terminal/spot ratios, shape ``(T, k)``."""
        return self.terminals / self.spots

    def premium(self, t: int, ticker: str, kind: str, strike: float, strike2=None) -> float:
        rows = self.premiums.get((t, ticker, kind), ())
        for k1, k2, ask in rows:
            if abs(k1 - strike) <= STRIKE_RTOL * abs(strike) and (
                strike2 is None or (k2 is not None and abs(k2 - strike2) <= STRIKE_RTOL * abs(strike2))
            ):
                return ask
        desc = f"{strike:g}" if strike2 is None else f"{strike:g}/{strike2:g}"
        raise DataError(f"missing premium for {ticker} {kind} {desc} on {self.dates[t]}")

    def select(self, tickers) -> "MarketDataset":
        """Restrict to ``tickers`` (in the given order)."""
        tickers = list(tickers)
        missing = [t for t in tickers if t not in self.tickers]
        if missing:
            raise DataError(f"unknown tickers: {missing}")
        cols = [self.tickers.index(t) for t in tickers]
        keep = set(tickers)
        prem = {k: v for k, v in self.premiums.items() if k[1] in keep}
        return MarketDataset(list(self.dates), tickers, self.closes[:, cols], prem)

    def window(self, start: int, stop: int) -> "MarketDataset":
        """Periods ``[start, stop)`` as a standalone dataset."""
        if not 0 <= start < stop <= self.n_periods:
            raise DataError(f"window [{start}, {stop}) outside 0..{self.n_periods}")
        prem = {(t - start, tk, kd): rows for (t, tk, kd), rows in self.premiums.items()
                if start <= t < stop}
        return MarketDataset(self.dates[start:stop + 1], list(self.tickers),
                             self.closes[start:stop + 1], prem)


def _read_rows(path, required):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        for col in required:
            if col not in header:
                raise DataError(f"{path}: missing column '{col}'")
        reader.fieldnames = header
        return list(reader)


def _float(value, path, lineno, col):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DataError(f"{path}:{lineno}: bad number {value!r} in column '{col}'") from None


def load_prices(path):
    """Read ``prices.csv`` into ``(dates, tickers, closes)`` with dates sorted."""
    rows = _read_rows(path, PRICE_COLUMNS)
    table = {}
    for lineno, r in enumerate(rows, start=2):
        table[(r["date"].strip(), r["ticker"].strip())] = _float(r["close"], path, lineno, "close")
    dates = sorted({d for d, _ in table})
    tickers = sorted({t for _, t in table})
    closes = np.empty((len(dates), len(tickers)))
    for i, d in enumerate(dates):
        for j, t in enumerate(tickers):
            if (d, t) not in table:
                raise DataError(f"{path}: no close for {t} on {d}")
            closes[i, j] = table[(d, t)]
    return dates, tickers, closes


def load_premiums(path, dates):
    rows = _read_rows(path, PREMIUM_COLUMNS)
    index = {d: i for i, d in enumerate(dates)}
    out = {}
    for lineno, r in enumerate(rows, start=2):
        d = r["date"].strip()
        if d not in index:
            continue
        s2 = (r.get("strike2") or "").strip()
        entry = (
            _float(r["strike"], path, lineno, "strike"),
            _float(s2, path, lineno, "strike2") if s2 else None,
            _float(r["ask"], path, lineno, "ask"),
        )
        out.setdefault((index[d], r["ticker"].strip(), r["kind"].strip().lower()), []).append(entry)
    return out


def load_dataset(prices_path, premiums_path) -> MarketDataset:
    dates, tickers, closes = load_prices(prices_path)
    premiums = load_premiums(premiums_path, dates)
    return MarketDataset(dates, tickers, closes, premiums)


def _fmt(x):
    return format(float(x), ".17g")


def write_prices(data: MarketDataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for i, d in enumerate(data.dates):
            for j, t in enumerate(data.tickers):
                w.writerow([d, t, _fmt(data.closes[i, j])])


def write_premiums(data: MarketDataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREMIUM_COLUMNS)
        for (t, ticker, kind), rows in sorted(data.premiums.items(), key=lambda kv: kv[0]):
            for k1, k2, ask in rows:
                w.writerow([data.dates[t], ticker, kind, _fmt(k1), "" if k2 is None else _fmt(k2), _fmt(ask)])
