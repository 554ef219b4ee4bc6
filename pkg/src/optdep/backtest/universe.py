"""Option universes built from moneyness templates."""
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..dependence import CALL, KINDS, PUT, STRANGLE, OptionSpec
from ..marginals import MarginalModel, empirical_cdf


@dataclass(frozen=True)
class OptionTemplate:
    """An ``x``-out-of-the-money option: Call at ``(1+x)S``, Put at ``(1-x)S``,
    Strangle at ``((1-x)S, (1+x)S)``, with ``S`` the trade-date spot."""

    kind: str
    moneyness: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown option kind {self.kind!r}")
        if self.kind == STRANGLE and not self.moneyness > 0:
            raise ValueError("a Strangle template needs moneyness > 0")
        if self.kind == CALL and self.moneyness <= -1:
            raise ValueError("Call moneyness must exceed -1")
        if self.kind == PUT and self.moneyness >= 1:
            raise ValueError("Put moneyness must be below 1")

    @classmethod
    def parse(cls, obj):
        if isinstance(obj, cls):
            return obj
        if isinstance(obj, dict):
            extra = set(obj) - {"kind", "moneyness"}
            if extra:
                raise ValueError(f"unknown template keys: {sorted(extra)}")
            return cls(str(obj["kind"]).lower(), float(obj["moneyness"]))
        kind, x = obj
        return cls(str(kind).lower(), float(x))

    def label(self, ticker: str) -> str:
        return f"{ticker}:{self.kind}:{self.moneyness:g}"


def template_strikes(tpl: OptionTemplate, spot: float):
    if spot <= 0:
        raise ValueError("spot must be positive")
    x = tpl.moneyness
    if tpl.kind == CALL:
        return (1.0 + x) * spot, None
    if tpl.kind == PUT:
        return (1.0 - x) * spot, None
    return (1.0 - x) * spot, (1.0 + x) * spot


def build_option_universe(tickers: Sequence[str], templates, spots: Mapping[str, float],
                          marginals: Mapping[str, MarginalModel]):
    """Options for every template on every ticker (template-major order)."""
    out = []
    for tpl in (OptionTemplate.parse(t) for t in templates):
        for tk in tickers:
            k1, k2 = template_strikes(tpl, spots[tk])
            model = marginals[tk]
            u = empirical_cdf(model, k1)
            u2 = None if k2 is None else empirical_cdf(model, k2)
            out.append(OptionSpec(tk, tpl.kind, k1, u, k2, u2, label=tpl.label(tk)))
    return out


def option_return(premium: float, payout: float) -> float:
    """Simple return of a long option held to expiry."""
    if not premium > 0:
        raise ValueError(f"premium must be positive, got {premium}")
    if payout < 0:
        raise ValueError("payout must be non-negative")
    return (payout - premium) / premium
