"""Joint and conditional payout probabilities and the dependency matrix.

An option pays when its underlier's terminal value falls in its payout
region.  On the copula scale a Call with strike quantile ``u`` pays on
``{V > u}``, a Put on ``{V <= u}`` and a Strangle on the disjoint union of a
Put leg at ``u`` and a Call leg at ``u2 > u``.  Joint probabilities of any
two legs follow from the copula value ``C(u1, u2)`` alone.
"""
import io
import json
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .copulas import COMONOTONE, CopulaParam, copula_cdf

CALL = "call"
PUT = "put"
STRANGLE = "strangle"
KINDS = (CALL, PUT, STRANGLE)

_SLACK = 1e-12


class ZeroProbabilityError(ZeroDivisionError):
    """The conditioning option has zero payout probability."""


class DegenerateMatrixError(ValueError):
    """Some options in the universe have zero payout probability."""

    def __init__(self, option_ids):
        self.option_ids = list(option_ids)
        super().__init__(f"zero payout probability for options: {', '.join(self.option_ids)}")


@dataclass(frozen=True)
class OptionSpec:
    """One European option; strikes as prices and as marginal quantiles.

    For a Strangle ``strike``/``u`` belong to the Put leg and
    ``strike2``/``u2`` to the Call leg.
    """

    underlier: str
    kind: str
    strike: float
    u: float
    strike2: Optional[float] = None
    u2: Optional[float] = None
    maturity: int = 1
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown option kind {self.kind!r}")
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"quantile out of [0, 1]: {self.u}")
        if self.kind == STRANGLE:
            if self.strike2 is None or self.u2 is None:
                raise ValueError("a Strangle needs strike2 and u2")
            if not self.strike < self.strike2:
                raise ValueError("a Strangle requires strike < strike2")
            if not self.u <= self.u2 <= 1.0:
                raise ValueError("a Strangle requires u <= u2 <= 1")

    @property
    def id(self) -> str:
        if self.label:
            return self.label
        if self.kind == STRANGLE:
            return f"{self.underlier}:{self.kind}:{self.strike:g}-{self.strike2:g}"
        return f"{self.underlier}:{self.kind}:{self.strike:g}"

    def legs(self):
        if self.kind == CALL:
            return (Leg(CALL, self.u),)
        if self.kind == PUT:
            return (Leg(PUT, self.u),)
        return (Leg(PUT, self.u), Leg(CALL, self.u2))

    def payoff(self, terminal):
        s = np.asarray(terminal, dtype=float)
        if self.kind == CALL:
            return np.maximum(s - self.strike, 0.0)
        if self.kind == PUT:
            return np.maximum(self.strike - s, 0.0)
        return np.maximum(self.strike - s, 0.0) + np.maximum(s - self.strike2, 0.0)


class Leg(NamedTuple):
    kind: str
    q: float


def payout_prob(opt: OptionSpec) -> float:
    if opt.kind == CALL:
        return 1.0 - opt.u
    if opt.kind == PUT:
        return opt.u
    return 1.0 - opt.u2 + opt.u


def _clamp_prob(x):
    if x < -_SLACK or x > 1.0 + _SLACK:
        raise ArithmeticError(f"probability {x} outside [0, 1] beyond slack")
    return min(max(x, 0.0), 1.0)


def joint_payout_prob(c: CopulaParam, a: Leg, b: Leg) -> float:
    """Probability that both single-strike legs pay (first leg on U, second on V)."""
    cuv = copula_cdf(c, a.q, b.q)
    if a.kind == CALL and b.kind == CALL:
        p = 1.0 - a.q - b.q + cuv
    elif a.kind == PUT and b.kind == PUT:
        p = cuv
    elif a.kind == CALL and b.kind == PUT:
        p = b.q - cuv
    else:
        p = a.q - cuv
    return _clamp_prob(p)


def joint_option_prob(c: CopulaParam, opt_i: OptionSpec, opt_j: OptionSpec) -> float:
    """P(both options pay); Strangle legs are disjoint so leg probabilities add."""
    total = sum(joint_payout_prob(c, a, b) for a in opt_i.legs() for b in opt_j.legs())
    # Frechet bounds of the two payout events
    pi, pj = payout_prob(opt_i), payout_prob(opt_j)
    return min(max(total, pi + pj - 1.0, 0.0), pi, pj)


def conditional_mu(c: CopulaParam, opt_i: OptionSpec, opt_j: OptionSpec) -> float:
    """P(option i pays | option j pays)."""
    pj = payout_prob(opt_j)
    if pj <= 0.0:
        raise ZeroProbabilityError(f"option {opt_j.id} never pays")
    return min(joint_option_prob(c, opt_i, opt_j) / pj, 1.0)


@dataclass(frozen=True)
class DependencyMatrix:
    values: np.ndarray
    options: List[OptionSpec]
    payout_probs: np.ndarray
    repaired: bool = False
    frobenius_perturbation: float = 0.0
    ids: List[str] = field(default=None)

    def __post_init__(self):
        if self.ids is None:
            object.__setattr__(self, "ids", [o.id for o in self.options])

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values, frobenius):
        return replace(self, values=values, repaired=True, frobenius_perturbation=float(frobenius))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["id"] + self.ids) + "\n")
        for oid, row in zip(self.ids, self.values):
            buf.write(",".join([oid] + [format(float(x), ".17g") for x in row]) + "\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "values": [[float(x) for x in row] for row in self.values],
            "payout_probs": [float(p) for p in self.payout_probs],
            "repaired": bool(self.repaired),
            "frobenius_perturbation": float(self.frobenius_perturbation),
        }


def _lookup_copula(copulas, a, b):
    if a == b:
        return COMONOTONE
    entry = copulas.get((a, b))
    if entry is None:
        entry = copulas.get((b, a))
    if entry is None:
        raise KeyError(f"no fitted copula for underlier pair ({a}, {b})")
    return getattr(entry, "param", entry)


def dependency_matrix(options: Sequence[OptionSpec], copulas) -> DependencyMatrix:
    """Build ``Lambda[i, j] = P(i and j pay) / (P(i) P(j))`` with ``1/P(i)`` on the diagonal.

    ``copulas`` maps underlier pairs (either order) to a ``FittedCopula`` or
    ``CopulaParam``; options on the same underlier use the comonotone copula.
    Entries are computed for ``i <= j`` and mirrored.
    """
    options = list(options)
    n = len(options)
    probs = np.array([payout_prob(o) for o in options])
    zero = [o.id for o, p in zip(options, probs) if p <= 0.0]
    if zero:
        raise DegenerateMatrixError(zero)
    lam = np.empty((n, n))
    for i in range(n):
        lam[i, i] = 1.0 / probs[i]
    for i in range(n):
        for j in range(i + 1, n):
            c = _lookup_copula(copulas, options[i].underlier, options[j].underlier)
            val = joint_option_prob(c, options[i], options[j]) / (probs[i] * probs[j])
            val = min(val, lam[i, i], lam[j, j])
            lam[i, j] = lam[j, i] = val
    return DependencyMatrix(lam, options, probs)


def matrix_from_csv(text: str):
    """Parse ``to_csv`` output back to ``(ids, values)``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    ids = lines[0].split(",")[1:]
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append([float(x) for x in parts[1:]])
    return ids, np.array(rows, dtype=float)


def matrix_from_json(text: str):
    data = json.loads(text)
    return data["ids"], np.array(data["values"], dtype=float)
