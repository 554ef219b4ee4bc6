"""Command-line entry point.

Subcommands ``fit``, ``depmatrix``, ``optimize``, ``backtest`` and ``synth``
read a single JSON config (``--config``) and write artifacts under ``--out``.
Exit codes: 0 success, 2 config/IO/malformed data, 3 fit failure or
insufficient data, 4 infeasible optimisation, 5 degenerate dependency matrix
with the fallback disabled.
"""
import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import jsonio
from .backtest.data import (DataError, InsufficientDataError, MarketDataset, load_dataset,
                            load_prices, write_premiums, write_prices)
from .backtest.engine import (BacktestConfig, check_premiums, fit_pairs, rebalance, run_backtest,
                              window_universe)
from .backtest.synth import SynthConfig, synth_market
from .backtest.universe import OptionTemplate
from .copulas import FITTABLE_FAMILIES, CopulaFamily, ParameterDomainError
from .dependence import DegenerateMatrixError, dependency_matrix
from .fitting import FitError, best_fit, fit_candidates
from .marginals import pseudo_observations
from .optimizer import InfeasibleProblemError, QpProblem, groups_from_spec, solve_box_qp
from .psdrepair import repair_dependency_matrix, repair_psd

log = logging.getLogger("optdep")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_INFEASIBLE = 4
EXIT_DEGENERATE = 5

CONFIG_SECTIONS = ("seed", "data", "synthetic", "universe", "backtest", "optimize", "depmatrix")
_SECTION_KEYS = {
    "data": {"prices", "premiums"},
    "universe": {"templates", "tickers"},
    "depmatrix": {"as_of"},
    "optimize": {"as_of", "expected_returns", "matrix", "ids"},
}
DEFAULT_TEMPLATES = [{"kind": "call", "moneyness": 0.1}]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config ---

def _check_keys(section, obj, allowed):
    if not isinstance(obj, dict):
        raise ConfigError(f"config section '{section}' must be an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(extra)}")


def _dataclass_from(cls, section, obj, **overrides):
    names = {f.name for f in dataclasses.fields(cls)}
    _check_keys(section, obj, names)
    kwargs = dict(obj)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' config: {exc}") from exc


def load_config(path):
    """Parse the JSON config; relative data paths resolve against its directory."""
    if path is None:
        return {}, Path.cwd()
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    _check_keys("config", cfg, CONFIG_SECTIONS)
    for section, keys in _SECTION_KEYS.items():
        if section in cfg:
            _check_keys(section, cfg[section], keys)
    return cfg, path.resolve().parent


def _seed(cfg, args):
    return args.seed if args.seed is not None else cfg.get("seed")


def synth_config(cfg, args) -> SynthConfig:
    return _dataclass_from(SynthConfig, "synthetic", cfg.get("synthetic", {}), seed=_seed(cfg, args))


def backtest_config(cfg, args) -> BacktestConfig:
    return _dataclass_from(BacktestConfig, "backtest", cfg.get("backtest", {}), seed=_seed(cfg, args))


def templates_from(cfg):
    uni = cfg.get("universe", {})
    if "templates" in uni:
        raw = uni["templates"]
    elif "synthetic" in cfg and "templates" in cfg["synthetic"]:
        raw = cfg["synthetic"]["templates"]
    else:
        raw = DEFAULT_TEMPLATES
    try:
        return [OptionTemplate.parse(t) for t in raw]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid option template: {exc}") from exc


def market_from(cfg, base: Path, args) -> MarketDataset:
    """Dataset from ``data`` CSV paths, or generated from ``synthetic``."""
    if "data" in cfg:
        d = cfg["data"]
        if "prices" not in d or "premiums" not in d:
            raise ConfigError("'data' needs both 'prices' and 'premiums'")
        data = load_dataset(base / d["prices"], base / d["premiums"])
    elif "synthetic" in cfg:
        data = synth_market(synth_config(cfg, args))
    else:
        raise ConfigError("config needs a 'data' or 'synthetic' section")
    tickers = cfg.get("universe", {}).get("tickers")
    return data.select(tickers) if tickers else data


def _as_of(data: MarketDataset, section) -> int:
    """Index of the trade date (default: last close)."""
    date = section.get("as_of")
    if date is None:
        return len(data.dates) - 1
    if date not in data.dates:
        raise ConfigError(f"as_of date {date} not in the price calendar")
    return data.dates.index(date)


def _trailing_window(data: MarketDataset, t: int, window: int) -> MarketDataset:
    if t < window:
        raise InsufficientDataError(f"{window} periods needed before {data.dates[t]}, have {t}")
    return data.window(t - window, t)


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ------------------------------------------------------------ subcommands ---

def _fit_entry(result):
    if isinstance(result, FitError):
        return {"error": str(result)}
    return {"theta": result.theta, "loglik": result.loglik, "l2_distance": result.l2_distance}


def cmd_fit(args, cfg, base):
    prices = args.prices or (cfg.get("data", {}).get("prices") and base / cfg["data"]["prices"])
    if not prices:
        raise ConfigError("fit needs --prices or data.prices in the config")
    dates, tickers, closes = load_prices(prices)
    if len(dates) < 3:
        raise InsufficientDataError(f"{prices}: {len(dates)} dates give too few periods to fit")
    if args.pair:
        a, b = args.pair
        for tk in (a, b):
            if tk not in tickers:
                raise DataError(f"ticker {tk!r} not in {prices}")
    elif len(tickers) >= 2:
        a, b = tickers[:2]
    else:
        raise DataError(f"{prices}: need at least two tickers")
    ratios = closes[1:] / closes[:-1]
    ia, ib = tickers.index(a), tickers.index(b)
    try:
        families = [CopulaFamily.parse(f) for f in (args.families or FITTABLE_FAMILIES)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    obs = pseudo_observations(ratios[:, ia], ratios[:, ib])
    fits = fit_candidates(obs, families, pair=(a, b))
    best = best_fit(fits, (a, b))
    doc = {
        "pair": [a, b],
        "n": len(obs),
        "families": {f.value: _fit_entry(r) for f, r in fits.items()},
        "selected": best.family.value,
    }
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / "fit.json"
        jsonio.dump(doc, out)
    else:
        sys.stdout.write(jsonio.dumps(doc))
    return EXIT_OK


def cmd_depmatrix(args, cfg, base):
    data = market_from(cfg, base, args)
    bt = backtest_config(cfg, args)
    templates = templates_from(cfg)
    t = _as_of(data, cfg.get("depmatrix", {}))
    window = _trailing_window(data, t, bt.window)
    options = window_universe(window, data.closes[t], templates)
    fits = fit_pairs(window, bt.families)
    dm = dependency_matrix(options, fits)
    repaired = repair_dependency_matrix(dm, bt.delta)
    out = _out_dir(args)
    _write_text(out / "matrix.csv", dm.to_csv())
    jsonio.dump(dm.to_dict(), out / "matrix.json")
    _write_text(out / "matrix_repaired.csv", repaired.to_csv())
    jsonio.dump(repaired.to_dict(), out / "matrix_repaired.json")
    jsonio.dump({
        "as_of": data.dates[t],
        "pairs": [{"pair": list(p), "family": f.family.value, "theta": f.theta,
                   "loglik": f.loglik, "l2_distance": f.l2_distance} for p, f in fits.items()],
    }, out / "fits.json")
    return EXIT_OK


def _explicit_problem(opt, bt):
    try:
        er = np.asarray(opt["expected_returns"], dtype=float)
        lam = np.asarray(opt["matrix"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid optimize inputs: {exc}") from exc
    n = er.size
    if lam.shape != (n, n):
        raise ConfigError(f"matrix shape {lam.shape} does not match {n} expected returns")
    ids = list(opt.get("ids") or [f"o{i}" for i in range(n)])
    if len(ids) != n:
        raise ConfigError("ids length does not match expected_returns")
    lam = repair_psd(lam, bt.delta).matrix
    return QpProblem(er, lam, bt.alpha, bt.lower, bt.upper, groups_from_spec(bt.groups, ids)), ids


def cmd_optimize(args, cfg, base):
    bt = backtest_config(cfg, args)
    opt = cfg.get("optimize", {})
    if "expected_returns" in opt or "matrix" in opt:
        problem, ids = _explicit_problem(opt, bt)
        sol = solve_box_qp(problem)
        weights, fallback, as_of = sol.weights, False, None
        extra = {"gamma": sol.gamma, "kkt_residual": sol.kkt_residual,
                 "objective": problem.objective(sol.weights)}
    else:
        data = market_from(cfg, base, args)
        templates = templates_from(cfg)
        t = _as_of(data, opt)
        res = rebalance(_trailing_window(data, t, bt.window), data.closes[t], templates, bt)
        ids, weights, fallback, as_of = res.ids, res.weights, res.fallback, data.dates[t]
        extra = {"kkt_residual": res.kkt_residual}
    doc = {"as_of": as_of, "alpha": bt.alpha, "fallback": bool(fallback),
           "weights": {oid: float(w) for oid, w in zip(ids, weights)}}
    doc.update(extra)
    jsonio.dump(doc, _out_dir(args) / "weights.json")
    return EXIT_OK


def cmd_backtest(args, cfg, base):
    data = market_from(cfg, base, args)
    bt = backtest_config(cfg, args)
    templates = templates_from(cfg)
    check_premiums(data, templates)
    report = run_backtest(data, templates, bt)
    out = _out_dir(args)
    jsonio.dump(report.to_dict(), out / "report.json")
    _write_text(out / "pnl.csv", report.pnl_csv())
    _write_text(out / "weights.csv", report.weights_csv())
    return EXIT_OK


def cmd_synth(args, cfg, base):
    data = synth_market(synth_config(cfg, args))
    out = _out_dir(args)
    write_prices(data, out / "prices.csv")
    write_premiums(data, out / "premiums.csv")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "depmatrix": cmd_depmatrix,
    "optimize": cmd_optimize,
    "backtest": cmd_backtest,
    "synth": cmd_synth,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="optdep", description="Copula dependency matrices, portfolio optimisation and option backtests.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", required=name != "fit",
                       help="output directory (fit: JSON file, default stdout)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        if name == "fit":
            p.add_argument("--prices", help="prices.csv (date,ticker,close)")
            p.add_argument("--pair", nargs=2, metavar=("A", "B"))
            p.add_argument("--families", nargs="+", choices=[f.value for f in FITTABLE_FAMILIES])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, base = load_config(args.config)
        return COMMANDS[args.command](args, cfg, base)
    except DegenerateMatrixError as exc:
        code, msg = EXIT_DEGENERATE, f"degenerate dependency matrix: {exc}"
    except InfeasibleProblemError as exc:
        code, msg = EXIT_INFEASIBLE, f"infeasible optimisation: {exc}"
    except (InsufficientDataError, FitError) as exc:
        code, msg = EXIT_FIT, str(exc)
    except (ConfigError, DataError, ParameterDomainError, OSError) as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except ValueError as exc:
        # remaining validation errors (e.g. too few observations to rank)
        code, msg = EXIT_FIT if args.command == "fit" else EXIT_CONFIG, str(exc)
    print(f"optdep {args.command}: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
