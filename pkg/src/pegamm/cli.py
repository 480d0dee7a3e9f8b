"""Command-line surface: ingest, calibrate, filter, quote, simulate, frontier, replay.

All outputs are UTF-8 CSV/JSON, byte-reproducible given identical inputs and
seed.  Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .calibrate import (ConditioningError, Sample, discount_series, estimate_yield,
                        fit_mle)
from .control import (ControlBlowupError, ControlCoeffs, ControlConfig,
                      delta_moments, ergodic_coeffs, greedy_markups, solve_control)
from .filtering import filter_series, filtered_params
from .intensity import LiquiditySpec, optimal_markup
from .model import InvalidParamsError, NouParams
from .presets import PRESETS, preset_liquidity, preset_params
from .seriesio import (SECONDS_PER_DAY, RawSeries, SeriesFormatError, cross_rate,
                       read_series_csv, resample_ffill, write_series_csv)
from .simulate import SimulationSetup, frontier, historical_replay, run_path

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_VALIDATION_ERRORS = (SeriesFormatError, InvalidParamsError, ValueError, KeyError,
                      FileNotFoundError, IsADirectoryError, json.JSONDecodeError)
_NUMERICAL_ERRORS = (ConditioningError, ControlBlowupError, FloatingPointError,
                     ArithmeticError, RuntimeError)


def _parse_duration(text: str) -> float:
    """Duration in seconds from '900', '15m', '10s', '1h' or '1d'."""
    text = text.strip().lower()
    mult = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}
    if text and text[-1] in mult:
        return float(text[:-1]) * mult[text[-1]]
    return float(text)


def _load_params(path: str) -> NouParams:
    with open(path) as fh:
        doc = json.load(fh)
    if "preset" in doc:
        return preset_params(doc["preset"])
    return NouParams(kappa=doc["kappa"], eta=doc["eta"], sigma=doc["sigma"],
                     nu=doc["nu"], u_bar=doc["u_bar"])


def _load_config(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if "preset" in doc:
        name = doc["preset"]
        doc.setdefault("params", None)
        params = preset_params(name)
        liquidity = preset_liquidity(name)
    else:
        p = doc["params"]
        params = NouParams(kappa=p["kappa"], eta=p["eta"], sigma=p["sigma"],
                           nu=p["nu"], u_bar=p["u_bar"])
        liquidity = None
    if "liquidity" in doc and doc["liquidity"] is not None:
        liq = doc["liquidity"]
        liquidity = (LiquiditySpec.load(liq) if isinstance(liq, str)
                     else LiquiditySpec.from_json_dict(liq))
    if liquidity is None:
        raise ValueError(f"{path}: config needs 'liquidity' (or a preset)")
    setup = SimulationSetup(
        params=params,
        liquidity=liquidity,
        dt=float(doc.get("dt_seconds", 10.0)) / SECONDS_PER_DAY,
        horizon=float(doc.get("horizon_days", 1.0)),
        q0_init=float(doc.get("q0_init", 0.0)),
        q1_init=float(doc.get("q1_init", 0.0)),
        ergodic=bool(doc.get("ergodic", False)),
        control_grid_n=int(doc.get("control_grid_n", 10_000)),
    )
    return {
        "setup": setup,
        "gamma": float(doc.get("gamma", 1e-4)),
        "strategy": doc.get("strategy", "greedy"),
        "const_delta": float(doc.get("const_delta", 0.0)),
    }


def _dump_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_frontier_csv(points, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("gamma,mean_excess_pnl,std_excess_pnl,n_paths\n")
        for p in points:
            fh.write(f"{p.gamma:.17g},{p.mean_excess_pnl:.17g},"
                     f"{p.std_excess_pnl:.17g},{p.n_paths}\n")


def _cmd_ingest(args) -> int:
    step = _parse_duration(args.step)
    num = resample_ffill(read_series_csv(args.num), step)
    den = resample_ffill(read_series_csv(args.den), step)
    write_series_csv(cross_rate(num, den), args.out)
    return EXIT_OK


def _sample_from_csv(path: str, resample: str | None) -> Sample:
    series = read_series_csv(path)
    if resample is not None:
        series = resample_ffill(series, _parse_duration(resample))
    return Sample(times=series.times_days(), values=series.prices)


def _cmd_calibrate(args) -> int:
    sample = _sample_from_csv(args.data, args.resample)
    doc: dict = {}
    if args.detrend_yield:
        est = estimate_yield(sample)
        doc["r"] = est.r
        sample = discount_series(sample, est.r)
    fit = fit_mle(sample, seed=args.seed)
    doc.update(fit.to_json_dict())
    _dump_json(doc, args.out)
    return EXIT_OK


def _cmd_filter(args) -> int:
    sample = _sample_from_csv(args.data, None)
    params = _load_params(args.params)
    states = filter_series(sample.times, sample.values, params)
    with open(args.out, "w") as fh:
        fh.write("t,s,u_hat,v\n")
        for st, s in zip(states, sample.values):
            fh.write(f"{st.t:.17g},{s:.17g},{st.u_hat:.17g},{st.v:.17g}\n")
    return EXIT_OK


def _cmd_quote(args) -> int:
    params = _load_params(args.params)
    liquidity = LiquiditySpec.load(args.liquidity)
    y1, s, u_hat, t = (float(x) for x in args.state.split(","))
    sizes = [float(x) for x in args.sizes.split(",")]
    gamma = args.gamma
    if args.zero_coeffs:
        quotes = {f"{z:g}": {
            "ask_markup": optimal_markup(liquidity.side_01, z, 0.0, gamma),
            "bid_markup": optimal_markup(liquidity.side_10, z, 0.0, gamma),
        } for z in sizes}
    else:
        if args.coeffs is not None:
            coeffs = ControlCoeffs.load(args.coeffs)
        else:
            fparams = filtered_params(params)
            deltas = delta_moments(liquidity, gamma)
            config = ControlConfig(gamma=gamma, ergodic=args.ergodic)
            coeffs = (ergodic_coeffs(fparams, config, deltas) if args.ergodic
                      else solve_control(fparams, config, deltas))
        quotes = {f"{z:g}": {
            "ask_markup": greedy_markups(coeffs, liquidity, t, y1, s, u_hat, z, "01"),
            "bid_markup": greedy_markups(coeffs, liquidity, t, y1, s, u_hat, z, "10"),
        } for z in sizes}
    _dump_json({"gamma": gamma, "state": {"y1": y1, "s": s, "u_hat": u_hat, "t": t},
                "quotes": quotes}, args.out)
    return EXIT_OK


def _solve_coeffs(cfg: dict):
    setup: SimulationSetup = cfg["setup"]
    if cfg["strategy"] != "greedy":
        return None
    from .simulate import solve_strategy_coeffs
    return solve_strategy_coeffs(setup, cfg["gamma"])


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    setup: SimulationSetup = cfg["setup"]
    coeffs = _solve_coeffs(cfg)
    result = run_path(setup, cfg["strategy"], cfg["gamma"], args.seed,
                      coeffs=coeffs, const_delta=cfg["const_delta"], keep_events=True)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "events.csv"), "w") as fh:
        fh.write("t,side,z,delta,rate\n")
        for ev in result.events:
            fh.write(f"{ev.t:.17g},{ev.side},{ev.z:.17g},{ev.delta:.17g},{ev.rate:.17g}\n")
    term = result.terminal
    _dump_json({
        "excess_pnl": result.excess_pnl,
        "trade_count_01": result.trade_count_01,
        "trade_count_10": result.trade_count_10,
        "terminal": {"t": term.t, "x": term.x, "y0": term.y0, "y1": term.y1,
                     "q0": term.q0, "q1": term.q1, "s": term.s, "u_hat": term.u_hat},
    }, os.path.join(args.out, "summary.json"))
    return EXIT_OK


def _cmd_frontier(args) -> int:
    cfg = _load_config(args.config)
    gammas = [float(g) for g in args.gammas.split(",")]
    points = frontier(cfg["setup"], gammas, args.paths, args.seed,
                      strategy=cfg["strategy"], const_delta=cfg["const_delta"])
    _write_frontier_csv(points, args.out)
    return EXIT_OK


def _cmd_replay(args) -> int:
    cfg = _load_config(args.config)
    sample = _sample_from_csv(args.data, None)
    gammas = [float(g) for g in args.gammas.split(",")]
    points = historical_replay(sample, cfg["setup"], gammas, args.starts, args.seed,
                               strategy=cfg["strategy"], const_delta=cfg["const_delta"])
    _write_frontier_csv(points, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pegamm",
        description="Nested-OU exchange-rate modeling and optimal AMM quoting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="resample two feeds and emit their cross rate")
    p.add_argument("--num", required=True, help="numerator CSV (timestamp,price)")
    p.add_argument("--den", required=True, help="denominator CSV (timestamp,price)")
    p.add_argument("--step", required=True, help="grid step, e.g. 900 or 15m")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("calibrate", help="maximum-likelihood fit of the model")
    p.add_argument("--data", required=True, help="price CSV (timestamp,price)")
    p.add_argument("--resample", default=None, help="optional grid step, e.g. 15m")
    p.add_argument("--detrend-yield", action="store_true",
                   help="estimate and remove a constant yield before fitting")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON output (default stdout)")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("filter", help="run the online target filter over a series")
    p.add_argument("--data", required=True, help="price CSV (timestamp,price)")
    p.add_argument("--params", required=True, help="model parameters JSON")
    p.add_argument("--out", required=True, help="CSV out: t,s,u_hat,v")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("quote", help="print per-size bid/ask markups as JSON")
    p.add_argument("--params", required=True)
    p.add_argument("--liquidity", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--ergodic", action="store_true")
    p.add_argument("--state", required=True, help="y1,S,u_hat,t")
    p.add_argument("--sizes", required=True, help="comma-separated trade sizes")
    p.add_argument("--coeffs", default=None, help="reuse saved coefficients JSON")
    p.add_argument("--zero-coeffs", action="store_true",
                   help="quote with A=B=0 (pure per-trade optimum)")
    p.add_argument("--out", default=None, help="JSON output (default stdout)")
    p.set_defaults(func=_cmd_quote)

    p = sub.add_parser("simulate", help="run one path and write its event log")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("frontier", help="gamma sweep on simulated prices")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas", required=True, help="comma-separated gamma grid")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("replay", help="gamma sweep on historical prices")
    p.add_argument("--data", required=True, help="price CSV (timestamp,price)")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas", required=True, help="comma-separated gamma grid")
    p.add_argument("--starts", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
