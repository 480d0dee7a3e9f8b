"""Event-driven AMM simulator and efficient-frontier experiments.

Trades arrive by Bernoulli thinning of the logistic intensities: per step of
length dt, each (side, size-atom) executes independently with probability
Lambda(z, delta) * w * dt (at most one trade per atom per step; dt must keep
Lambda * w * dt <= 0.1).  Accounting per trade of size z at markup delta:

    AMM buys crypto 1 (side 10):  q1 += z, q0 -= z S, X += z delta
    AMM sells crypto 1 (side 01): q1 -= z, q0 += z S, X += z delta

Excess PnL against the hodl benchmark is X + Y0 + Y1 S with Y = q - q_init.
All randomness derives from a single seed; paths use seed XOR path-index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .calibrate import Sample
from .control import ControlCoeffs, ControlConfig, delta_moments, ergodic_coeffs, solve_control
from .filtering import asymptotic_variance, filtered_params
from .intensity import LiquiditySpec
from .model import NouParams, transition_matrices, _chol2

THINNING_BOUND = 0.1

STRATEGY_GREEDY = 0
STRATEGY_CONSTANT = 1
STRATEGY_NO_QUOTE = 2
_STRATEGY_CODES = {"greedy": STRATEGY_GREEDY, "constant": STRATEGY_CONSTANT,
                   "no-quote": STRATEGY_NO_QUOTE}


@dataclass
class PoolState:
    t: float
    x: float
    y0: float
    y1: float
    q0: float
    q1: float
    s: float
    u_hat: float


@dataclass(frozen=True)
class TradeEvent:
    t: float
    side: str  # "01" or "10"
    z: float
    delta: float
    rate: float


@dataclass
class PathResult:
    excess_pnl: float
    trade_count_01: int
    trade_count_10: int
    terminal: PoolState
    events: list[TradeEvent] | None = field(default=None)


@dataclass(frozen=True)
class FrontierPoint:
    gamma: float
    mean_excess_pnl: float
    std_excess_pnl: float
    n_paths: int


@dataclass
class SimulationSetup:
    """Everything but gamma and the seed: model, liquidity, clocks, reserves."""

    params: NouParams
    liquidity: LiquiditySpec
    dt: float = 10.0 / 86_400.0
    horizon: float = 1.0
    q0_init: float = 0.0
    q1_init: float = 0.0
    ergodic: bool = False
    control_grid_n: int = 10_000

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


def excess_pnl(state: PoolState) -> float:
    return state.x + state.y0 + state.y1 * state.s


def check_thinning_bound(liquidity: LiquiditySpec, dt: float) -> None:
    worst = max(max(side.lam for side in (liquidity.side_01, liquidity.side_10)) * w
                for _, w in liquidity.sizes.atoms)
    if worst * dt > THINNING_BOUND:
        raise ValueError(
            f"dt={dt} violates the thinning bound: max intensity*weight*dt = "
            f"{worst * dt:.4g} > {THINNING_BOUND}; need dt <= {THINNING_BOUND / worst:.4g}")


@njit(cache=True)
def _simulate_price_core(n, s0, u0, f00, f01, f11, c0, c1, shocks):
    s = np.empty(n + 1)
    u = np.empty(n + 1)
    s[0], u[0] = s0, u0
    for i in range(n):
        s[i + 1] = f00 * s[i] + f01 * u[i] + c0 + shocks[i, 0]
        u[i + 1] = f11 * u[i] + c1 + shocks[i, 1]
    return s, u


@njit(cache=True)
def _markup_bisect(lam, a, b, gz, p):
    """Optimal markup for a logistic side: bisection on the FOC over
    [p, p + 50/b], widened while demand is still saturated."""
    width = 50.0 / b
    lo = p
    hi = p + width
    for _ in range(200):
        x = a + b * hi
        if x > 700.0:
            frac = 1.0
        else:
            ex = math.exp(x)
            frac = ex / (1.0 + ex)
        foc = -b * frac * (-math.expm1(-gz * (hi - p))) + gz * math.exp(-gz * (hi - p))
        if foc <= 0.0:
            break
        hi += width
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        x = a + b * mid
        if x > 700.0:
            frac = 1.0
        else:
            ex = math.exp(x)
            frac = ex / (1.0 + ex)
        foc = -b * frac * (-math.expm1(-gz * (mid - p))) + gz * math.exp(-gz * (mid - p))
        if foc > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


@njit(cache=True)
def _logistic_rate(lam, a, b, delta):
    x = a + b * delta
    if x > 700.0:
        return 0.0
    return lam / (1.0 + math.exp(x))


@njit(cache=True)
def _trade_loop(s, dt, kappa, eta, sigma, u_bar, gain, u_hat0,
                z, w, lam01, a01, b01, lam10, a10, b10,
                strategy, const_delta, gamma,
                a11, a12, a13, b1, uniforms,
                ev_t, ev_side, ev_z, ev_delta, ev_rate):
    n = s.shape[0] - 1
    natoms = z.shape[0]
    greedy = strategy == 0
    x_acc = 0.0
    dq0 = 0.0
    dq1 = 0.0
    u_hat = u_hat0
    n_ev = 0
    n01 = 0
    n10 = 0
    for i in range(n):
        si = s[i]
        t = i * dt
        if strategy != 2:
            for j in range(natoms):
                zj = z[j]
                gz = gamma * zj
                if greedy:
                    av_y = a11[i] * dq1 + a12[i] * si + a13[i] * u_hat
                    p01 = -2.0 * av_y + zj * a11[i] - b1[i]
                    p10 = 2.0 * av_y + zj * a11[i] + b1[i]
                    d01 = _markup_bisect(lam01[j], a01[j], b01[j], gz, p01)
                    d10 = _markup_bisect(lam10[j], a10[j], b10[j], gz, p10)
                else:
                    d01 = const_delta
                    d10 = const_delta
                # AMM sells crypto 1 at S + d01
                if uniforms[i, 0, j] < _logistic_rate(lam01[j], a01[j], b01[j], d01) * w[j] * dt:
                    dq1 -= zj
                    dq0 += zj * si
                    x_acc += zj * d01
                    ev_t[n_ev] = t
                    ev_side[n_ev] = 0
                    ev_z[n_ev] = zj
                    ev_delta[n_ev] = d01
                    ev_rate[n_ev] = si + d01
                    n_ev += 1
                    n01 += 1
                # AMM buys crypto 1 at S - d10
                if uniforms[i, 1, j] < _logistic_rate(lam10[j], a10[j], b10[j], d10) * w[j] * dt:
                    dq1 += zj
                    dq0 -= zj * si
                    x_acc += zj * d10
                    ev_t[n_ev] = t
                    ev_side[n_ev] = 1
                    ev_z[n_ev] = zj
                    ev_delta[n_ev] = d10
                    ev_rate[n_ev] = si - d10
                    n_ev += 1
                    n10 += 1
        dw = (s[i + 1] - si + kappa * (si - u_hat) * dt) / sigma
        u_hat = u_hat - eta * (u_hat - u_bar) * dt + gain * dw
    return x_acc, dq0, dq1, u_hat, n_ev, n01, n10


def _coeff_step_arrays(coeffs: ControlCoeffs | None, n_steps: int, dt: float):
    """Per-step (A_1., B_1) rows for the greedy quote, linearly interpolated."""
    if coeffs is None:
        zero = np.zeros(1)
        return zero, zero, zero, zero
    t_steps = dt * np.arange(n_steps)
    if coeffs.ergodic:
        a, b = coeffs.a_mats[0], coeffs.b_vecs[0]
        ones = np.ones(n_steps)
        return a[0, 0] * ones, a[0, 1] * ones, a[0, 2] * ones, b[0] * ones
    tc = coeffs.times
    a11 = np.interp(t_steps, tc, coeffs.a_mats[:, 0, 0])
    a12 = np.interp(t_steps, tc, coeffs.a_mats[:, 0, 1])
    a13 = np.interp(t_steps, tc, coeffs.a_mats[:, 0, 2])
    b1 = np.interp(t_steps, tc, coeffs.b_vecs[:, 0])
    return a11, a12, a13, b1


def _liquidity_arrays(liquidity: LiquiditySpec):
    atoms = liquidity.sizes.atoms
    z = np.array([a[0] for a in atoms])
    w = np.array([a[1] for a in atoms])
    s01, s10 = liquidity.side_01, liquidity.side_10
    rep = lambda v: np.full(len(atoms), v)
    return z, w, rep(s01.lam), rep(s01.a), rep(s01.b), rep(s10.lam), rep(s10.a), rep(s10.b)


def run_path(setup: SimulationSetup, strategy: str, gamma: float, seed: int,
             coeffs: ControlCoeffs | None = None, const_delta: float = 0.0,
             prices: np.ndarray | None = None, keep_events: bool = False) -> PathResult:
    """Run one path: simulated prices (default) or a supplied price array.

    strategy is one of 'greedy', 'constant', 'no-quote'; greedy requires
    solved coefficients.  Deterministic given the seed.
    """
    if strategy not in _STRATEGY_CODES:
        raise ValueError(f"unknown strategy {strategy!r}")
    code = _STRATEGY_CODES[strategy]
    if code == STRATEGY_GREEDY and coeffs is None:
        raise ValueError("greedy strategy requires control coefficients")
    check_thinning_bound(setup.liquidity, setup.dt)
    n = setup.n_steps
    params = setup.params
    rng = np.random.default_rng(seed)
    if prices is None:
        F, c, Q = transition_matrices(setup.dt, params)
        L = _chol2(Q)
        shocks = rng.standard_normal((n, 2)) @ L.T
        s, _ = _simulate_price_core(n, params.u_bar, params.u_bar,
                                    F[0, 0], F[0, 1], F[1, 1], c[0], c[1], shocks)
    else:
        s = np.asarray(prices, dtype=float)
        if s.shape[0] != n + 1:
            raise ValueError(f"price array must have {n + 1} points, got {s.shape[0]}")
    uniforms = rng.random((n, 2, len(setup.liquidity.sizes.atoms)))

    gain = params.kappa / params.sigma * asymptotic_variance(params)
    arrays = _liquidity_arrays(setup.liquidity)
    a11, a12, a13, b1 = _coeff_step_arrays(coeffs if code == STRATEGY_GREEDY else None, n, setup.dt)
    if code == STRATEGY_GREEDY and not coeffs.ergodic:
        if coeffs.times[-1] < setup.horizon - 1e-12:
            raise ValueError("control horizon shorter than the simulation horizon")

    max_ev = 2 * n * len(setup.liquidity.sizes.atoms)
    ev_t = np.empty(max_ev)
    ev_side = np.empty(max_ev, dtype=np.int64)
    ev_z = np.empty(max_ev)
    ev_delta = np.empty(max_ev)
    ev_rate = np.empty(max_ev)

    x_acc, dq0, dq1, u_hat, n_ev, n01, n10 = _trade_loop(
        s, setup.dt, params.kappa, params.eta, params.sigma, params.u_bar,
        gain, params.u_bar, *arrays, code, const_delta, gamma,
        a11, a12, a13, b1, uniforms, ev_t, ev_side, ev_z, ev_delta, ev_rate)

    terminal = PoolState(t=setup.horizon, x=x_acc, y0=dq0, y1=dq1,
                         q0=setup.q0_init + dq0, q1=setup.q1_init + dq1,
                         s=float(s[-1]), u_hat=u_hat)
    events = None
    if keep_events:
        events = [TradeEvent(t=float(ev_t[i]), side="01" if ev_side[i] == 0 else "10",
                             z=float(ev_z[i]), delta=float(ev_delta[i]),
                             rate=float(ev_rate[i])) for i in range(n_ev)]
    return PathResult(excess_pnl=excess_pnl(terminal), trade_count_01=int(n01),
                      trade_count_10=int(n10), terminal=terminal, events=events)


def solve_strategy_coeffs(setup: SimulationSetup, gamma: float) -> ControlCoeffs:
    fparams = filtered_params(setup.params)
    deltas = delta_moments(setup.liquidity, gamma)
    config = ControlConfig(gamma=gamma, horizon_T=setup.horizon,
                           grid_n=setup.control_grid_n, ergodic=setup.ergodic)
    if setup.ergodic:
        return ergodic_coeffs(fparams, config, deltas)
    return solve_control(fparams, config, deltas)


def _aggregate(gamma: float, pnls: np.ndarray) -> FrontierPoint:
    return FrontierPoint(gamma=gamma, mean_excess_pnl=float(np.mean(pnls)),
                         std_excess_pnl=float(np.std(pnls, ddof=1)),
                         n_paths=len(pnls))


def frontier(setup: SimulationSetup, gamma_grid, n_paths: int, seed: int,
             strategy: str = "greedy", const_delta: float = 0.0) -> list[FrontierPoint]:
    """Mean/std of excess PnL per gamma over n_paths independent paths.

    Path p of every gamma uses seed XOR p, so gammas share price paths
    (common random numbers).
    """
    if n_paths < 2:
        raise ValueError("need n_paths >= 2")
    points = []
    for gamma in gamma_grid:
        coeffs = solve_strategy_coeffs(setup, gamma) if strategy == "greedy" else None
        pnls = np.empty(n_paths)
        for p in range(n_paths):
            try:
                res = run_path(setup, strategy, gamma, seed ^ p, coeffs=coeffs,
                               const_delta=const_delta)
            except Exception as exc:
                raise RuntimeError(f"path failure at gamma={gamma}, path={p}: {exc}") from exc
            pnls[p] = res.excess_pnl
        points.append(_aggregate(gamma, pnls))
    return points


def _historical_segment(series: Sample, start_time: float, n_steps: int,
                        dt: float) -> np.ndarray:
    """Piecewise-constant read of the series on the path grid (no lookahead)."""
    grid = start_time + dt * np.arange(n_steps + 1)
    idx = np.searchsorted(series.times, grid, side="right") - 1
    if idx[0] < 0:
        raise ValueError("window starts before the first observation")
    return series.values[idx]


def historical_replay(series: Sample, setup: SimulationSetup, gamma_grid,
                      n_starts: int, seed: int, strategy: str = "greedy",
                      const_delta: float = 0.0) -> list[FrontierPoint]:
    """Frontier on historical prices from n_starts random window starts.

    Start times are drawn uniformly (seeded) among positions where the full
    window fits inside the series.
    """
    window = setup.horizon
    t_first, t_last = float(series.times[0]), float(series.times[-1])
    span = t_last - t_first - window
    if span < 0:
        raise ValueError(f"series span {t_last - t_first:.4g} days shorter than "
                         f"the {window:.4g}-day window")
    rng = np.random.default_rng(seed)
    starts = t_first + span * rng.random(n_starts)
    points = []
    for gamma in gamma_grid:
        coeffs = solve_strategy_coeffs(setup, gamma) if strategy == "greedy" else None
        pnls = np.empty(n_starts)
        for p in range(n_starts):
            prices = _historical_segment(series, float(starts[p]), setup.n_steps, setup.dt)
            try:
                res = run_path(setup, strategy, gamma, seed ^ p, coeffs=coeffs,
                               const_delta=const_delta, prices=prices)
            except Exception as exc:
                raise RuntimeError(f"path failure at gamma={gamma}, path={p}: {exc}") from exc
            pnls[p] = res.excess_pnl
        points.append(_aggregate(gamma, pnls))
    return points


def replay_events(events: list[TradeEvent], q0_init: float = 0.0,
                  q1_init: float = 0.0) -> tuple[float, float, float]:
    """Re-accumulate (X, Y0, Y1) from an event log; oracle for the accounting."""
    x = y0 = y1 = 0.0
    for ev in events:
        if ev.side == "10":
            s = ev.rate + ev.delta
            y1 += ev.z
            y0 -= ev.z * s
        else:
            s = ev.rate - ev.delta
            y1 -= ev.z
            y0 += ev.z * s
        x += ev.z * ev.delta
    return x, y0, y1
