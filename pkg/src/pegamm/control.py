"""Quadratic value-function coefficients and the greedy markup rule.

The value-function correction is the quadratic ansatz

    theta(t, y, S, U_hat) = -v^T A(t) v - v^T B(t) - C(t),   v = (y, S, U_hat),

with terminal A(T) = B(T) = 0 (C is never needed for the markups).  A and B
solve the backward system

    A' = A M A + A U + U^T A + R
    B' = A M B + A V + 2 D221 * A_yy * (A e_y) + U^T B

where M, U, R, V are built from (gamma, sigma, nu_hat, kappa, eta, u_bar)
and the size-integrated quadratic Hamiltonian moments D_{i,j,eps}.  The
filtered volatility nu_hat is used in every diffusion and risk term.

Greedy quoting evaluates the per-trade reservation shift

    p_01 = -2 (A v)_y + z A_yy - B_y        (AMM sells crypto 1)
    p_10 = +2 (A v)_y + z A_yy + B_y        (AMM buys crypto 1)

which is the exact expansion of [theta(y) - theta(y -/+ z)] / z, and maps it
through the optimal-markup function of the intensity module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .filtering import FilteredNouParams
from .intensity import LiquiditySpec, optimal_markup, quad_fit


class ControlBlowupError(RuntimeError):
    """Riccati escape: the A coefficients left the bounded regime."""


@dataclass(frozen=True)
class ControlConfig:
    gamma: float
    horizon_T: float = 1.0
    grid_n: int = 10_000
    ergodic: bool = False

    def __post_init__(self):
        if self.gamma <= 0 or self.horizon_T <= 0:
            raise ValueError("gamma and horizon_T must be positive")
        if self.grid_n < 100:
            raise ValueError("grid_n must be at least 100")


@dataclass(frozen=True)
class DeltaMoments:
    """Size-integrated quadratic-Hamiltonian moments.

    d_211 = sum_z z   (alpha2_10 + alpha2_01) w
    d_11m = sum_z z   (alpha1_10 - alpha1_01) w
    d_22m = sum_z z^2 (alpha2_10 - alpha2_01) w
    """

    d_211: float
    d_11m: float
    d_22m: float


@dataclass
class ControlCoeffs:
    """Time grids of A(t) (symmetric 3x3, state order (y, S, U_hat)) and B(t)."""

    times: np.ndarray
    a_mats: np.ndarray
    b_vecs: np.ndarray
    deltas: DeltaMoments
    gamma: float
    ergodic: bool = False

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Linearly interpolated (A(t), B(t)); the ergodic variant always
        returns (A(0), B(0))."""
        if self.ergodic:
            return self.a_mats[0], self.b_vecs[0]
        t0, t1 = self.times[0], self.times[-1]
        if not t0 <= t <= t1:
            raise ValueError(f"t={t} outside the coefficient grid [{t0}, {t1}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(i, len(self.times) - 2)
        w = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        a = (1 - w) * self.a_mats[i] + w * self.a_mats[i + 1]
        b = (1 - w) * self.b_vecs[i] + w * self.b_vecs[i + 1]
        return a, b

    def to_json_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "a_mats": self.a_mats.reshape(len(self.times), 9).tolist(),
            "b_vecs": self.b_vecs.tolist(),
            "gamma": self.gamma,
            "ergodic": self.ergodic,
            "deltas": [self.deltas.d_211, self.deltas.d_11m, self.deltas.d_22m],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ControlCoeffs":
        times = np.asarray(doc["times"], dtype=float)
        return cls(
            times=times,
            a_mats=np.asarray(doc["a_mats"], dtype=float).reshape(len(times), 3, 3),
            b_vecs=np.asarray(doc["b_vecs"], dtype=float),
            deltas=DeltaMoments(*doc["deltas"]),
            gamma=doc["gamma"],
            ergodic=doc["ergodic"],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "ControlCoeffs":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def delta_moments(liquidity: LiquiditySpec, gamma: float) -> DeltaMoments:
    d_211 = d_11m = d_22m = 0.0
    for z, w in liquidity.sizes.atoms:
        q01 = quad_fit(liquidity.side_01, z, gamma)
        q10 = quad_fit(liquidity.side_10, z, gamma)
        d_211 += z * (q10.alpha2 + q01.alpha2) * w
        d_11m += z * (q10.alpha1 - q01.alpha1) * w
        d_22m += z * z * (q10.alpha2 - q01.alpha2) * w
    return DeltaMoments(d_211=d_211, d_11m=d_11m, d_22m=d_22m)


def system_matrices(params: FilteredNouParams, gamma: float,
                    deltas: DeltaMoments) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(M, U, R, V) of the backward system, state order (y, S, U_hat)."""
    k, e, ub = params.base.kappa, params.base.eta, params.base.u_bar
    s, nh = params.base.sigma, params.nu_hat
    m = 2.0 * np.array([
        [deltas.d_211, 0.0, 0.0],
        [0.0, -gamma * s * s, -gamma * s * nh],
        [0.0, -gamma * s * nh, -gamma * nh * nh],
    ])
    u = np.array([
        [0.0, 0.0, 0.0],
        [gamma * s * s, k, -k],
        [gamma * s * nh, 0.0, e],
    ])
    r = 0.5 * np.array([
        [-gamma * s * s, -k, k],
        [-k, 0.0, 0.0],
        [k, 0.0, 0.0],
    ])
    v = 2.0 * np.array([deltas.d_11m, 0.0, -e * ub])
    return m, u, r, v


@njit(cache=True)
def _integrate_backward(m, u, r, v, d_22m, T, n):
    """Classic RK4 on the stacked (A, B) system, backward from A(T)=B(T)=0.

    Returns (times ascending, A at each time, B at each time, blowup index or -1).
    """
    h = T / n
    a = np.zeros((3, 3))
    b = np.zeros(3)
    a_out = np.zeros((n + 1, 3, 3))
    b_out = np.zeros((n + 1, 3))
    ut = u.T.copy()

    def rhs(a, b):
        am = a @ m
        da = am @ a + a @ u + ut @ a + r
        db = am @ b + a @ v + 2.0 * d_22m * a[0, 0] * a[:, 0] + ut @ b
        return da, db

    for i in range(n):
        da1, db1 = rhs(a, b)
        da2, db2 = rhs(a - 0.5 * h * da1, b - 0.5 * h * db1)
        da3, db3 = rhs(a - 0.5 * h * da2, b - 0.5 * h * db2)
        da4, db4 = rhs(a - h * da3, b - h * db3)
        a = a - h / 6.0 * (da1 + 2.0 * da2 + 2.0 * da3 + da4)
        b = b - h / 6.0 * (db1 + 2.0 * db2 + 2.0 * db3 + db4)
        a = 0.5 * (a + a.T)
        a_out[n - 1 - i] = a
        b_out[n - 1 - i] = b
        if np.abs(a).max() > 1e12:
            return a_out, b_out, n - 1 - i
    return a_out, b_out, -1


def solve_control(params: FilteredNouParams, config: ControlConfig,
                  deltas: DeltaMoments) -> ControlCoeffs:
    """Integrate the backward system on a uniform grid of config.grid_n steps."""
    m, u, r, v = system_matrices(params, config.gamma, deltas)
    a_out, b_out, blowup = _integrate_backward(m, u, r, v, deltas.d_22m,
                                               config.horizon_T, config.grid_n)
    if blowup >= 0:
        t_bad = config.horizon_T * blowup / config.grid_n
        raise ControlBlowupError(f"coefficient blow-up at t={t_bad:.6g} (backward)")
    times = np.linspace(0.0, config.horizon_T, config.grid_n + 1)
    return ControlCoeffs(times=times, a_mats=a_out, b_vecs=b_out, deltas=deltas,
                         gamma=config.gamma, ergodic=config.ergodic)


def ode_rhs(coeffs: ControlCoeffs, params: FilteredNouParams,
            a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides A'(t), B'(t) at a given (A, B); used by residual checks."""
    m, u, r, v = system_matrices(params, coeffs.gamma, coeffs.deltas)
    am = a @ m
    da = am @ a + a @ u + u.T @ a + r
    db = am @ b + a @ v + 2.0 * coeffs.deltas.d_22m * a[0, 0] * a[:, 0] + u.T @ b
    return da, db


def reservation_shift(coeffs: ControlCoeffs, t: float, y1: float, s: float,
                      u_hat: float, z: float, side: str) -> float:
    """p = [theta(y) - theta(y -/+ z)] / z from the quadratic ansatz."""
    a, b = coeffs.at(t)
    av_y = a[0, 0] * y1 + a[0, 1] * s + a[0, 2] * u_hat
    if side == "01":
        return -2.0 * av_y + z * a[0, 0] - b[0]
    if side == "10":
        return 2.0 * av_y + z * a[0, 0] + b[0]
    raise ValueError("side must be '01' or '10'")


def greedy_markups(coeffs: ControlCoeffs, liquidity: LiquiditySpec, t: float,
                   y1: float, s: float, u_hat: float, z: float, side: str) -> float:
    """Optimal markup for one side and size under the solved coefficients."""
    p = reservation_shift(coeffs, t, y1, s, u_hat, z, side)
    intens = liquidity.side_01 if side == "01" else liquidity.side_10
    return optimal_markup(intens, z, p, coeffs.gamma)


def ergodic_coeffs(params: FilteredNouParams, config: ControlConfig,
                   deltas: DeltaMoments, rel_tol: float = 1e-5) -> ControlCoeffs:
    """Stationary (A(0), B(0)): double T until A(0) stabilizes in relative norm.

    The step size is held fixed at horizon_T / grid_n while T doubles.
    """
    m, u, r, v = system_matrices(params, config.gamma, deltas)
    h = config.horizon_T / config.grid_n
    T = config.horizon_T
    prev_a = None
    prev_b = None
    for _ in range(20):
        n = int(round(T / h))
        if n > 5_000_000:
            raise ControlBlowupError(
                f"ergodic coefficients did not stabilize by T={T:g} (step budget "
                "exhausted); the quadratic backward system has no reachable "
                "stationary point at these parameters")
        a_out, b_out, blowup = _integrate_backward(m, u, r, v, deltas.d_22m, T, n)
        if blowup >= 0:
            raise ControlBlowupError(f"coefficient blow-up while extending T to {T}")
        a0, b0 = a_out[0], b_out[0]
        if prev_a is not None:
            scale = max(float(np.abs(a0).max()), 1e-300)
            if float(np.abs(a0 - prev_a).max()) < rel_tol * scale:
                times = np.array([0.0, config.horizon_T])
                return ControlCoeffs(
                    times=times,
                    a_mats=np.stack([a0, a0]),
                    b_vecs=np.stack([b0, b0]),
                    deltas=deltas, gamma=config.gamma, ergodic=True)
        prev_a, prev_b = a0, b0
        T *= 2.0
    raise ControlBlowupError("ergodic coefficients did not stabilize after 20 doublings")
