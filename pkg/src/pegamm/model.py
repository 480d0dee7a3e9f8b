"""Nested Ornstein-Uhlenbeck exchange-rate model.

The observed rate S mean-reverts at rate kappa towards a latent target U,
which itself mean-reverts at rate eta towards a constant u_bar:

    dS = -kappa (S - U) dt + sigma dW_S
    dU = -eta  (U - u_bar) dt + nu dW_U

All rates are per day, volatilities per sqrt(day).  The module provides the
closed-form conditional mean, the stationary autocovariance function and an
exact-transition simulator (no Euler bias: each step samples the true joint
Gaussian transition of (S, U)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative floor on kappa - eta, guarding the 1/(kappa - eta) singularity.
_KAPPA_ETA_REL_FLOOR = 1e-9


class InvalidParamsError(ValueError):
    """Raised when model parameters violate their constraints."""


@dataclass(frozen=True)
class NouParams:
    """Parameters of the nested OU model.

    kappa, eta in day^-1 with kappa > eta > 0; sigma, nu in quote-asset per
    sqrt(day); u_bar in quote-asset units.
    """

    kappa: float
    eta: float
    sigma: float
    nu: float
    u_bar: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.kappa, self.eta, self.sigma, self.nu, self.u_bar))):
            raise InvalidParamsError("parameters must be finite")
        if self.eta <= 0.0 or self.kappa <= self.eta:
            raise InvalidParamsError(
                f"need kappa > eta > 0, got kappa={self.kappa}, eta={self.eta}"
            )
        if self.kappa - self.eta < _KAPPA_ETA_REL_FLOOR * self.kappa:
            raise InvalidParamsError("kappa - eta below relative floor of 1e-9 * kappa")
        if self.sigma <= 0.0:
            raise InvalidParamsError("sigma must be positive")
        if self.nu < 0.0:
            raise InvalidParamsError("nu must be non-negative")
        if self.u_bar <= 0.0:
            raise InvalidParamsError("u_bar must be positive")


@dataclass(frozen=True)
class PathState:
    """One point of a (S, U) trajectory. Time in days."""

    t: float
    s: float
    u: float


@dataclass
class PricePath:
    """A simulated or observed price trajectory on a strictly increasing grid."""

    times: np.ndarray
    values: np.ndarray
    latent: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.latent is not None:
            self.latent = np.asarray(self.latent, dtype=float)
            if self.latent.shape != self.times.shape:
                raise ValueError("latent must match times in length")

    def to_csv(self, path) -> None:
        cols = [self.times, self.values]
        header = "t,s"
        if self.latent is not None:
            cols.append(self.latent)
            header += ",u"
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
                   comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "PricePath":
        data = np.genfromtxt(path, delimiter=",", names=True)
        latent = data["u"] if "u" in (data.dtype.names or ()) else None
        return cls(times=np.atleast_1d(data["t"]), values=np.atleast_1d(data["s"]),
                   latent=None if latent is None else np.atleast_1d(latent))


def stationary_cov(tau, params: NouParams):
    """Stationary autocovariance of S at lag tau (days).

    C(tau) = 1/2 * kappa^2 nu^2 / (eta (kappa^2 - eta^2)) * exp(-eta|tau|)
           + 1/2 * (sigma^2/kappa - kappa nu^2 / (kappa^2 - eta^2)) * exp(-kappa|tau|)
    """
    k, e, s2, n2 = params.kappa, params.eta, params.sigma**2, params.nu**2
    atau = np.abs(tau)
    d = k * k - e * e
    c_slow = 0.5 * k * k * n2 / (e * d)
    c_fast = 0.5 * (s2 / k - k * n2 / d)
    return c_slow * np.exp(-e * atau) + c_fast * np.exp(-k * atau)


def stationary_cross_moments(params: NouParams) -> tuple[float, float, float]:
    """Stationary (Var S, Cov(S, U), Var U)."""
    k, e, n2 = params.kappa, params.eta, params.nu**2
    var_s = float(stationary_cov(0.0, params))
    cov_su = k * n2 / (2.0 * e * (k + e))
    var_u = n2 / (2.0 * e)
    return var_s, cov_su, var_u


def conditional_mean(t, s0: float, u0: float, params: NouParams):
    """E[S_t | S_0 = s0, U_0 = u0] for horizon t >= 0 (days)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("horizon t must be non-negative")
    k, e, ub = params.kappa, params.eta, params.u_bar
    ek, ee = np.exp(-k * t), np.exp(-e * t)
    return ub + (s0 - ub) * ek + k / (k - e) * (u0 - ub) * (ee - ek)


def transition_mean(dt: float, s: float, u: float, params: NouParams) -> tuple[float, float]:
    """Exact one-step conditional mean of (S, U) after a step of dt days."""
    k, e, ub = params.kappa, params.eta, params.u_bar
    ek, ee = math.exp(-k * dt), math.exp(-e * dt)
    ms = ub + (s - ub) * ek + k / (k - e) * (u - ub) * (ee - ek)
    mu = ub + (u - ub) * ee
    return ms, mu


def transition_matrices(dt: float, params: NouParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact discrete transition x' = F x + c + w, w ~ N(0, Q), x = (S, U).

    F and c follow from the conditional mean; Q integrates the stochastic
    convolution terms of the explicit solution in closed form.
    """
    k, e, ub = params.kappa, params.eta, params.u_bar
    s2, n2 = params.sigma**2, params.nu**2
    ek, ee = math.exp(-k * dt), math.exp(-e * dt)
    g = k / (k - e)
    F = np.array([[ek, g * (ee - ek)], [0.0, ee]])
    c = np.array([ub * (1.0 - ek - g * (ee - ek)), ub * (1.0 - ee)])

    i_2e = -math.expm1(-2.0 * e * dt) / (2.0 * e)
    i_2k = -math.expm1(-2.0 * k * dt) / (2.0 * k)
    i_ke = -math.expm1(-(k + e) * dt) / (k + e)
    var_u = n2 * i_2e
    cov_su = g * n2 * (i_2e - i_ke)
    var_s = g * g * n2 * (i_2e + i_2k - 2.0 * i_ke) + s2 * i_2k
    Q = np.array([[var_s, cov_su], [cov_su, var_u]])
    return F, c, Q


def _chol2(Q: np.ndarray) -> np.ndarray:
    """Cholesky factor of a 2x2 PSD matrix, tolerant of a zero diagonal."""
    a = math.sqrt(max(Q[0, 0], 0.0))
    b = Q[0, 1] / a if a > 0.0 else 0.0
    c = math.sqrt(max(Q[1, 1] - b * b, 0.0))
    return np.array([[a, 0.0], [b, c]])


def simulate_exact(params: NouParams, s0: float, u0: float, dt: float,
                   n_steps: int, seed: int) -> PricePath:
    """Simulate (S, U) by exact Gaussian transition sampling.

    Deterministic given the seed. Returns the path including the latent U
    (used by filter-accuracy tests; control logic must not read it).
    """
    if not (math.isfinite(s0) and math.isfinite(u0)):
        raise ValueError("initial values must be finite")
    if dt <= 0:
        raise ValueError("dt must be positive")
    F, c, Q = transition_matrices(dt, params)
    L = _chol2(Q)
    rng = np.random.default_rng(seed)
    shocks = rng.standard_normal((n_steps, 2)) @ L.T
    s = np.empty(n_steps + 1)
    u = np.empty(n_steps + 1)
    s[0], u[0] = s0, u0
    f00, f01, f11 = F[0, 0], F[0, 1], F[1, 1]
    c0, c1 = c
    for i in range(n_steps):
        s[i + 1] = f00 * s[i] + f01 * u[i] + c0 + shocks[i, 0]
        u[i + 1] = f11 * u[i] + c1 + shocks[i, 1]
    times = dt * np.arange(n_steps + 1)
    return PricePath(times=times, values=s, latent=u)


def stationary_draw(params: NouParams, rng: np.random.Generator) -> tuple[float, float]:
    """Draw (S, U) from the stationary joint distribution."""
    var_s, cov_su, var_u = stationary_cross_moments(params)
    cov = np.array([[var_s, cov_su], [cov_su, var_u]])
    x = rng.multivariate_normal([params.u_bar, params.u_bar], cov, method="cholesky")
    return float(x[0]), float(x[1])
