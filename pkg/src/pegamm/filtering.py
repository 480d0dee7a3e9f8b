"""Online estimation of the latent target U from observed prices.

Scalar path: the filtered pair (S, U_hat) obeys

    dS     = -kappa (S - U_hat) dt + sigma dW_hat
    dU_hat = -eta (U_hat - u_bar) dt + (kappa/sigma) V_t dW_hat

with the conditional variance V_t solving the Riccati ODE

    dV/dt = -2 eta V + nu^2 - (kappa^2/sigma^2) V^2.

Matrix path: the general linear-Gaussian filter (observation Z in R^k,
latent zeta in R^d) with gain

    psi_t = [0; V_t]^T Gamma^T Sigma_Z^{-1/2} + Sigma_zeta^{1/2} rho_tilde^T

and the matrix Riccati equation dV/dt = Theta V + V Theta^T + Sigma_zeta
- psi psi^T.  The scalar filter is the k = d = 1 specialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import sqrtm

from .model import NouParams


@dataclass(frozen=True)
class FilterState:
    u_hat: float
    v: float
    t: float


@dataclass(frozen=True)
class FilteredNouParams:
    """Base parameters plus the effective filtered volatility nu_hat <= nu."""

    base: NouParams
    nu_hat: float

    def __post_init__(self):
        if not (0.0 <= self.nu_hat <= self.base.nu):
            raise ValueError("nu_hat must lie in [0, nu]")


def asymptotic_variance(params: NouParams) -> float:
    """Fixed point V_inf of the variance ODE: nu^2 / (eta + sqrt(eta^2 + (kappa nu/sigma)^2))."""
    k, e, s, n = params.kappa, params.eta, params.sigma, params.nu
    return n * n / (e + math.sqrt(e * e + (k * n / s) ** 2))


def effective_nu_hat(params: NouParams) -> float:
    """nu_hat = nu * (kappa nu / sigma) / (eta + sqrt(eta^2 + (kappa nu/sigma)^2));
    equals (kappa/sigma) V_inf."""
    k, e, s, n = params.kappa, params.eta, params.sigma, params.nu
    r = k * n / s
    return n * r / (e + math.sqrt(e * e + r * r))


def filtered_params(params: NouParams) -> FilteredNouParams:
    return FilteredNouParams(base=params, nu_hat=effective_nu_hat(params))


def _variance_rhs(v: float, params: NouParams) -> float:
    k, e, s, n = params.kappa, params.eta, params.sigma, params.nu
    return -2.0 * e * v + n * n - (k * k) / (s * s) * v * v


def _rk4_scalar(v0: float, h: float, n: int, params: NouParams) -> float:
    v = v0
    step = h / n
    for _ in range(n):
        k1 = _variance_rhs(v, params)
        k2 = _variance_rhs(v + 0.5 * step * k1, params)
        k3 = _variance_rhs(v + 0.5 * step * k2, params)
        k4 = _variance_rhs(v + step * k3, params)
        v = v + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def variance_ode_evolve(v0: float, horizon: float, params: NouParams,
                        tol: float = 1e-12) -> float:
    """Integrate the variance ODE over [0, horizon] with classic RK4.

    The substep count is doubled until halving the step changes the result
    by less than tol.
    """
    if v0 < 0:
        raise ValueError("v0 must be non-negative")
    if horizon == 0.0:
        return v0
    n = 1
    prev = _rk4_scalar(v0, horizon, n, params)
    for _ in range(24):
        n *= 2
        cur = _rk4_scalar(v0, horizon, n, params)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def filter_series(times: np.ndarray, prices: np.ndarray, params: NouParams,
                  u_hat0: float | None = None, v0: float | None = None) -> list[FilterState]:
    """Run the scalar filter along an observed price series.

    Defaults: u_hat0 = u_bar, v0 = V_inf (so V stays constant).  Causal: the
    first n output states depend only on the first n observations.
    """
    times = np.asarray(times, dtype=float)
    prices = np.asarray(prices, dtype=float)
    bad = np.flatnonzero(~np.isfinite(prices))
    if bad.size:
        raise ValueError(f"non-finite price at index {bad[0]}")
    k, e, s, ub = params.kappa, params.eta, params.sigma, params.u_bar
    u_hat = params.u_bar if u_hat0 is None else float(u_hat0)
    v = asymptotic_variance(params) if v0 is None else float(v0)
    if v < 0:
        raise ValueError("v0 must be non-negative")
    v_inf = asymptotic_variance(params)
    out = [FilterState(u_hat=u_hat, v=v, t=float(times[0]))]
    for i in range(len(times) - 1):
        dt = float(times[i + 1] - times[i])
        dw = (prices[i + 1] - prices[i] + k * (prices[i] - u_hat) * dt) / s
        u_hat = u_hat - e * (u_hat - ub) * dt + (k / s) * v * dw
        if v != v_inf:
            v = variance_ode_evolve(v, dt, params)
        out.append(FilterState(u_hat=u_hat, v=v, t=float(times[i + 1])))
    return out


@dataclass
class LinearGaussianSystem:
    """Observation Z (k-dim) and latent zeta (d-dim) linear SDE system.

    dZ    = Gamma [Z; zeta] dt + Sigma_Z^{1/2} dW_Z
    dzeta = (Theta zeta + upsilon) dt + Sigma_zeta^{1/2} dW_zeta

    with Corr(dW_Z, dW_zeta) = rho_tilde.
    """

    gamma_mat: np.ndarray
    theta_mat: np.ndarray
    upsilon: np.ndarray
    sigma_z: np.ndarray
    sigma_zeta: np.ndarray
    rho_tilde: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.gamma_mat = np.atleast_2d(np.asarray(self.gamma_mat, dtype=float))
        self.theta_mat = np.atleast_2d(np.asarray(self.theta_mat, dtype=float))
        self.sigma_z = np.atleast_2d(np.asarray(self.sigma_z, dtype=float))
        self.sigma_zeta = np.atleast_2d(np.asarray(self.sigma_zeta, dtype=float))
        self.upsilon = np.atleast_1d(np.asarray(self.upsilon, dtype=float))
        k, d = self.k, self.d
        if self.rho_tilde is None:
            self.rho_tilde = np.zeros((k, d))
        self.rho_tilde = np.atleast_2d(np.asarray(self.rho_tilde, dtype=float))
        if self.gamma_mat.shape != (k, k + d):
            raise ValueError(f"gamma_mat must be {k}x{k + d}")
        if self.theta_mat.shape != (d, d) or self.upsilon.shape != (d,):
            raise ValueError("theta_mat/upsilon shape mismatch")
        if self.rho_tilde.shape != (k, d):
            raise ValueError(f"rho_tilde must be {k}x{d}")
        eig = np.linalg.eigvalsh(0.5 * (self.sigma_z + self.sigma_z.T))
        if np.min(eig) <= 0:
            raise ValueError("sigma_z must be positive definite")
        full = np.block([[np.eye(k), self.rho_tilde], [self.rho_tilde.T, np.eye(d)]])
        if np.min(np.linalg.eigvalsh(full)) < -1e-12:
            raise ValueError("correlation block not positive semidefinite")

    @property
    def k(self) -> int:
        return self.sigma_z.shape[0]

    @property
    def d(self) -> int:
        return self.theta_mat.shape[0]


@dataclass(frozen=True)
class GeneralFilterState:
    zeta_hat: np.ndarray
    v_mat: np.ndarray
    t: float


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal symmetric square root."""
    root = sqrtm(m)
    return np.real_if_close(root).astype(float)


def _gain(system: LinearGaussianSystem, v: np.ndarray, sz_isqrt: np.ndarray,
          szeta_sqrt: np.ndarray) -> np.ndarray:
    k, d = system.k, system.d
    block = np.zeros((k + d, d))
    block[k:, :] = v
    return block.T @ system.gamma_mat.T @ sz_isqrt + szeta_sqrt @ system.rho_tilde.T


def _matrix_riccati_rhs(system: LinearGaussianSystem, v: np.ndarray,
                        sz_isqrt: np.ndarray, szeta_sqrt: np.ndarray) -> np.ndarray:
    psi = _gain(system, v, sz_isqrt, szeta_sqrt)
    th = system.theta_mat
    return th @ v + v @ th.T + system.sigma_zeta - psi @ psi.T


def _rk4_matrix(system, v0, h, n, sz_isqrt, szeta_sqrt):
    v = v0
    step = h / n
    for _ in range(n):
        k1 = _matrix_riccati_rhs(system, v, sz_isqrt, szeta_sqrt)
        k2 = _matrix_riccati_rhs(system, v + 0.5 * step * k1, sz_isqrt, szeta_sqrt)
        k3 = _matrix_riccati_rhs(system, v + 0.5 * step * k2, sz_isqrt, szeta_sqrt)
        k4 = _matrix_riccati_rhs(system, v + step * k3, sz_isqrt, szeta_sqrt)
        v = v + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v = 0.5 * (v + v.T)  # guard floating-point asymmetry drift
    return v


def _matrix_variance_evolve(system, v0, h, sz_isqrt, szeta_sqrt, tol=1e-12):
    n = 1
    prev = _rk4_matrix(system, v0, h, n, sz_isqrt, szeta_sqrt)
    for _ in range(24):
        n *= 2
        cur = _rk4_matrix(system, v0, h, n, sz_isqrt, szeta_sqrt)
        if np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
    return prev


def general_filter_series(system: LinearGaussianSystem, times: np.ndarray,
                          observations: np.ndarray, zeta_hat0: np.ndarray,
                          v_mat0: np.ndarray) -> list[GeneralFilterState]:
    """Run the matrix linear filter along an observation path Z (shape (n, k)).

    Euler-Maruyama for the mean (innovation driven), adaptive RK4 for the
    deterministic covariance, symmetrized each step.
    """
    times = np.asarray(times, dtype=float)
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if obs.shape[0] != times.size:
        obs = obs.T
    k, d = system.k, system.d
    if obs.shape != (times.size, k):
        raise ValueError("observations must have shape (n, k)")
    sz_isqrt = np.linalg.inv(_psd_sqrt(system.sigma_z))
    szeta_sqrt = _psd_sqrt(system.sigma_zeta)
    zeta = np.asarray(zeta_hat0, dtype=float).reshape(d).copy()
    v = np.asarray(v_mat0, dtype=float).reshape(d, d).copy()
    out = [GeneralFilterState(zeta_hat=zeta.copy(), v_mat=v.copy(), t=float(times[0]))]
    for i in range(times.size - 1):
        dt = float(times[i + 1] - times[i])
        state = np.concatenate([obs[i], zeta])
        dz = obs[i + 1] - obs[i]
        dw = sz_isqrt @ (dz - system.gamma_mat @ state * dt)
        psi = _gain(system, v, sz_isqrt, szeta_sqrt)
        zeta = zeta + (system.theta_mat @ zeta + system.upsilon) * dt + psi @ dw
        v = _matrix_variance_evolve(system, v, dt, sz_isqrt, szeta_sqrt)
        out.append(GeneralFilterState(zeta_hat=zeta.copy(), v_mat=v.copy(),
                                      t=float(times[i + 1])))
    return out


def scalar_as_linear_system(params: NouParams) -> LinearGaussianSystem:
    """The k = d = 1 system whose general filter reproduces the scalar one."""
    return LinearGaussianSystem(
        gamma_mat=np.array([[-params.kappa, params.kappa]]),
        theta_mat=np.array([[-params.eta]]),
        upsilon=np.array([params.eta * params.u_bar]),
        sigma_z=np.array([[params.sigma**2]]),
        sigma_zeta=np.array([[params.nu**2]]),
        rho_tilde=np.zeros((1, 1)),
    )
