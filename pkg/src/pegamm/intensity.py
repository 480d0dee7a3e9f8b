"""Logistic trade-intensity model and per-trade Hamiltonians.

A taker order of size z arrives at rate Lambda(z, delta) = lam / (1 +
exp(a + b*delta)) when the AMM quotes markup delta.  The per-trade
Hamiltonian

    H(z, p) = sup_delta  Lambda(z, delta) / (gamma z) * (1 - exp(-gamma z (delta - p)))

is computed by safeguarded bisection on its first-order condition; its
maximizer delta* satisfies the envelope identity gamma z H - dH/dp =
Lambda(z, delta*), which is how the optimal-markup map is evaluated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class SideIntensity:
    """Logistic demand curve for one trade direction.

    lam: demand-curve height (day^-1); a: dimensionless offset;
    b: markup sensitivity (quote-asset^-1).
    """

    lam: float
    a: float
    b: float

    def __post_init__(self):
        if self.lam <= 0 or self.b <= 0:
            raise ValueError("need lam > 0 and b > 0")


@dataclass(frozen=True)
class SizeMeasure:
    """Discrete trade-size measure: atoms (z_i, w_i), z in crypto-1 units."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        zs = [z for z, _ in self.atoms]
        if any(z <= 0 for z in zs) or any(w <= 0 for _, w in self.atoms):
            raise ValueError("atoms need z > 0 and w > 0")
        if len(set(zs)) != len(zs):
            raise ValueError("atom sizes must be distinct")

    @classmethod
    def dirac(cls, z: float, w: float = 1.0) -> "SizeMeasure":
        return cls(atoms=((z, w),))


@dataclass(frozen=True)
class LiquiditySpec:
    """Both demand sides plus the size measure.

    side_01 prices AMM sales of crypto 1 (markup added to S); side_10 prices
    AMM purchases (markup subtracted from S).
    """

    side_01: SideIntensity
    side_10: SideIntensity
    sizes: SizeMeasure

    @classmethod
    def from_json_dict(cls, cfg: dict) -> "LiquiditySpec":
        return cls(
            side_01=SideIntensity(lam=cfg["lambda_01"], a=cfg["a_01"], b=cfg["b_01"]),
            side_10=SideIntensity(lam=cfg["lambda_10"], a=cfg["a_10"], b=cfg["b_10"]),
            sizes=SizeMeasure(atoms=tuple(
                (float(s["z"]), float(s["w"])) for s in cfg["sizes"])),
        )

    def to_json_dict(self) -> dict:
        return {
            "lambda_01": self.side_01.lam, "a_01": self.side_01.a, "b_01": self.side_01.b,
            "lambda_10": self.side_10.lam, "a_10": self.side_10.a, "b_10": self.side_10.b,
            "sizes": [{"z": z, "w": w} for z, w in self.sizes.atoms],
        }

    @classmethod
    def load(cls, path) -> "LiquiditySpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def intensity(side: SideIntensity, z: float, delta) -> float:
    """Arrival rate lam / (1 + exp(a + b*delta)), in day^-1."""
    x = side.a + side.b * np.asarray(delta, dtype=float)
    out = side.lam * expit(-x)
    return out if out.ndim else float(out)


def inverse_intensity(side: SideIntensity, z: float, y: float) -> float:
    """The markup delta with intensity(delta) = y; requires 0 < y < lam."""
    if not 0.0 < y < side.lam:
        raise ValueError(f"rate y must lie in (0, {side.lam}), got {y}")
    return (math.log(side.lam / y - 1.0) - side.a) / side.b


def _foc(side: SideIntensity, z: float, p: float, gamma: float, delta: float) -> float:
    """First-order condition of the Hamiltonian sup, divided by Lambda > 0:
    -b (1 - Lambda/lam)(1 - E) + gamma z E, with E = exp(-gamma z (delta - p))."""
    x = side.a + side.b * delta
    frac = float(expit(x))  # 1 - Lambda/lam
    gz = gamma * z
    e = math.exp(-gz * (delta - p))
    one_minus_e = -math.expm1(-gz * (delta - p))
    return -side.b * frac * one_minus_e + gz * e


def hamiltonian(side: SideIntensity, z: float, p: float, gamma: float) -> tuple[float, float, float]:
    """Return (H, dH/dp, delta*) for one side at size z.

    delta* is found by bisection on the FOC, bracketed on [p, p + 50/b]
    (the bracket is widened geometrically if demand is still saturated at
    the right end).
    """
    if gamma <= 0 or z <= 0:
        raise ValueError("need gamma > 0 and z > 0")
    lo = p
    width = 50.0 / side.b
    hi = p + width
    n_expand = 0
    while _foc(side, z, p, gamma, hi) > 0.0:
        hi += width
        n_expand += 1
        if n_expand > 200:
            raise RuntimeError(
                f"FOC bracketing failed for side(lam={side.lam}, a={side.a}, "
                f"b={side.b}) at z={z}, p={p}, gamma={gamma}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _foc(side, z, p, gamma, mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, abs(hi)):
            break
    delta_star = 0.5 * (lo + hi)
    gz = gamma * z
    lam_star = intensity(side, z, delta_star)
    h = lam_star / gz * (-math.expm1(-gz * (delta_star - p)))
    dh_dp = -lam_star * math.exp(-gz * (delta_star - p))
    return h, dh_dp, delta_star


def optimal_markup(side: SideIntensity, z: float, p: float, gamma: float) -> float:
    """delta* via the envelope identity: inverse_intensity at gamma z H - dH/dp."""
    h, dh_dp, _ = hamiltonian(side, z, p, gamma)
    return inverse_intensity(side, z, gamma * z * h - dh_dp)


@dataclass(frozen=True)
class QuadCoeffs:
    """Second-order Taylor coefficients of H(z, .) at p = 0."""

    alpha0: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.alpha1 < 0 and self.alpha2 > 0):
            raise ValueError(
                f"expected alpha0 > 0 > alpha1 and alpha2 > 0, got "
                f"({self.alpha0}, {self.alpha1}, {self.alpha2})")

    def evaluate(self, p: float) -> float:
        return self.alpha0 + self.alpha1 * p + 0.5 * self.alpha2 * p * p


def quad_fit(side: SideIntensity, z: float, gamma: float) -> QuadCoeffs:
    """Taylor coefficients of H at p = 0 by Richardson-extrapolated central
    differences with base step 1e-2 / b."""
    h = 1e-2 / side.b

    def f(p):
        return hamiltonian(side, z, p, gamma)[0]

    f0 = f(0.0)
    fp, fm = f(h), f(-h)
    fp2, fm2 = f(0.5 * h), f(-0.5 * h)
    d1_h = (fp - fm) / (2.0 * h)
    d1_h2 = (fp2 - fm2) / h
    alpha1 = (4.0 * d1_h2 - d1_h) / 3.0
    d2_h = (fp - 2.0 * f0 + fm) / (h * h)
    d2_h2 = (fp2 - 2.0 * f0 + fm2) / (0.25 * h * h)
    alpha2 = (4.0 * d2_h2 - d2_h) / 3.0
    return QuadCoeffs(alpha0=f0, alpha1=alpha1, alpha2=alpha2)
