"""Named parameter presets shipped with the package.

usdc_usdt: slow-reverting stablecoin pair, trade size 100,000 quote units.
wsteth_weth: fast-reverting liquid-staking pair, trade size 40.
Liquidity in both: lam = 250/day, a = 0, b = 1e4 per quote unit, both sides.
"""

from __future__ import annotations

from .intensity import LiquiditySpec, SideIntensity, SizeMeasure
from .model import NouParams

_SIDE = SideIntensity(lam=250.0, a=0.0, b=1e4)

PRESETS: dict[str, tuple[NouParams, LiquiditySpec]] = {
    "usdc_usdt": (
        NouParams(kappa=5e-2, eta=3e-2, sigma=5e-4, nu=5e-4, u_bar=1.00),
        LiquiditySpec(side_01=_SIDE, side_10=_SIDE, sizes=SizeMeasure.dirac(1e5)),
    ),
    "wsteth_weth": (
        NouParams(kappa=6.0, eta=3.0, sigma=6e-3, nu=4e-3, u_bar=1.15),
        LiquiditySpec(side_01=_SIDE, side_10=_SIDE, sizes=SizeMeasure.dirac(40.0)),
    ),
}


def preset_params(name: str) -> NouParams:
    return _lookup(name)[0]


def preset_liquidity(name: str) -> LiquiditySpec:
    return _lookup(name)[1]


def _lookup(name: str) -> tuple[NouParams, LiquiditySpec]:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
