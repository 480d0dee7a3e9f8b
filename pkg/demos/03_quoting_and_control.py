"""Per-trade optimal markups and the inventory-aware greedy quoting rule.

Run:  python3 demos/03_quoting_and_control.py
"""

import numpy as np

from pegamm import (ControlConfig, LiquiditySpec, SideIntensity, SizeMeasure,
                    delta_moments, ergodic_coeffs, filtered_params,
                    greedy_markups, intensity, optimal_markup, preset_params)

params = preset_params("wsteth_weth")
liquidity = LiquiditySpec(
    side_01=SideIntensity(lam=50.0, a=0.0, b=1e4),
    side_10=SideIntensity(lam=50.0, a=0.0, b=1e4),
    sizes=SizeMeasure.dirac(1.0),
)
gamma = 1e-3
z = liquidity.sizes.atoms[0][0]

# static (inventory-blind) optimum at reservation shift p = 0
d0 = optimal_markup(liquidity.side_01, z, 0.0, gamma)
print(f"static optimal markup at p=0: {d0 * 1e4:.3f} bp "
      f"(fill rate {intensity(liquidity.side_01, z, d0):.1f}/day)")

# stationary quoting coefficients (horizon doubled until A(0) stabilizes)
fp = filtered_params(params)
deltas = delta_moments(liquidity, gamma)
coeffs = ergodic_coeffs(fp, ControlConfig(gamma=gamma, ergodic=True, grid_n=2000),
                        deltas)
print(f"\nergodic A(0) inventory curvature A_yy = {coeffs.a_mats[0][0, 0]:.3e}")

# inventory skew: quotes as a function of the crypto-1 position
ub = params.u_bar
print(f"\n{'y1':>10} {'ask markup (bp)':>16} {'bid markup (bp)':>16}")
for y1 in np.linspace(-1e6, 1e6, 5):
    ask = greedy_markups(coeffs, liquidity, 0.0, float(y1), ub, ub, z, "01")
    bid = greedy_markups(coeffs, liquidity, 0.0, float(y1), ub, ub, z, "10")
    print(f"{y1:>10.0f} {ask * 1e4:>16.3f} {bid * 1e4:>16.3f}")
print("\nlong inventory tilts the quotes to sell (lower ask, higher bid);"
      "\nshort inventory tilts them the other way.")
