"""Efficient frontier: risk/return of the greedy AMM across risk aversions.

Run:  python3 demos/04_efficient_frontier.py   (about a minute)
"""

from pegamm import SimulationSetup, frontier, preset_liquidity, preset_params

setup = SimulationSetup(
    params=preset_params("usdc_usdt"),
    liquidity=preset_liquidity("usdc_usdt"),
    dt=10.0 / 86_400.0,
    horizon=1.0,
)

gammas = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 1.0]
points = frontier(setup, gammas, n_paths=50, seed=0)

print(f"{'gamma':>8} {'mean excess PnL':>16} {'std':>10}")
for pt in points:
    print(f"{pt.gamma:>8g} {pt.mean_excess_pnl:>16.1f} {pt.std_excess_pnl:>10.1f}")
print("\nhigher risk aversion trades away mean PnL for lower dispersion;"
      "\nthe (std, mean) pairs trace the efficient frontier.")
