"""Track the latent peg target U with the online filter.

Run:  python3 demos/02_filtering.py
"""

import numpy as np

from pegamm import (asymptotic_variance, effective_nu_hat, filter_series,
                    preset_params, simulate_exact, stationary_draw)

params = preset_params("wsteth_weth")
v_inf = asymptotic_variance(params)
print(f"asymptotic filter variance V_inf = {v_inf:.4e}")
print(f"effective filtered volatility nu_hat = {effective_nu_hat(params):.4e}"
      f" (true nu = {params.nu:g})")

dt = 15.0 / (60 * 24)
rng = np.random.default_rng(42)
s0, u0 = stationary_draw(params, rng)
path = simulate_exact(params, s0, u0, dt, 4000, seed=7)

states = filter_series(path.times, path.values, params)
u_hat = np.array([st.u_hat for st in states])

half = len(u_hat) // 2
mse = float(np.mean((u_hat[half:] - path.latent[half:]) ** 2))
naive = float(np.mean((path.values[half:] - path.latent[half:]) ** 2))
print(f"\nfilter MSE over the second half: {mse:.4e} "
      f"(ratio to V_inf: {mse / v_inf:.2f})")
print(f"naive estimate (U_hat = S) MSE:  {naive:.4e}")
print(f"\nthe filter reduces squared tracking error by "
      f"{100 * (1 - mse / naive):.0f}% versus using the raw rate")
