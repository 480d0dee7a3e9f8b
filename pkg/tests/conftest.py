import numpy as np
import pytest

from pegamm import NouParams, Sample, simulate_exact, stationary_draw
from pegamm.presets import PRESETS


@pytest.fixture(scope="session")
def usdc_params() -> NouParams:
    return PRESETS["usdc_usdt"][0]


@pytest.fixture(scope="session")
def wsteth_params() -> NouParams:
    return PRESETS["wsteth_weth"][0]


def stationary_path(params: NouParams, dt: float, n_steps: int, seed: int):
    """Simulated path whose initial point is drawn from the stationary law."""
    rng = np.random.default_rng(seed)
    s0, u0 = stationary_draw(params, rng)
    return simulate_exact(params, s0, u0, dt, n_steps, seed=int(rng.integers(2**63)))


def stationary_sample(params: NouParams, dt: float, n_steps: int, seed: int) -> Sample:
    p = stationary_path(params, dt, n_steps, seed)
    return Sample(times=p.times, values=p.values)
