"""Nested-OU modeling, filtering and optimal AMM quoting for pegged pairs."""

from .calibrate import (ConditioningError, FitResult, Sample, YieldEstimate,
                        discount_series, estimate_yield, fit_mle, log_likelihood,
                        log_likelihood_dense, log_likelihood_kalman)
from .control import (ControlBlowupError, ControlCoeffs, ControlConfig,
                      DeltaMoments, delta_moments, ergodic_coeffs, greedy_markups,
                      ode_rhs, reservation_shift, solve_control, system_matrices)
from .filtering import (FilteredNouParams, FilterState, GeneralFilterState,
                        LinearGaussianSystem, asymptotic_variance, effective_nu_hat,
                        filter_series, filtered_params, general_filter_series,
                        scalar_as_linear_system, variance_ode_evolve)
from .intensity import (LiquiditySpec, QuadCoeffs, SideIntensity, SizeMeasure,
                        hamiltonian, intensity, inverse_intensity, optimal_markup,
                        quad_fit)
from .model import (InvalidParamsError, NouParams, PathState, PricePath,
                    conditional_mean, simulate_exact, stationary_cov,
                    stationary_cross_moments, stationary_draw, transition_matrices,
                    transition_mean)
from .presets import PRESETS, preset_liquidity, preset_params
from .seriesio import (RawSeries, SeriesFormatError, cross_rate, read_series_csv,
                       resample_ffill, write_series_csv)
from .simulate import (FrontierPoint, PathResult, PoolState, SimulationSetup,
                       TradeEvent, check_thinning_bound, excess_pnl, frontier,
                       historical_replay, replay_events, run_path,
                       solve_strategy_coeffs)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
