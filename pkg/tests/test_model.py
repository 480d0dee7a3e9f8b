import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pegamm import (InvalidParamsError, NouParams, PricePath, conditional_mean,
                    simulate_exact, stationary_cov, stationary_cross_moments,
                    stationary_draw, transition_matrices, transition_mean)

TABLE3 = NouParams(kappa=5e-2, eta=3e-2, sigma=5e-4, nu=5e-4, u_bar=1.0)


class TestParams:
    def test_valid(self):
        assert TABLE3.kappa == 5e-2

    @pytest.mark.parametrize("kwargs", [
        dict(kappa=0.03, eta=0.05),            # kappa <= eta
        dict(kappa=0.05, eta=0.05),            # equal
        dict(kappa=0.05, eta=0.05 * (1 - 1e-12)),  # below relative floor
        dict(eta=-0.01),
        dict(sigma=0.0),
        dict(sigma=-1.0),
        dict(nu=-1e-9),
        dict(u_bar=0.0),
        dict(kappa=float("nan")),
    ])
    def test_invalid(self, kwargs):
        base = dict(kappa=5e-2, eta=3e-2, sigma=5e-4, nu=5e-4, u_bar=1.0)
        base.update(kwargs)
        with pytest.raises(InvalidParamsError):
            NouParams(**base)

    def test_nu_zero_allowed(self):
        NouParams(kappa=5e-2, eta=3e-2, sigma=5e-4, nu=0.0, u_bar=1.0)


class TestStationaryCov:
    def test_table3_value(self):
        # independently: 0.5*k^2*n^2/(e*(k^2-e^2)) + 0.5*(s^2/k - k*n^2/(k^2-e^2))
        k, e, s2, n2 = 5e-2, 3e-2, 25e-8, 25e-8
        d = k * k - e * e
        expect = 0.5 * k * k * n2 / (e * d) + 0.5 * (s2 / k - k * n2 / d)
        got = stationary_cov(0.0, TABLE3)
        assert got == pytest.approx(expect, rel=1e-14)
        assert got == pytest.approx(5.10e-6, rel=2e-3)

    def test_nu_zero_is_classical_ou(self):
        p = NouParams(kappa=5e-2, eta=3e-2, sigma=5e-4, nu=0.0, u_bar=1.0)
        for tau in [0.0, 0.5, 3.0, 40.0]:
            assert stationary_cov(tau, p) == pytest.approx(
                p.sigma**2 / (2 * p.kappa) * math.exp(-p.kappa * tau), rel=1e-14)

    def test_even(self):
        assert stationary_cov(1.7, TABLE3) == stationary_cov(-1.7, TABLE3)

    @given(tau=st.floats(0.0, 500.0))
    @settings(max_examples=60, deadline=None)
    def test_valid_covariance(self, tau):
        assert abs(stationary_cov(tau, TABLE3)) <= stationary_cov(0.0, TABLE3)

    def test_decays(self):
        assert stationary_cov(0.0, TABLE3) > 0
        assert abs(stationary_cov(2000.0, TABLE3)) < 1e-25

    def test_matches_long_path_sample_variance(self):
        rng = np.random.default_rng(7)
        s0, u0 = stationary_draw(TABLE3, rng)
        path = simulate_exact(TABLE3, s0, u0, 0.25, 200_000, seed=7)
        var = float(np.var(path.values))
        # slow decorrelation: generous Monte-Carlo tolerance
        assert var == pytest.approx(stationary_cov(0.0, TABLE3), rel=0.25)

    def test_lagged_autocovariance_of_simulated_path(self):
        dt = 15.0 / (60 * 24)
        rng = np.random.default_rng(11)
        s0, u0 = stationary_draw(TABLE3, rng)
        path = simulate_exact(TABLE3, s0, u0, dt, 300_000, seed=11)
        y = path.values - path.values.mean()
        n = y.size
        for lag_days in [0.5, 2.0]:
            lag = int(round(lag_days / dt))
            emp = float(y[:-lag] @ y[lag:]) / n
            assert emp == pytest.approx(float(stationary_cov(lag_days, TABLE3)), rel=0.35)


class TestConditionalMean:
    def test_t0_identity(self):
        assert conditional_mean(0.0, 0.999, 1.23, TABLE3) == pytest.approx(0.999, abs=1e-15)

    def test_long_horizon_is_u_bar(self):
        assert conditional_mean(1e6, 0.9, 1.1, TABLE3) == pytest.approx(1.0, abs=1e-12)

    def test_negative_t_rejected(self):
        with pytest.raises(ValueError):
            conditional_mean(-0.1, 1.0, 1.0, TABLE3)

    def test_monte_carlo_oracle(self):
        s0, u0, t = 0.9990, 1.0005, 10.0
        expect = conditional_mean(t, s0, u0, TABLE3)
        # exact transition: a single step of size t samples S_t exactly
        n = 100_000
        F, c, Q = transition_matrices(t, TABLE3)
        rng = np.random.default_rng(3)
        L = np.linalg.cholesky(Q)
        x = np.array([s0, u0])
        draws = (F @ x + c)[None, :] + rng.standard_normal((n, 2)) @ L.T
        se = draws[:, 0].std(ddof=1) / math.sqrt(n)
        assert abs(draws[:, 0].mean() - expect) < 3 * se


class TestTransition:
    def test_transition_mean_matches_conditional_mean(self):
        ms, _ = transition_mean(2.5, 0.998, 1.002, TABLE3)
        assert ms == pytest.approx(float(conditional_mean(2.5, 0.998, 1.002, TABLE3)), rel=1e-14)

    def test_exact_vs_fine_euler_one_step(self):
        dt = 0.1
        sub = 1000
        h = dt / sub
        k, e, ub = TABLE3.kappa, TABLE3.eta, TABLE3.u_bar
        # deterministic mean propagation
        s, u = 0.998, 1.003
        for _ in range(sub):
            s, u = s - k * (s - u) * h, u - e * (u - ub) * h
        ms, mu = transition_mean(dt, 0.998, 1.003, TABLE3)
        assert abs(s - ms) < 1e-8 and abs(u - mu) < 1e-8
        # covariance propagation
        F, c, Q = transition_matrices(dt, TABLE3)
        P = np.zeros((2, 2))
        A = np.array([[-k, k], [0.0, -e]])
        W = np.diag([TABLE3.sigma**2, TABLE3.nu**2])
        for _ in range(sub):
            P = P + (A @ P + P @ A.T + W) * h
        assert np.allclose(P, Q, atol=1e-12 + 1e-3 * dt * np.abs(Q).max())

    def test_transition_covariance_psd_and_symmetric(self):
        for dt in [1e-4, 0.01, 1.0, 50.0]:
            _, _, Q = transition_matrices(dt, TABLE3)
            assert Q[0, 1] == Q[1, 0]
            assert np.min(np.linalg.eigvalsh(Q)) >= 0.0


class TestSimulateExact:
    def test_deterministic(self):
        a = simulate_exact(TABLE3, 1.0, 1.0, 0.01, 500, seed=5)
        b = simulate_exact(TABLE3, 1.0, 1.0, 0.01, 500, seed=5)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.latent, b.latent)

    def test_noise_free_follows_conditional_mean(self):
        p = NouParams(kappa=5e-2, eta=3e-2, sigma=1e-300, nu=0.0, u_bar=1.0)
        path = simulate_exact(p, 0.995, 1.004, 0.5, 40, seed=0)
        expect = conditional_mean(path.times, 0.995, 1.004, p)
        assert np.allclose(path.values, expect, atol=1e-10)

    def test_nu_zero_ou_moments(self):
        p = NouParams(kappa=0.5, eta=0.25, sigma=5e-4, nu=0.0, u_bar=1.0)
        path = simulate_exact(p, 1.0, 1.0, 0.05, 400_000, seed=9)
        assert path.values.mean() == pytest.approx(1.0, abs=1e-4)
        assert float(np.var(path.values)) == pytest.approx(p.sigma**2 / (2 * p.kappa), rel=0.05)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            simulate_exact(TABLE3, float("nan"), 1.0, 0.01, 10, seed=0)
        with pytest.raises(ValueError):
            simulate_exact(TABLE3, 1.0, 1.0, -0.01, 10, seed=0)


class TestStationaryMoments:
    def test_cross_moments_against_long_path(self):
        rng = np.random.default_rng(13)
        s0, u0 = stationary_draw(TABLE3, rng)
        path = simulate_exact(TABLE3, s0, u0, 0.5, 200_000, seed=13)
        var_s, cov_su, var_u = stationary_cross_moments(TABLE3)
        s, u = path.values, path.latent
        assert float(np.var(u)) == pytest.approx(var_u, rel=0.2)
        assert float(np.mean((s - s.mean()) * (u - u.mean()))) == pytest.approx(cov_su, rel=0.25)
        assert var_s == pytest.approx(float(stationary_cov(0.0, TABLE3)), rel=1e-12)


class TestPricePathCsv:
    def test_roundtrip_with_latent(self, tmp_path):
        path = simulate_exact(TABLE3, 1.0, 1.0, 0.01, 50, seed=1)
        f = tmp_path / "p.csv"
        path.to_csv(f)
        header = f.read_text().splitlines()[0]
        assert header == "t,s,u"
        back = PricePath.from_csv(f)
        assert np.array_equal(back.times, path.times)
        assert np.array_equal(back.values, path.values)
        assert np.array_equal(back.latent, path.latent)

    def test_roundtrip_without_latent(self, tmp_path):
        path = PricePath(times=np.array([0.0, 1.0, 2.0]), values=np.array([1.0, 1.1, 0.9]))
        f = tmp_path / "p.csv"
        path.to_csv(f)
        assert f.read_text().splitlines()[0] == "t,s"
        back = PricePath.from_csv(f)
        assert back.latent is None
        assert np.array_equal(back.values, path.values)

    def test_validation(self):
        with pytest.raises(ValueError):
            PricePath(times=np.array([0.0, 0.0]), values=np.array([1.0, 1.0]))
