import json
import math

import numpy as np
import pytest

from pegamm import (LiquiditySpec, QuadCoeffs, SideIntensity, SizeMeasure,
                    hamiltonian, intensity, inverse_intensity, optimal_markup,
                    quad_fit)

SIDE = SideIntensity(lam=250.0, a=0.0, b=1e4)
GAMMA = 1e-5
Z = 1e5


class TestIntensity:
    def test_reference_values(self):
        # lam/2 at delta = 0; lam/(1+e^{-1}) and lam/(1+e^1) at -/+ 1 bp
        assert intensity(SIDE, Z, 0.0) == pytest.approx(125.0, abs=1e-12)
        assert intensity(SIDE, Z, -1e-4) == pytest.approx(
            250.0 / (1.0 + math.exp(-1.0)), rel=1e-14)
        assert intensity(SIDE, Z, 1e-4) == pytest.approx(
            250.0 / (1.0 + math.exp(1.0)), rel=1e-14)

    def test_vectorized(self):
        deltas = np.array([-1e-4, 0.0, 1e-4])
        got = intensity(SIDE, Z, deltas)
        assert got.shape == (3,)
        assert got[1] == pytest.approx(125.0)

    def test_monotone_decreasing(self):
        d = np.linspace(-5e-4, 5e-4, 101)
        vals = intensity(SIDE, Z, d)
        assert np.all(np.diff(vals) < 0)

    def test_extreme_markup_no_overflow(self):
        assert intensity(SIDE, Z, 1e6) == 0.0
        assert intensity(SIDE, Z, -1e6) == pytest.approx(250.0)

    def test_inverse_roundtrip(self):
        for d in [-3e-4, -1e-5, 0.0, 2e-4, 8e-4]:
            y = intensity(SIDE, Z, d)
            assert inverse_intensity(SIDE, Z, y) == pytest.approx(d, abs=1e-12)

    def test_inverse_domain(self):
        for bad in [0.0, -1.0, 250.0, 300.0]:
            with pytest.raises(ValueError):
                inverse_intensity(SIDE, Z, bad)

    def test_validation(self):
        with pytest.raises(ValueError):
            SideIntensity(lam=0.0, a=0.0, b=1e4)
        with pytest.raises(ValueError):
            SideIntensity(lam=250.0, a=0.0, b=-1.0)


class TestHamiltonian:
    def test_grid_oracle(self):
        # brute-force sup over a dense markup grid
        p = 0.0
        grid = np.linspace(p, p + 30.0 / SIDE.b, 1_000_001)
        gz = GAMMA * Z
        vals = intensity(SIDE, Z, grid) / gz * (-np.expm1(-gz * (grid - p)))
        h, dh_dp, d_star = hamiltonian(SIDE, Z, p, GAMMA)
        assert h == pytest.approx(float(vals.max()), rel=1e-8)
        cell = grid[1] - grid[0]
        assert abs(d_star - grid[int(vals.argmax())]) <= cell

    def test_vanishes_for_huge_reservation_price(self):
        h, dh_dp, _ = hamiltonian(SIDE, Z, 100.0 / SIDE.b, GAMMA)
        assert 0.0 < h < 1e-15
        assert abs(dh_dp) < 1e-10

    def test_envelope_identity_random(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            side = SideIntensity(lam=float(rng.uniform(10, 1000)),
                                 a=float(rng.uniform(-2, 2)),
                                 b=float(10 ** rng.uniform(2.5, 5.5)))
            z = float(10 ** rng.uniform(1, 6))
            gamma = float(10 ** rng.uniform(-8, -3))
            p = float(rng.uniform(-2.0, 2.0) / side.b)
            h, dh_dp, d_star = hamiltonian(side, z, p, gamma)
            lam_star = intensity(side, z, d_star)
            scale = max(abs(lam_star), abs(gamma * z * h), abs(dh_dp), 1e-30)
            assert abs(gamma * z * h - dh_dp - lam_star) < 1e-9 * scale

    def test_optimal_markup_matches_foc_root(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            side = SideIntensity(lam=float(rng.uniform(50, 500)),
                                 a=float(rng.uniform(-1, 1)),
                                 b=float(10 ** rng.uniform(3, 5)))
            z = float(10 ** rng.uniform(2, 6))
            gamma = float(10 ** rng.uniform(-7, -4))
            p = float(rng.uniform(-2.0, 2.0) / side.b)
            _, _, d_star = hamiltonian(side, z, p, gamma)
            via_envelope = optimal_markup(side, z, p, gamma)
            assert via_envelope == pytest.approx(d_star, abs=1e-9 / side.b + 1e-12)

    def test_positive_markup_at_zero_reservation(self):
        _, _, d_star = hamiltonian(SIDE, Z, 0.0, GAMMA)
        assert d_star > 0.0

    def test_markup_increasing_in_reservation_price(self):
        ps = np.linspace(-3e-4, 3e-4, 21)
        ds = [hamiltonian(SIDE, Z, float(p), GAMMA)[2] for p in ps]
        assert np.all(np.diff(ds) > 0)

    def test_h_decreasing_convex_in_p(self):
        ps = np.linspace(-4e-4, 4e-4, 41)
        hs = np.array([hamiltonian(SIDE, Z, float(p), GAMMA)[0] for p in ps])
        assert np.all(np.diff(hs) < 0)
        assert np.all(np.diff(hs, 2) > -1e-12 * hs.max())

    def test_spread_shrinks_with_demand_sensitivity(self):
        # more price-sensitive takers force quotes closer to fair value
        last = None
        for b in [1e3, 1e4, 1e5]:
            side = SideIntensity(lam=250.0, a=0.0, b=b)
            _, _, d_star = hamiltonian(side, Z, 0.0, GAMMA)
            assert d_star > 0
            if last is not None:
                assert d_star < last
            last = d_star

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            hamiltonian(SIDE, Z, 0.0, 0.0)
        with pytest.raises(ValueError):
            hamiltonian(SIDE, -1.0, 0.0, GAMMA)


class TestQuadFit:
    def test_alpha0_is_h_at_zero(self):
        q = quad_fit(SIDE, Z, GAMMA)
        assert q.alpha0 == pytest.approx(hamiltonian(SIDE, Z, 0.0, GAMMA)[0],
                                         rel=1e-14)

    def test_alpha1_is_minus_lambda_star(self):
        # dH/dp(0) = -Lambda(delta*(0)) e^{-gz(d*-0)}; for small gz it is close
        # to the exact derivative returned by the Hamiltonian routine
        q = quad_fit(SIDE, Z, GAMMA)
        _, dh_dp, _ = hamiltonian(SIDE, Z, 0.0, GAMMA)
        assert q.alpha1 == pytest.approx(dh_dp, rel=1e-6)

    def test_signs(self):
        q = quad_fit(SIDE, Z, GAMMA)
        assert q.alpha0 > 0 > q.alpha1
        assert q.alpha2 > 0

    def test_quadratic_tracks_h_nearby(self):
        # the fit is only expected to track H where H is not yet decaying to
        # zero; past p ~ +1/b no quadratic can follow the exponential tail
        q = quad_fit(SIDE, Z, GAMMA)
        for p in np.linspace(-2.0 / SIDE.b, 1.0 / SIDE.b, 9):
            h = hamiltonian(SIDE, Z, float(p), GAMMA)[0]
            assert q.evaluate(float(p)) == pytest.approx(h, rel=0.10)

    def test_coeff_validation(self):
        with pytest.raises(ValueError):
            QuadCoeffs(alpha0=-1.0, alpha1=-1.0, alpha2=1.0)
        with pytest.raises(ValueError):
            QuadCoeffs(alpha0=1.0, alpha1=1.0, alpha2=1.0)


class TestLiquiditySpec:
    def test_json_roundtrip(self, tmp_path):
        spec = LiquiditySpec(
            side_01=SideIntensity(lam=250.0, a=0.1, b=1e4),
            side_10=SideIntensity(lam=200.0, a=-0.1, b=2e4),
            sizes=SizeMeasure(atoms=((1e5, 1.0), (2e5, 0.5))),
        )
        f = tmp_path / "liq.json"
        f.write_text(json.dumps(spec.to_json_dict()))
        back = LiquiditySpec.load(f)
        assert back == spec
        assert set(spec.to_json_dict()) == {
            "lambda_01", "a_01", "b_01", "lambda_10", "a_10", "b_10", "sizes"}

    def test_size_measure_validation(self):
        with pytest.raises(ValueError):
            SizeMeasure(atoms=((0.0, 1.0),))
        with pytest.raises(ValueError):
            SizeMeasure(atoms=((1.0, 1.0), (1.0, 2.0)))
        assert SizeMeasure.dirac(1e5).atoms == ((1e5, 1.0),)
