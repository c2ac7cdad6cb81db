import csv

import numpy as np
import pytest

from mavelocity.baselines import sinusoidal
from mavelocity.config import ProblemConfig
from mavelocity.exceptions import InfiniteCRBError
from mavelocity.functionals import integrate_trajectory, variance_direct
from mavelocity.sensing import (
    MonteCarloResult,
    SensingModel,
    crb,
    ml_grid_estimate,
    monte_carlo_mse,
    sample_variance,
    simulate_received,
    snapshot_positions,
    steering_vector,
    write_mc_report,
)

UNIT = SensingModel(wavelength=1.0)


class TestModel:
    @pytest.mark.parametrize("kwargs", [dict(theta=1.5), dict(wavelength=0), dict(noise_power=0),
                                        dict(pilot_power=-1), dict(snapshots=1), dict(snapshots=2.5)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SensingModel(**kwargs)

    def test_snr(self):
        m = SensingModel(gain=2.0).with_snr_db(20.0)
        assert m.snr == pytest.approx(100.0)
        assert m.noise_power == pytest.approx(0.04)


class TestSteering:
    def test_broadside(self):
        assert np.allclose(steering_vector(np.linspace(0, 3, 7), SensingModel(theta=0.0)), 1.0)

    def test_half_wavelength(self):
        m = SensingModel(theta=1.0, wavelength=0.1)
        assert np.allclose(steering_vector([0.0, 0.05], m), [1.0, -1.0], atol=1e-15)

    def test_unit_modulus(self, rng):
        b = steering_vector(rng.uniform(-50, 50, 200), SensingModel(theta=0.77))
        assert np.allclose(np.abs(b), 1.0, rtol=0, atol=1e-15)

    def test_vector_theta(self):
        b = steering_vector([0.0, 1.0, 2.0], UNIT, theta=[0.1, 0.2])
        assert b.shape == (2, 3)
        assert np.allclose(b[1], steering_vector([0.0, 1.0, 2.0], SensingModel(theta=0.2, wavelength=1.0)))

    def test_theta_out_of_range(self):
        with pytest.raises(ValueError):
            steering_vector([0.0], UNIT, theta=[1.2])


class TestCRB:
    def test_ramp(self):
        M = 1001
        x = np.linspace(0, 1, M)
        model = SensingModel(wavelength=1.0)
        assert sample_variance(x) == pytest.approx((M + 1) / (12 * (M - 1)), rel=1e-12)
        assert crb(x, model) == pytest.approx(12 / (8 * np.pi**2 * M), rel=3e-3)

    def test_gain_scaling(self, rng):
        x = rng.uniform(0, 1, 50)
        assert crb(x, SensingModel(gain=2.0)) == pytest.approx(crb(x, SensingModel()) / 4, rel=1e-12)

    def test_variance_scaling(self, rng):
        x = rng.uniform(0, 1, 50)
        assert crb(np.sqrt(2) * x, UNIT) == pytest.approx(crb(x, UNIT) / 2, rel=1e-12)

    def test_zero_variance(self):
        with pytest.raises(InfiniteCRBError):
            crb(np.full(10, 0.3), UNIT)

    def test_nested_sets(self):
        # growing the aperture symmetrically raises variance and lowers the bound
        x = np.linspace(-1, 1, 21)
        sets = [x[10 - k : 11 + k] for k in range(1, 11)]
        bounds = [crb(s, UNIT) * s.size for s in sets]  # remove the trivial 1/M factor
        assert np.all(np.diff(bounds) < 0)


class TestEstimator:
    def setup_method(self):
        self.x = np.linspace(0, 4, 64)
        self.model = SensingModel(wavelength=1.0)

    def test_on_grid_exact(self):
        grid = np.linspace(-1, 1, 4096)
        theta = grid[2500]
        y = steering_vector(self.x, self.model, theta)
        assert ml_grid_estimate(y, self.x, self.model, refine=False) == theta
        assert ml_grid_estimate(y, self.x, self.model) == pytest.approx(theta, abs=1e-12)

    @pytest.mark.parametrize("theta", [-0.61234, 0.012345, 0.3333])
    def test_off_grid_quantisation(self, theta):
        n_grid = 512
        step = 2 / (n_grid - 1)
        y = steering_vector(self.x, self.model, theta)
        raw = ml_grid_estimate(y, self.x, self.model, n_grid=n_grid, refine=False)
        assert abs(raw - theta) <= step / 2 + 1e-15
        fine = ml_grid_estimate(y, self.x, self.model, n_grid=n_grid)
        assert abs(fine - theta) <= abs(raw - theta)

    def test_batch_matches_single(self, rng):
        Y = np.array([simulate_received(self.x, self.model.with_snr_db(10), rng) for _ in range(5)])
        batch = ml_grid_estimate(Y, self.x, self.model)
        assert batch.shape == (5,)
        assert np.allclose(batch, [ml_grid_estimate(y, self.x, self.model) for y in Y])


class TestMonteCarlo:
    def positions(self):
        cfg = ProblemConfig()
        return snapshot_positions(sinusoidal(cfg), 256)

    def test_reproducible_and_jobs_invariant(self):
        x = self.positions()
        a = monte_carlo_mse(x, SensingModel(), 20.0, trials=64, seed=3)
        b = monte_carlo_mse(x, SensingModel(), 20.0, trials=64, seed=3, n_jobs=2)
        assert a == b

    @pytest.mark.slow
    def test_high_snr_consistency(self):
        r = monte_carlo_mse(self.positions(), SensingModel(), 30.0, trials=2000, seed=0)
        assert r.ratio >= 0.95

    def test_report(self, tmp_path):
        path = tmp_path / "crb.csv"
        write_mc_report([MonteCarloResult(20.0, 10, 2e-6, 1e-6)], path)
        rows = list(csv.reader(path.open()))
        assert rows == [["snr_db", "trials", "mse", "crb", "ratio"], ["20", "10", "2e-06", "1e-06", "2"]]


def test_variance_bridge():
    cfg = ProblemConfig()
    prof = sinusoidal(cfg)
    discrete = sample_variance(snapshot_positions(prof, 4001))
    continuous = variance_direct(integrate_trajectory(prof)) / cfg.T
    assert discrete == pytest.approx(continuous, rel=1e-4)
