import math

import numpy as np
import pytest
from scipy.optimize import brentq

from mflab.fokker_planck import predicted_r_squared, simulate_linearized


class TestSimulateLinearized:
    def test_zero_noise_zero_init(self):
        path = simulate_linearized(1000, 4.0, 2.0, 0.1, seed=1,
                                   init_amp=0.0, noise_amp=0.0)
        assert np.all(path.x_c == 0.0) and np.all(path.x_s == 0.0)
        assert np.all(path.r == 0.0)

    def test_initial_mean_square(self):
        # E[r(0)^2] = 1/N: two independent N(0, 1/(2N)) coordinates
        n_paths = 200_000
        path = simulate_linearized(1000, 4.0, 0.1, 0.1, seed=2,
                                   n_paths=n_paths)
        mean_r2 = float((path.r[0] ** 2).mean())
        assert abs(mean_r2 - 1e-3) / 1e-3 < 0.02

    def test_deterministic(self):
        a = simulate_linearized(500, 3.0, 1.0, 0.05, seed=9, n_paths=4)
        b = simulate_linearized(500, 3.0, 1.0, 0.05, seed=9, n_paths=4)
        assert np.array_equal(a.x_c, b.x_c)

    def test_exact_transition_dt_invariance(self):
        # noise-free growth from a fixed start is exact at any step size
        path_a = simulate_linearized(100, 4.0, 2.0, 0.5, seed=3, noise_amp=0.0)
        path_b = simulate_linearized(100, 4.0, 2.0, 0.01, seed=3, noise_amp=0.0)
        assert math.isclose(path_a.x_c[-1, 0] / path_a.x_c[0, 0],
                            math.exp(0.5 * 2.0), rel_tol=1e-12)
        assert math.isclose(path_b.x_c[-1, 0] / path_b.x_c[0, 0],
                            math.exp(0.5 * 2.0), rel_tol=1e-12)

    def test_monte_carlo_matches_prediction(self):
        path = simulate_linearized(1000, 4.0, 6.0, 0.05, seed=123,
                                   n_paths=10_000)
        mean_r2 = (path.r ** 2).mean(axis=1)
        pred = predicted_r_squared(1000, 4.0, path.times)
        rel = np.abs(mean_r2 - pred) / pred
        assert rel.max() < 0.05

    def test_critical_coupling_allowed(self):
        path = simulate_linearized(100, 2.0, 1.0, 0.1, seed=4, n_paths=100)
        assert np.isfinite(path.r).all()

    def test_bad_dt_rejected(self):
        with pytest.raises(ValueError):
            simulate_linearized(100, 4.0, 1.0, -0.1, seed=1)


class TestPredictedRSquared:
    def test_at_time_zero(self):
        assert predicted_r_squared(1000, 4.0, 0.0) == pytest.approx(1e-3)

    def test_monotone_increasing_supercritical(self):
        t = np.linspace(0, 8, 200)
        vals = predicted_r_squared(1000, 4.0, t)
        assert np.all(np.diff(vals) > 0)

    def test_critical_rejected(self):
        with pytest.raises(ValueError):
            predicted_r_squared(1000, 2.0, 1.0)

    def test_unit_crossing_times(self):
        # leading-order crossing log N/(2 lambda_1) ~= 6.9 sits in [6.5, 7.5];
        # the exact root of the corrected formula is lower by
        # log(1 + 1/(2 lambda_1)) / (2 lambda_1) ~= log 2, near 6.216
        lam = (4.0 - 2.0) / 4.0
        leading = math.log(1000) / (2 * lam)
        assert 6.5 <= leading <= 7.5
        root = brentq(lambda t: predicted_r_squared(1000, 4.0, t) - 1.0,
                      1.0, 20.0)
        assert math.isclose(root, math.log((1000 + 1) / 2.0), rel_tol=1e-9)
        assert math.isclose(root, leading - math.log(2.0), rel_tol=5e-3)
