"""Gamma path sampling, bridges, and the activity-change transforms."""

import io
import math

import numpy as np
import pytest
from scipy import stats

from gammasub import (
    ContractError,
    DegeneratePathError,
    DomainError,
    GridPath,
    TimeGrid,
    augment_path,
    gamma_bridge,
    sample_gamma_bridge,
    sample_gamma_path,
    thin_path,
)
from gammasub.paths import write_path_csv


class TestTimeGrid:
    def test_refined_points(self):
        grid = TimeGrid([0.0, 1.0, 3.0], m=2)
        assert grid.all_times() == pytest.approx([0.0, 0.5, 1.0, 2.0, 3.0])
        assert grid.n_segments == 2
        assert grid.spans == pytest.approx([1.0, 2.0])
        assert grid.horizon == 3.0

    def test_observation_points_exact(self):
        times = np.array([0.0, 0.1, 0.30000000000000004, 0.7])
        grid = TimeGrid(times, m=7)
        assert np.all(grid.all_times()[7::7] == times[1:])

    def test_validation(self):
        with pytest.raises(DomainError):
            TimeGrid([0.0, 0.0], m=1)
        with pytest.raises(DomainError):
            TimeGrid([0.0, 1.0], m=0)
        with pytest.raises(DomainError):
            TimeGrid([0.0], m=1)


class TestGridPath:
    def test_validation(self):
        grid = TimeGrid([0.0, 1.0], m=2)
        with pytest.raises(DomainError):
            GridPath(grid, [0.0, 1.0])                 # wrong length
        with pytest.raises(DomainError):
            GridPath(grid, [0.0, 2.0, 1.0])            # decreasing
        with pytest.raises(DomainError):
            GridPath(grid, [0.0, math.nan, 1.0])


class TestSampleGammaPath:
    def test_moments_of_endpoint(self):
        # E X_T = beta*T/alpha, Var X_T = beta*T/alpha^2
        grid = TimeGrid([0.0, 1.0], m=4)
        rng = np.random.default_rng(100)
        ends = np.array([sample_gamma_path(1.0, 1.0, grid, rng).end for _ in range(100_000)])
        se_mean = ends.std() / math.sqrt(ends.size)
        assert abs(ends.mean() - 1.0) < 3 * se_mean
        v = ends.var()
        se_var = math.sqrt((np.mean((ends - ends.mean()) ** 4) - v * v) / ends.size)
        assert abs(v - 1.0) < 3 * se_var

    def test_increments_positive_and_start_zero(self):
        grid = TimeGrid([0.0, 2.0, 5.0], m=3)
        path = sample_gamma_path(0.7, 1.3, grid, 5)
        assert path.start == 0.0
        assert np.all(path.increments > 0)

    def test_deterministic_given_seed(self):
        grid = TimeGrid([0.0, 1.0], m=8)
        a = sample_gamma_path(1.0, 2.0, grid, 123)
        b = sample_gamma_path(1.0, 2.0, grid, 123)
        assert np.array_equal(a.values, b.values)

    def test_bad_parameters(self):
        grid = TimeGrid([0.0, 1.0], m=2)
        with pytest.raises(DomainError):
            sample_gamma_path(0.0, 1.0, grid, 0)
        with pytest.raises(DomainError):
            sample_gamma_path(1.0, -1.0, grid, 0)


class TestGammaBridge:
    def test_endpoints_exact(self):
        grid = TimeGrid([0.0, 1.0], m=5)
        path = sample_gamma_path(1.0, 1.0, grid, 7)
        b = gamma_bridge(path, 0.25, 3.5)
        assert b.values[0] == 0.25
        assert b.values[-1] == 3.5
        assert np.all(np.diff(b.values) >= 0)

    def test_scaling_invariance(self):
        grid = TimeGrid([0.0, 1.0], m=6)
        path = sample_gamma_path(1.0, 1.0, grid, 11)
        scaled = GridPath(grid, path.values * 17.0)
        a = gamma_bridge(path, 0.0, 1.0)
        b = gamma_bridge(scaled, 0.0, 1.0)
        assert a.values == pytest.approx(b.values, rel=1e-12)

    def test_requires_increasing_endpoints(self):
        grid = TimeGrid([0.0, 1.0], m=2)
        path = sample_gamma_path(1.0, 1.0, grid, 3)
        with pytest.raises(DomainError):
            gamma_bridge(path, 1.0, 1.0)

    def test_degenerate_raises(self):
        grid = TimeGrid([0.0, 1.0], m=3)
        flat = GridPath(grid, np.zeros(4))
        with pytest.raises(DegeneratePathError):
            gamma_bridge(flat, 0.0, 1.0)

    def test_zero_increment_clamped(self):
        grid = TimeGrid([0.0, 1.0], m=3)
        stalled = GridPath(grid, np.array([0.0, 0.5, 0.5, 1.0]))
        b = gamma_bridge(stalled, 0.0, 2.0)
        assert np.all(b.increments > 0)
        assert np.all(np.diff(b.values) >= 0)

    def test_midpoint_beta_law(self):
        # bridge value at T/2 of a 0->1 Gamma(beta, alpha) bridge is
        # Beta(beta*T/2, beta*T/2): mean 1/2, variance 1/(4*(beta*T+1))
        beta, T, reps = 2.0, 1.0, 20_000
        grid = TimeGrid([0.0, T], m=2)
        rng = np.random.default_rng(42)
        mids = np.empty(reps)
        for i in range(reps):
            mids[i] = gamma_bridge(sample_gamma_path(beta, 1.0, grid, rng), 0.0, 1.0).values[1]
        mean_se = mids.std() / math.sqrt(reps)
        assert abs(mids.mean() - 0.5) < 3 * mean_se
        target_var = 1.0 / (4.0 * (beta * T + 1.0))
        v = mids.var()
        se_var = math.sqrt((np.mean((mids - mids.mean()) ** 4) - v * v) / reps)
        assert abs(v - target_var) < 3 * se_var

    def test_sample_gamma_bridge_wrapper(self):
        grid = TimeGrid([0.0, 2.0], m=4)
        b = sample_gamma_bridge(1.5, 2.0, grid, 1.0, 4.0, 99)
        assert b.values[0] == 1.0 and b.values[-1] == 4.0


class TestAugment:
    def test_requires_larger_target(self):
        grid = TimeGrid([0.0, 1.0], m=2)
        path = sample_gamma_path(1.0, 1.0, grid, 0)
        with pytest.raises(ContractError):
            augment_path(path, 2.0, 1.0, 1.0, 0)

    def test_moments_match_direct_gamma(self):
        beta, beta_new, alpha, h = 1.0, 2.0, 1.5, 0.5
        grid = TimeGrid([0.0, 50_000 * h], m=50_000)
        path = sample_gamma_path(beta, alpha, grid, 21)
        out = augment_path(path, beta, beta_new, alpha, 22)
        inc = out.increments
        target_mean = h * beta_new / alpha
        target_var = h * beta_new / alpha ** 2
        assert abs(inc.mean() - target_mean) < 3 * inc.std() / math.sqrt(inc.size)
        v = inc.var()
        se_var = math.sqrt((np.mean((inc - inc.mean()) ** 4) - v * v) / inc.size)
        assert abs(v - target_var) < 3 * se_var

    def test_vanishing_addition(self):
        beta, alpha = 1.0, 1.0
        grid = TimeGrid([0.0, 100.0], m=1000)
        path = sample_gamma_path(beta, alpha, grid, 3)
        out = augment_path(path, beta, beta + 1e-6, alpha, 4)
        added = out.increments - path.increments
        assert np.all(added >= 0)
        assert added.mean() < 1e-5

    def test_composition_matches_single_jump(self):
        # augment in two steps vs one step: same first two moments
        alpha, h, n = 1.0, 0.2, 200_000
        grid = TimeGrid([0.0, n * h], m=n)
        base = sample_gamma_path(1.0, alpha, grid, 31)
        two_step = augment_path(augment_path(base, 1.0, 1.5, alpha, 32), 1.5, 3.0, alpha, 33)
        one_step = augment_path(base, 1.0, 3.0, alpha, 34)
        a, b = two_step.increments, one_step.increments
        se = math.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) < 3 * se
        va, vb = a.var(), b.var()
        se_v = math.sqrt(
            (np.mean((a - a.mean()) ** 4) - va ** 2) / a.size
            + (np.mean((b - b.mean()) ** 4) - vb ** 2) / b.size)
        assert abs(va - vb) < 3 * se_v


class TestThin:
    def test_requires_smaller_target(self):
        grid = TimeGrid([0.0, 1.0], m=2)
        path = sample_gamma_path(1.0, 1.0, grid, 0)
        with pytest.raises(ContractError):
            thin_path(path, 1.0, 2.0, 0)
        with pytest.raises(ContractError):
            thin_path(path, 1.0, -0.5, 0)

    def test_pointwise_below_input(self):
        grid = TimeGrid([0.0, 10.0], m=100)
        path = sample_gamma_path(2.0, 1.0, grid, 8)
        out = thin_path(path, 2.0, 0.5, 9)
        assert np.all(out.increments <= path.increments)
        assert np.all(np.diff(out.values) >= 0)

    def test_mean_ratio(self):
        beta, beta_new, h, n = 2.0, 0.5, 1.0, 100_000
        grid = TimeGrid([0.0, n * h], m=n)
        path = sample_gamma_path(beta, 1.0, grid, 51)
        out = thin_path(path, beta, beta_new, 52)
        ratio = out.increments.mean() / path.increments.mean()
        se = out.increments.std() / math.sqrt(n) / path.increments.mean()
        assert abs(ratio - beta_new / beta) < 4 * se

    def test_marginal_matches_direct_gamma(self):
        alpha, beta, beta_new = 1.5, 2.0, 0.5
        for h in (0.1, 1.0):
            n = 10_000
            grid = TimeGrid([0.0, n * h], m=n)
            path = sample_gamma_path(beta, alpha, grid, 61)
            out = thin_path(path, beta, beta_new, 62)
            direct = np.random.default_rng(63).gamma(h * beta_new, 1 / alpha, size=n)
            res = stats.ks_2samp(out.increments, direct)
            assert res.pvalue > 0.01

    def test_near_identity_limit(self):
        grid = TimeGrid([0.0, 100.0], m=100)
        path = sample_gamma_path(2.0, 1.0, grid, 71)
        out = thin_path(path, 2.0, 2.0 - 1e-9, 72)
        assert out.increments == pytest.approx(path.increments, rel=1e-4)


class TestRoundTrip:
    def test_thin_of_augment_restores_marginal(self):
        alpha, beta, beta_up, h, n = 1.0, 1.0, 2.5, 0.5, 10_000
        grid = TimeGrid([0.0, n * h], m=n)
        base = sample_gamma_path(beta, alpha, grid, 81)
        round_trip = thin_path(augment_path(base, beta, beta_up, alpha, 82), beta_up, beta, 83)
        inc = round_trip.increments
        fresh = np.random.default_rng(84).gamma(h * beta, 1 / alpha, size=n)
        assert stats.ks_2samp(inc, fresh).pvalue > 0.01
        se = math.sqrt(inc.var() / n + fresh.var() / n)
        assert abs(inc.mean() - fresh.mean()) < 3 * se


class TestCsv:
    def test_full_precision_round_trip(self):
        grid = TimeGrid([0.0, 1.0], m=3)
        path = sample_gamma_path(1.0, 1.0, grid, 5)
        buf = io.StringIO()
        write_path_csv(path, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "time,value"
        parsed = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert np.array_equal(parsed[:, 1], path.values)
