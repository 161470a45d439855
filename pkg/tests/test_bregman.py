"""Tests for the separable Bregman functions and scalar operators."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bregsolve.bregman import (BregmanError, BregmanSpec, PrimalDualState,
                               ScalarBregman, bregman_distance,
                               elastic_net_piece, euclidean_piece,
                               interval_dist_zero, interval_project,
                               project_box, shrink)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestShrink:
    def test_basic_values(self):
        assert shrink(3.0, 1.0) == 2.0
        assert shrink(-0.5, 1.0) == 0.0
        assert shrink(-2.0, 0.5) == -1.5

    def test_zero_threshold_is_identity(self):
        assert shrink(1.234, 0.0) == 1.234

    def test_negative_threshold_rejected(self):
        with pytest.raises(BregmanError):
            shrink(1.0, -0.1)

    def test_resolvent_oracle(self):
        # shrink(x, lam) is argmin_y lam*|y| + (y - x)^2 / 2: check against
        # a two-stage grid scan on random instances.
        rng = np.random.default_rng(42)
        for _ in range(1000):
            x = float(rng.uniform(-5, 5))
            lam = float(rng.uniform(0, 3))
            grid = np.linspace(x - 6, x + 6, 4001)
            vals = lam * np.abs(grid) + 0.5 * (grid - x) ** 2
            coarse = grid[np.argmin(vals)]
            fine = np.linspace(coarse - 0.01, coarse + 0.01, 4001)
            vals = lam * np.abs(fine) + 0.5 * (fine - x) ** 2
            best = fine[np.argmin(vals)]
            assert shrink(x, lam) == pytest.approx(best, abs=2e-5)

    @given(finite, finite, st.floats(min_value=0, max_value=1e6))
    def test_lipschitz(self, a, b, lam):
        assert abs(shrink(a, lam) - shrink(b, lam)) <= abs(a - b) + 1e-9

    @given(finite, st.floats(min_value=0, max_value=1e6))
    def test_nonexpansive(self, x, lam):
        assert abs(shrink(x, lam)) <= abs(x)


class TestProjections:
    def test_project_box(self):
        assert project_box(2.0, 0.0, 1.0) == 1.0
        assert project_box(0.5, 0.0, 1.0) == 0.5
        assert project_box(-3.0, -1.0, 1.0) == -1.0

    def test_empty_box_rejected(self):
        with pytest.raises(BregmanError):
            project_box(0.0, 1.0, -1.0)

    def test_interval_helpers(self):
        assert interval_project(5.0, -1.0, 1.0) == 1.0
        assert interval_project(0.0, -1.0, 1.0) == 0.0
        assert interval_dist_zero(2.0, 3.0) == 2.0
        assert interval_dist_zero(-3.0, -2.0) == 2.0
        assert interval_dist_zero(-1.0, 1.0) == 0.0


class TestScalarBregman:
    def test_euclidean_interior(self):
        sb = euclidean_piece()
        assert sb.subdiff_interval(2.0) == (2.0, 2.0)

    def test_elastic_net_at_zero(self):
        sb = elastic_net_piece(1.0)
        assert sb.subdiff_interval(0.0) == (-1.0, 1.0)

    def test_active_upper_box(self):
        sb = euclidean_piece(lower=0.0, upper=1.0)
        lo, hi = sb.subdiff_interval(1.0)
        assert lo == 1.0 and hi == math.inf

    def test_active_lower_box(self):
        sb = euclidean_piece(lower=0.0, upper=1.0)
        lo, hi = sb.subdiff_interval(0.0)
        assert lo == -math.inf and hi == 0.0

    def test_outside_box_rejected(self):
        sb = euclidean_piece(lower=0.0, upper=1.0)
        with pytest.raises(BregmanError):
            sb.subdiff_interval(2.0)

    def test_gamma_zero_equals_euclidean(self):
        a = elastic_net_piece(0.0)
        b = euclidean_piece()
        for x in (-2.0, 0.0, 1.5):
            assert a.j_interval(x) == b.j_interval(x)
            assert a.j_value(x) == b.j_value(x)

    def test_shifted_kink_location(self):
        sb = ScalarBregman("shifted_elastic_net", 0.5, 0.3)
        lo, hi = sb.j_interval(0.3)
        assert lo == pytest.approx(0.3 - 0.5)
        assert hi == pytest.approx(0.3 + 0.5)
        assert sb.j_interval(1.0) == (1.5, 1.5)

    def test_invalid_configs(self):
        with pytest.raises(BregmanError):
            ScalarBregman("euclidean", gamma=1.0)
        with pytest.raises(BregmanError):
            ScalarBregman("elastic_net", gamma=1.0, shift=2.0)
        with pytest.raises(BregmanError):
            ScalarBregman("elastic_net", gamma=-1.0)
        with pytest.raises(BregmanError):
            ScalarBregman("euclidean", lower=1.0, upper=0.0)

    @given(st.floats(min_value=-100, max_value=100),
           st.floats(min_value=1e-6, max_value=100),
           st.floats(min_value=1e-9, max_value=10))
    def test_interval_monotonicity(self, x, dx, gamma):
        # Strong convexity: the subdifferential grows at least linearly.
        sb = elastic_net_piece(gamma)
        y = x + dx
        _, hi_x = sb.subdiff_interval(x)
        lo_y, _ = sb.subdiff_interval(y)
        assert hi_x + (y - x) <= lo_y + 1e-12 * max(1.0, abs(hi_x))


class TestBregmanDistance:
    def test_euclidean_half_squared_distance(self):
        spec = BregmanSpec.euclidean(2)
        d = bregman_distance(spec, [0.0, 0.0], [0.0, 0.0], [3.0, 4.0])
        assert d == pytest.approx(12.5)

    def test_distance_to_self_is_zero(self):
        spec = BregmanSpec.elastic_net(3, 1.0)
        x = np.array([1.0, 0.0, -2.0])
        p = spec.min_norm_subgradient(x)
        assert bregman_distance(spec, x, p, x) == 0.0

    def test_elastic_net_hand_value(self):
        spec = BregmanSpec.elastic_net(1, 1.0)
        d = bregman_distance(spec, [1.0], [2.0], [-1.0])
        assert d == pytest.approx(4.0)

    def test_invalid_subgradient_rejected(self):
        spec = BregmanSpec.euclidean(1)
        with pytest.raises(BregmanError):
            bregman_distance(spec, [1.0], [2.0], [0.0])

    @settings(max_examples=200)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_mu_convexity_gap(self, seed):
        rng = np.random.default_rng(seed)
        n = 4
        spec = BregmanSpec.elastic_net(n, float(rng.uniform(0, 2)))
        x = rng.uniform(-3, 3, n)
        y = rng.uniform(-3, 3, n)
        # any valid subgradient: random point of each interval
        p = np.empty(n)
        for i, sb in enumerate(spec.per_coordinate):
            lo, hi = sb.subdiff_interval(x[i])
            p[i] = rng.uniform(lo, hi)
        d = bregman_distance(spec, x, p, y)
        gap = 0.5 * spec.mu * float(np.sum((y - x) ** 2))
        assert d >= gap - 1e-12

    @settings(max_examples=200)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_symmetric_distance_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        spec = BregmanSpec.elastic_net(n, float(rng.uniform(0, 2)))
        x = rng.uniform(-3, 3, n)
        y = rng.uniform(-3, 3, n)
        p = spec.min_norm_subgradient(x)
        q = spec.min_norm_subgradient(y)
        lhs = bregman_distance(spec, x, p, y) + bregman_distance(spec, y, q, x)
        rhs = float(np.dot(q - p, y - x))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


class TestBregmanSpec:
    def test_gamma_property(self):
        spec = BregmanSpec.elastic_net(3, 0.7)
        assert spec.gamma == 0.7

    def test_mixed_gamma_rejected(self):
        spec = BregmanSpec((elastic_net_piece(1.0), elastic_net_piece(2.0)))
        with pytest.raises(BregmanError):
            spec.gamma

    def test_shifted_factory(self):
        shifts = np.array([0.1, 0.9])
        spec = BregmanSpec.shifted_elastic_net(0.5, shifts)
        assert spec.per_coordinate[1].shift == 0.9
        # gamma = 0 degenerates to euclidean
        spec0 = BregmanSpec.shifted_elastic_net(0.0, shifts)
        assert all(sb.kind == "euclidean" for sb in spec0.per_coordinate)

    def test_min_norm_subgradient_membership(self):
        spec = BregmanSpec.elastic_net(4, 1.5)
        x = np.array([0.0, 2.0, -1.0, 0.0])
        p = spec.min_norm_subgradient(x)
        assert spec.contains_subgradient(x, p)
        assert p[0] == 0.0 and p[3] == 0.0  # minimal at the kink

    def test_membership_violation(self):
        spec = BregmanSpec.euclidean(2)
        x = np.array([1.0, 2.0])
        assert spec.membership_violation(x, x) == 0.0
        assert spec.membership_violation(x, x + 0.5) == pytest.approx(0.5)

    def test_dimension_check(self):
        spec = BregmanSpec.euclidean(3)
        with pytest.raises(BregmanError):
            spec.value([1.0, 2.0])


class TestPrimalDualState:
    def test_initial_state_is_valid(self):
        spec = BregmanSpec.elastic_net(3, 1.0)
        state = PrimalDualState.initial(spec, [0.0, 1.0, -1.0])
        state.validate(spec)
        assert state.k == 0

    def test_initial_outside_box_rejected(self):
        spec = BregmanSpec.euclidean(1, lower=0.0, upper=1.0)
        with pytest.raises(BregmanError):
            PrimalDualState.initial(spec, [2.0])

    def test_validate_catches_bad_subgradient(self):
        spec = BregmanSpec.euclidean(1)
        state = PrimalDualState(np.array([1.0]), np.array([5.0]))
        with pytest.raises(BregmanError):
            state.validate(spec)

    def test_state_copies_inputs(self):
        x = np.array([1.0])
        state = PrimalDualState(x, x.copy())
        x[0] = 99.0
        assert state.x[0] == 1.0
