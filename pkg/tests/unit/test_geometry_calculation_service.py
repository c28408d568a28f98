"""
Tests for nets, doubling constants, tail ratios and integrability.
"""

import numpy as np
import pytest

from src.core.models.entities import GeneratorSpec
from src.core.models.exceptions import EmptyTail, InvalidParams
from src.core.services.calculations.geometry_calculation_service import GeometryCalculationService


class TestDiscreteN:
    """Exact diagnostics on discrete_N, n = 20"""

    N = 20

    @pytest.fixture
    def space(self, discrete):
        return discrete(self.N)

    @pytest.mark.parametrize("c,delta", [(2.0, 0.1), (2.0, 0.5), (4.0, 0.25), (3.0, 0.2)])
    def test_doubling_is_one(self, deps, space, c, delta):
        assert deps.geometry.doubling_constant(space, c, delta) == 1.0

    def test_h_profile(self, deps, space):
        h = deps.geometry.h_profile(space, [0.25, 0.5, 1.0])
        assert all(v == 2.0 ** -self.N for v in h.values())

    def test_every_point_is_a_center(self, deps, space):
        profile = deps.geometry.covering_profile(space, [0.25, 0.5, 0.75])
        assert [g for _, g, _ in profile] == [self.N] * 3

    def test_whole_space_ball(self, deps, space):
        assert deps.spaces.ball(space, 0, 2.0).mass == pytest.approx(1.0 - 2.0 ** -self.N)


class TestNets:
    """Greedy separated sets on the Euclidean grid"""

    def test_greedy_centers(self, deps, grid):
        # Arrange
        space = grid(10)

        # Act
        net = deps.geometry.greedy_separated(space, 0.25)

        # Assert
        assert net.centers == [0, 3, 6, 9]
        assert deps.geometry.is_net(space, net)

    def test_net_sizes_nonincreasing(self, deps, grid):
        profile = deps.geometry.covering_profile(grid(16), [0.05, 0.1, 0.2, 0.4, 0.8])
        nets = [m for _, _, m in profile]
        assert nets == sorted(nets, reverse=True)
        assert profile[0][1] == 16

    def test_density_line_greedy(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("exp_density", {"T": 2.0, "resolution": 10}))
        net = deps.geometry.greedy_separated(line, 0.5)
        gaps = np.diff(line.positions[net.centers])
        assert np.all(gaps >= 0.5 - 1e-12)

    @pytest.mark.parametrize("epsilon", [0.1, 0.25, 0.5])
    def test_counting_bounds(self, deps, grid, epsilon):
        space = grid(10)
        assert deps.geometry.counting_bound(space, epsilon).holds
        assert deps.geometry.total_boundedness_bound(space, epsilon).holds

    def test_invalid_epsilon(self, deps, grid):
        with pytest.raises(InvalidParams):
            deps.geometry.greedy_separated(grid(4), 0.0)


class TestDoubling:
    """Doubling constants and dimension"""

    def test_trivial_factor(self, deps, grid):
        assert deps.geometry.doubling_constant(grid(4), 1.0, 0.3) == 1.0
        with pytest.raises(InvalidParams):
            deps.geometry.doubling_constant(grid(4), 0.5, 0.3)

    def test_doubling_dimension_holds(self, deps, grid):
        report = deps.geometry.doubling_dimension(grid(10), [0.125, 0.25, 0.5])
        assert report.holds
        assert report.details["C_mu"] >= 1.0

    def test_ahlfors_radii(self, deps, grid):
        s, b = deps.geometry.ahlfors_lower_fit(grid(10), [0.25, 0.5, 1.0])
        assert s == 1.0
        assert b > 0
        with pytest.raises(InvalidParams):
            deps.geometry.ahlfors_lower_fit(grid(10), [2.0])

    def test_exp_density_below_bound(self, deps):
        """Measured Delta_2(1/2) on exp(x^(1/2)) stays below 2c exp((c delta)^beta)"""
        line, _ = deps.examples.generate(GeneratorSpec("exp_density", {"beta": 0.5, "T": 8.0, "resolution": 1000}))
        centers = deps.geometry.interior_centers(line, 1.0)
        measured = deps.geometry.doubling_constant(line, 2.0, 0.5, centers)
        bound = deps.examples.doubling_bound("exp_density", 2.0, 0.5, 0.5)
        assert measured <= bound * deps.config.diagnostics.bound_tol

    @pytest.mark.parametrize("name", ["exp_density", "gauss_density", "inv_exp_density"])
    @pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
    def test_density_lines_below_closed_form_bounds(self, deps, name, beta):
        line, _ = deps.examples.generate(GeneratorSpec(name, {"beta": beta, "T": 8.0, "resolution": 1000}))
        for c in (2.0, 4.0):
            for delta in (0.1, 0.5, 1.0):
                centers = deps.geometry.interior_centers(line, c * delta)
                measured = deps.geometry.doubling_constant(line, c, delta, centers)
                bound = deps.examples.doubling_bound(name, c, delta, beta)
                assert measured <= bound * deps.config.diagnostics.bound_tol, (c, delta)


class TestTailRatios:
    """Doubling at infinity"""

    def test_dyadic_tail_ratio(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("dyadic_tail", {"K": 8}))
        report = deps.geometry.doubling_at_infinity(line, 0, [2.0 ** k for k in range(6)])
        assert report.ratios.max() <= 4.0 * deps.config.diagnostics.bound_tol
        assert report.liminf >= 1.0

    def test_gauss_tail_grows(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("gauss_density", {"beta": 2.0, "T": 8.0, "resolution": 1000}))
        report = deps.geometry.doubling_at_infinity(line, 0, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
        assert report.growing

    def test_empty_tail(self, deps, grid):
        with pytest.raises(EmptyTail):
            deps.geometry.doubling_at_infinity(grid(8), 0, [10.0])


class TestIntegrability:
    """Truncation curves of the integral of 1/mu(B(x, r))"""

    @pytest.mark.parametrize("beta,verdict", [(2.0, "integrable"), (1.0, "divergent")])
    def test_gauss_verdicts(self, deps, beta, verdict):
        builder = deps.examples.truncation_builder(
            GeneratorSpec("gauss_density", {"beta": beta, "resolution": 100})
        )
        report = deps.geometry.integrability_functional(builder, r=1.0, T_max=16.0)
        assert report.verdict == verdict
        assert [T for T, _ in report.truncation_curve] == [1.0, 2.0, 4.0, 8.0, 16.0]

    def test_tolerance_is_absolute_increment(self, deps):
        """The verdict compares the raw increment over the last doubling of T, not the growth relative to the value"""
        builder = deps.examples.truncation_builder(GeneratorSpec("gauss_density", {"beta": 1.0, "resolution": 100}))
        report = deps.geometry.integrability_functional(builder, r=1.0, T_max=16.0)
        (_, before), (_, last) = report.truncation_curve[-2:]
        increment = report.details["last_increment"]
        assert increment == pytest.approx(last - before)
        assert report.value > 2.0

        just_above = GeometryCalculationService(integrability_tol=increment * 1.01)
        just_below = GeometryCalculationService(integrability_tol=increment * 0.99)
        assert just_above.integrability_functional(builder, r=1.0, T_max=16.0).verdict == "integrable"
        # increment / value is below this tolerance, the curve still does not count as converged
        assert just_below.integrability_functional(builder, r=1.0, T_max=16.0).verdict == "inconclusive"

    def test_finite_space(self, deps, discrete):
        report = deps.geometry.integrability_functional(discrete(5), r=0.5)
        # every ball of radius 1/2 is a single atom
        assert report.value == pytest.approx(5.0)
        assert report.verdict == "finite space"

    def test_lower_bound(self, deps, grid):
        assert deps.geometry.nonintegrability_lower_bound(grid(12), 0.1).holds

    def test_invalid_radius(self, deps, grid):
        with pytest.raises(InvalidParams):
            deps.geometry.integrability_functional(grid(4), 0.0)
