"""
Tests for space validation, quasi-constants and set operations.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.models.exceptions import (
    EmptySet,
    InvalidSpace,
    NegativeDistance,
    NonpositiveWeight,
    ZeroOffDiagonal,
)
from src.core.services.calculations.space_calculation_service import compute_quasi_constants


def random_distances(seed: int, n: int, symmetric: bool) -> np.ndarray:
    rng = np.random.default_rng(seed)
    D = rng.uniform(0.1, 3.0, (n, n))
    if symmetric:
        D = np.triu(D, 1) + np.triu(D, 1).T
    np.fill_diagonal(D, 0.0)
    return D


class TestValidateSpace:
    """Quasi-metric axioms and constants of validated spaces"""

    def test_line_constants(self, line3):
        """Three collinear points: C_d = 2, C~_d = 1"""
        assert line3.C_d == pytest.approx(2.0)
        assert line3.C_d_tilde == 1.0
        assert line3.is_symmetric

    def test_discrete_metric_constants(self, space_service):
        space = space_service.validate_space(1.0 - np.eye(5), np.ones(5))
        assert space.C_d == 1.0
        assert space.C_d_tilde == 1.0

    def test_zero_off_diagonal(self, space_service):
        with pytest.raises(ZeroOffDiagonal):
            space_service.validate_space([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0])

    def test_negative_distance(self, space_service):
        with pytest.raises(NegativeDistance):
            space_service.validate_space([[0.0, -1.0], [1.0, 0.0]], [1.0, 1.0])

    def test_nonpositive_weight(self, space_service):
        with pytest.raises(NonpositiveWeight):
            space_service.validate_space([[0.0, 1.0], [1.0, 0.0]], [1.0, 0.0])

    def test_shape_errors(self, space_service):
        with pytest.raises(InvalidSpace):
            space_service.validate_space([[0.0]], [1.0])
        with pytest.raises(InvalidSpace):
            space_service.validate_space([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0, 1.0])

    def test_asymmetric_tilde_constant(self, space_service):
        # Arrange
        D = [[0.0, 1.0, 2.0], [3.0, 0.0, 1.0], [2.0, 1.0, 0.0]]

        # Act
        space = space_service.validate_space(D, [1.0, 1.0, 1.0])

        # Assert
        assert space.C_d_tilde == pytest.approx(3.0)
        assert not space.is_symmetric

    def test_matrices_are_read_only(self, line3):
        with pytest.raises(ValueError):
            line3.dist[0, 1] = 5.0


class TestQuasiConstants:
    """Properties of the exact suprema"""

    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=7))
    @settings(max_examples=60, deadline=None, derandomize=True)
    def test_symmetric_tilde_is_one(self, seed, n):
        c_d, c_tilde = compute_quasi_constants(random_distances(seed, n, symmetric=True))
        assert c_d >= 1.0
        assert c_tilde == 1.0

    @given(
        st.integers(min_value=0, max_value=10_000),
        st.floats(min_value=0.2, max_value=3.0, allow_nan=False, allow_infinity=False),
    )
    @settings(max_examples=60, deadline=None, derandomize=True)
    def test_power_of_distance(self, seed, s):
        """C_d of d^s is C_d of d raised to s"""
        D = random_distances(seed, 5, symmetric=False)
        c_d, c_tilde = compute_quasi_constants(D)
        c_d_s, c_tilde_s = compute_quasi_constants(D ** s)
        assert c_d_s == pytest.approx(c_d ** s, rel=1e-12)
        assert c_tilde_s == pytest.approx(c_tilde ** s, rel=1e-12)

    def test_threaded_scan_matches_serial(self):
        D = random_distances(7, 40, symmetric=False)
        assert compute_quasi_constants(D, workers=4) == compute_quasi_constants(D, workers=1)


class TestSetOperations:
    """Balls, hulls and set operations on the line"""

    def test_ball_is_open(self, space_service, line3):
        ball = space_service.ball(line3, 0, 1.0)
        assert ball.members == (0,)
        assert ball.mass == 1.0

    def test_set_ops(self, space_service, line3):
        ops = space_service.set_ops(line3, [0], F=[2], delta=1.5)
        assert ops.diam == 0.0
        assert ops.dist_between == 2.0
        assert ops.neighborhood.tolist() == [0, 1]
        assert ops.closure_equals_set

    def test_empty_set(self, space_service, line3):
        with pytest.raises(EmptySet):
            space_service.diam(line3, [])

    def test_open_hull_containment(self, space_service, line3):
        result = space_service.hull_containment(line3, 1, 1.5)
        assert result == {"contains_ball": True, "inside_dilate": True}

    def test_symmetrize(self, space_service):
        space = space_service.validate_space([[0.0, 1.0], [2.0, 0.0]], [1.0, 1.0])
        sym = space_service.symmetrize(space)
        assert sym.dist.tolist() == [[0.0, 2.0], [2.0, 0.0]]
