"""
Tests for chain-metric regularization and the index profile.
"""

import numpy as np
import pytest

from src.core.models.exceptions import InvalidParams
from src.core.services.calculations.regularization_service import RegularizationService, default_beta_grid


class TestChainMetric:
    """Chain metric on collinear points"""

    @pytest.fixture
    def service(self, space_service):
        return RegularizationService(space_service)

    @pytest.mark.parametrize("beta", [0.25, 0.5, 1.0, 1.5, 2.0, 3.0])
    def test_collinear_distortion(self, service, line3, beta):
        """Distortion on three collinear points is max(1, 2^(beta - 1))"""
        chain = service.chain_metric(line3, beta)
        assert chain.distortion == pytest.approx(max(1.0, 2.0 ** (beta - 1)), rel=1e-12)

    def test_sigma_is_beta_metric(self, service, line3):
        chain = service.chain_metric(line3, 2.0)
        assert service.beta_power_triangle_violation(chain.rho, 2.0) <= 1e-12
        assert chain.kappa <= chain.kappa_bound * (1 + 1e-12)

    def test_snowflake_relation(self, service, grid):
        """Chain metric of (X, d^s) at beta / s equals that of (X, d) at beta"""
        # Arrange
        space = grid(6)
        s, beta = 0.5, 0.8

        # Act
        plain = service.chain_metric(space, beta)
        snow = service.chain_metric(service.snowflake(space, s), beta / s)

        # Assert
        np.testing.assert_allclose(snow.sigma, plain.sigma, rtol=1e-12)
        assert snow.distortion == pytest.approx(plain.distortion, rel=1e-12)

    def test_snowflake_metadata(self, service, line3):
        snow = service.snowflake(service.snowflake(line3, 0.5), 0.5)
        assert snow.metadata["snowflake"] == pytest.approx(0.25)
        assert snow.C_d == pytest.approx(2.0 ** 0.25)

    def test_invalid_exponents(self, service, line3):
        with pytest.raises(InvalidParams):
            service.chain_metric(line3, 0.0)
        with pytest.raises(InvalidParams):
            service.snowflake(line3, -1.0)


class TestIndexProfile:
    """Distortion profile along the default grid"""

    def test_default_grid(self):
        grid = default_beta_grid()
        assert grid[0] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(25.6)
        assert grid.size == 65

    def test_feasible_sup_on_line(self, line3, space_service):
        # 2^(beta - 1) <= 1.5 up to beta = 1 + log2(1.5)
        profile = RegularizationService(space_service).index_profile(line3, threshold=1.5)
        assert profile.monotone
        assert 1.4 < profile.feasible_sup <= 1.0 + np.log2(1.5)

    def test_threaded_profile(self, line3, space_service):
        serial = RegularizationService(space_service, workers=1).index_profile(line3)
        threaded = RegularizationService(space_service, workers=4).index_profile(line3)
        np.testing.assert_array_equal(serial.distortions, threaded.distortions)

    def test_empty_grid(self, line3, space_service):
        with pytest.raises(InvalidParams):
            RegularizationService(space_service).index_profile(line3, beta_grid=[])
