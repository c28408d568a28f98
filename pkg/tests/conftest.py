"""
Shared fixtures for the qmms test suite.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import numpy as np
import pytest

from src.core.config.app_config import AppConfig
from src.core.models.entities import GeneratorSpec
from src.core.services.base_service import ServiceDependencies
from src.core.services.calculations.space_calculation_service import SpaceCalculationService


@pytest.fixture
def space_service():
    return SpaceCalculationService()


@pytest.fixture
def line3(space_service):
    """Points 0, 1, 2 on the line with unit weights"""
    x = np.array([0.0, 1.0, 2.0])
    return space_service.validate_space(np.abs(x[:, None] - x[None, :]), [1.0, 1.0, 1.0])


@pytest.fixture
def two_point(space_service):
    """Two atoms at distance 1 carrying mass 1/2 each"""
    return space_service.validate_space([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])


@pytest.fixture
def config(tmp_path):
    return AppConfig.from_env().with_run(seed=0, jobs=1, output_dir=str(tmp_path / "reports"))


@pytest.fixture
def deps(config):
    return ServiceDependencies.from_config(config)


@pytest.fixture
def grid(deps):
    """euclidean_grid with n points on [0, 1)"""

    def build(n: int = 8):
        space, _ = deps.examples.generate(GeneratorSpec("euclidean_grid", {"n": n}))
        return space

    return build


@pytest.fixture
def discrete(deps):
    def build(n: int = 10):
        space, _ = deps.examples.generate(GeneratorSpec("discrete_N", {"n": n}))
        return space

    return build
