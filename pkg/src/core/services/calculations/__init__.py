"""
Calculation Services

Services computing on quasi-metric-measure spaces: validation and set
geometry, regularization, example generators, doubling/integrability
diagnostics, minimal-gradient norms and compactness certificates.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

from .space_calculation_service import SpaceCalculationService, SetOperations, compute_quasi_constants
from .regularization_service import RegularizationService, default_beta_grid
from .example_space_service import ExampleSpaceService
from .geometry_calculation_service import GeometryCalculationService
from .gradient_solver import GradientProgram, GradientSolver, active_set_oracle
from .norm_calculation_service import NormCalculationService, lp_norm, dyadic_level, combine_levels
from .gradient_construction_service import GradientConstructionService
from .compactness_calculation_service import CompactnessCalculationService, l0_distance

__all__ = [
    'SpaceCalculationService',
    'SetOperations',
    'compute_quasi_constants',
    'RegularizationService',
    'default_beta_grid',
    'ExampleSpaceService',
    'GeometryCalculationService',
    'GradientProgram',
    'GradientSolver',
    'active_set_oracle',
    'NormCalculationService',
    'lp_norm',
    'dyadic_level',
    'combine_levels',
    'GradientConstructionService',
    'CompactnessCalculationService',
    'l0_distance',
]
