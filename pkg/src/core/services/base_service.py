"""
Service container with dependency injection.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

from dataclasses import dataclass

from src.core.config.app_config import AppConfig
from src.core.services.calculations.compactness_calculation_service import CompactnessCalculationService
from src.core.services.calculations.example_space_service import ExampleSpaceService
from src.core.services.calculations.geometry_calculation_service import GeometryCalculationService
from src.core.services.calculations.gradient_construction_service import GradientConstructionService
from src.core.services.calculations.gradient_solver import GradientSolver
from src.core.services.calculations.norm_calculation_service import NormCalculationService
from src.core.services.calculations.regularization_service import RegularizationService
from src.core.services.calculations.space_calculation_service import SpaceCalculationService


@dataclass
class ServiceDependencies:
    """Container for the calculation services of one run"""
    config: AppConfig
    spaces: SpaceCalculationService
    regularization: RegularizationService
    examples: ExampleSpaceService
    geometry: GeometryCalculationService
    norms: NormCalculationService
    constructions: GradientConstructionService
    compactness: CompactnessCalculationService

    @classmethod
    def from_config(cls, config: AppConfig) -> "ServiceDependencies":
        """Wire every service with the run's worker count, tolerances and seed"""
        workers = config.run.workers
        spaces = SpaceCalculationService(workers)
        regularization = RegularizationService(spaces, workers)
        geometry = GeometryCalculationService(workers, config.diagnostics.integrability_tol)
        solver = GradientSolver.from_config(config.solver, config.run.seed)
        norms = NormCalculationService(solver, workers)
        constructions = GradientConstructionService(norms, regularization)
        return cls(
            config=config,
            spaces=spaces,
            regularization=regularization,
            examples=ExampleSpaceService(spaces, workers),
            geometry=geometry,
            norms=norms,
            constructions=constructions,
            compactness=CompactnessCalculationService(geometry, regularization, norms, constructions, workers),
        )
