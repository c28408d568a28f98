"""
Factory Pattern implementation for experiment generators.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

from typing import Dict, List, Type

from src.core.services.base_service import ServiceDependencies
from src.reports.generators.experiment_report import (
    CombIntegrabilityExperiment,
    DensityBoundExperiment,
    DiscreteDoublingExperiment,
    ExperimentGenerator,
    IntegrabilityExperiment,
    InterpolationExperiment,
    SeparatedWitnessExperiment,
    TailWitnessExperiment,
)


class ExperimentFactory:
    """Factory for creating experiment generators"""

    _generators: Dict[str, Type[ExperimentGenerator]] = {
        "exdis-doubling": DiscreteDoublingExperiment,
        "exp0-bound": DensityBoundExperiment,
        "exint1-integrability": IntegrabilityExperiment,
        "comb-integrability": CombIntegrabilityExperiment,
        "trzecie-witness": SeparatedWitnessExperiment,
        "doubinf-witness": TailWitnessExperiment,
        "interpolation": InterpolationExperiment,
    }

    @classmethod
    def create_generator(cls, name: str, dependencies: ServiceDependencies) -> ExperimentGenerator:
        """
        Create experiment generator for the given name.

        Args:
            name: experiment name
            dependencies: service container of the run

        Returns:
            Experiment generator instance

        Raises:
            ValueError: If the experiment is not supported
        """
        if name not in cls._generators:
            raise ValueError(f"Unsupported experiment: {name}")
        return cls._generators[name](dependencies)

    @classmethod
    def get_supported_names(cls) -> List[str]:
        """Get list of supported experiment names"""
        return list(cls._generators.keys())

    @classmethod
    def register_generator(cls, name: str, generator_class: Type[ExperimentGenerator]) -> None:
        """
        Register new experiment generator.

        Args:
            name: experiment name
            generator_class: generator class
        """
        cls._generators[name] = generator_class
