"""
Tests for the experiment factory and the lighter experiment generators.
"""

import pandas as pd
import pytest

from src.reports.factories.experiment_factory import ExperimentFactory
from src.reports.generators.experiment_report import ExperimentGenerator, ExperimentResult


class TestExperimentFactory:
    """Factory Pattern for experiments"""

    def test_supported_names(self):
        names = ExperimentFactory.get_supported_names()
        assert "exp0-bound" in names
        assert "interpolation" in names

    def test_unsupported_name(self, deps):
        with pytest.raises(ValueError, match="Unsupported experiment"):
            ExperimentFactory.create_generator("nope", deps)

    def test_register_generator(self, deps, monkeypatch):
        class Echo(ExperimentGenerator):
            def generate(self) -> ExperimentResult:
                return ExperimentResult(name="echo", tables={"t": pd.DataFrame({"seed": [self.seed]})})

            def get_experiment_name(self) -> str:
                return "echo"

        monkeypatch.setattr(ExperimentFactory, "_generators", dict(ExperimentFactory._generators))
        ExperimentFactory.register_generator("echo", Echo)
        result = ExperimentFactory.create_generator("echo", deps).generate()
        assert result.passed
        assert result.tables["t"]["seed"].tolist() == [0]


class TestExperiments:
    """Every named bundle passes on the default configuration"""

    @pytest.mark.parametrize(
        "name",
        [
            "exdis-doubling",
            "exp0-bound",
            "exint1-integrability",
            "comb-integrability",
            "trzecie-witness",
            "doubinf-witness",
        ],
    )
    def test_passes(self, deps, name):
        # Arrange
        generator = ExperimentFactory.create_generator(name, deps)

        # Act
        result = generator.generate()

        # Assert
        assert result.name == name
        assert result.passed, result.summary
        assert all(len(t) > 0 for t in result.tables.values())

    def test_interpolation(self, deps, monkeypatch):
        from src.reports.generators.experiment_report import InterpolationExperiment

        monkeypatch.setattr(InterpolationExperiment, "cases", 100)
        result = ExperimentFactory.create_generator("interpolation", deps).generate()
        assert result.passed
        assert result.summary["violations"] == 0
        assert 0 < result.summary["cases"] <= 100
