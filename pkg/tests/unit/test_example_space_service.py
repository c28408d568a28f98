"""
Tests for the example space generators and their reference cards.
"""

import math
import re

import numpy as np
import pytest

from src.core.models.entities import DensityLine, GeneratorSpec
from src.core.models.exceptions import InvalidParams
from src.core.services.calculations.example_space_service import ExampleSpaceService
from src.core.strategies.space_generation_strategy import SpaceGenerationFactory


class TestGenerators:
    """Named generators"""

    @pytest.fixture
    def examples(self, deps):
        return deps.examples

    def test_supported_names(self):
        names = SpaceGenerationFactory.get_supported_names()
        for name in ("euclidean_grid", "snowflake_grid", "discrete_N", "exp_density", "gauss_density",
                     "inv_exp_density", "dyadic_tail", "infinite_comb", "ultrametric_cantor", "uniform_sample"):
            assert name in names

    def test_discrete_n(self, examples):
        # Act
        space, card = examples.generate(GeneratorSpec("discrete_N", {"n": 6}))

        # Assert
        assert space.n == 6
        assert space.C_d == 1.0
        np.testing.assert_array_equal(space.mu, 2.0 ** -np.arange(1, 7))
        provenances = [c.provenance for c in card.claims]
        assert "Example 3.8 (discrete_N.doubling)" in provenances
        assert card.generator.params == {"n": 6}

    @pytest.mark.parametrize("name", SpaceGenerationFactory.get_supported_names())
    def test_claims_cite_their_source(self, examples, name):
        """Every provenance opens with the numbered statement it comes from"""
        strategy = examples.strategy(name)
        claims = strategy.reference_claims(strategy.resolve({}))
        assert claims
        for claim in claims:
            assert re.match(r"^(Example|Prop|Def|Thm|Lemma|Section) \d+(\.\d+)* \(\w+\.\w+\)$", claim.provenance), claim

    def test_string_params_are_coerced(self, examples):
        params = ExampleSpaceService.parse_params("n=5, length=2")
        space, card = examples.generate(GeneratorSpec("euclidean_grid", params))
        assert space.n == 5
        assert card.generator.params == {"n": 5, "length": 2.0}
        assert space.diam == pytest.approx(1.6)

    def test_snowflake_constant(self, examples):
        space, card = examples.generate(GeneratorSpec("snowflake_grid", {"n": 10, "s": 0.5}))
        assert space.C_d == pytest.approx(2.0 ** 0.5, rel=1e-12)
        claim = next(c for c in card.claims if c.provenance == "Section 2.1 (snowflake.constant)")
        assert claim.value == pytest.approx(space.C_d, rel=1e-12)

    def test_ultrametric(self, examples):
        space, _ = examples.generate(GeneratorSpec("ultrametric_cantor", {"depth": 3}))
        assert space.n == 8
        assert space.C_d == 1.0

    def test_uniform_sample_is_seeded(self, examples):
        a, _ = examples.generate(GeneratorSpec("uniform_sample", {"n": 6, "seed": 3}))
        b, _ = examples.generate(GeneratorSpec("uniform_sample", {"n": 6, "seed": 3}))
        np.testing.assert_array_equal(a.dist, b.dist)

    def test_dyadic_tail_total_mass(self, examples):
        """Block k carries 2^-k and the last block the rest of the tail"""
        line, card = examples.generate(GeneratorSpec("dyadic_tail", {"K": 6}))
        assert isinstance(line, DensityLine)
        assert line.total_mass == pytest.approx(3.0, rel=1e-9)
        assert card.claims[0].value == 4.0

    def test_density_line_mass(self, examples):
        line, _ = examples.generate(GeneratorSpec("gauss_density", {"beta": 2.0, "T": 6.0, "resolution": 1000}))
        assert line.total_mass == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-5)

    def test_doubling_bounds(self, examples):
        assert examples.doubling_bound("exp_density", 2.0, 0.5, 1.0) == pytest.approx(4 * math.e)
        assert examples.doubling_bound("gauss_density", 2.0, 0.5, 1.0) == pytest.approx(4 * math.exp(1.5))
        assert examples.doubling_bound("inv_exp_density", 2.0, 0.5, 1.0) == pytest.approx(8 * math.exp(4.0))
        with pytest.raises(InvalidParams):
            examples.doubling_bound("discrete_N", 2.0, 0.5, 1.0)

    def test_truncation_builder(self, examples):
        build = examples.truncation_builder(GeneratorSpec("exp_density", {"beta": 0.5, "resolution": 50}))
        assert build(2.0).positions[-1] < 2.0 < build(4.0).positions[-1]
        with pytest.raises(InvalidParams):
            examples.truncation_builder(GeneratorSpec("discrete_N"))

    @pytest.mark.parametrize("spec", [
        GeneratorSpec("no_such_space"),
        GeneratorSpec("discrete_N", {"m": 3}),
        GeneratorSpec("discrete_N", {"n": 1}),
        GeneratorSpec("discrete_N", {"n": "many"}),
        GeneratorSpec("gauss_density", {"beta": -1}),
        GeneratorSpec("dyadic_tail", {"K": 2}),
    ])
    def test_invalid_specs(self, examples, spec):
        with pytest.raises(InvalidParams):
            examples.generate(spec)

    def test_parse_params_rejects_bare_words(self):
        with pytest.raises(InvalidParams):
            ExampleSpaceService.parse_params("n=3,beta")


class TestInfiniteComb:
    """Truncated comb and its integrability experiment"""

    def test_teeth_order(self):
        from src.core.strategies.space_generation_strategy import InfiniteCombStrategy

        teeth = InfiniteCombStrategy.teeth(2, 2)
        # prime codes 2, 3, 2*2, 2*3, 3*2, 3*3
        assert teeth == [(0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]

    def test_comb_is_a_metric(self, deps):
        space, _ = deps.examples.generate(GeneratorSpec("infinite_comb", {"depth": 2, "resolution": 4}))
        assert space.C_d_tilde == 1.0
        assert space.C_d <= 2.0 + 1e-12

    def test_j0_term_below_bound(self, deps):
        report = deps.examples.comb_integrability_experiment(depth=2, r=0.1)
        details = report.details
        assert details["j0_term"] <= details["j0_bound"] * deps.config.diagnostics.bound_tol
        assert details["j0_bound"] == pytest.approx(math.exp(1 / 16) / 0.1)
        assert len(report.truncation_curve) == 2

    def test_radius_range(self, deps):
        with pytest.raises(InvalidParams):
            deps.examples.comb_integrability_experiment(depth=1, r=0.3)
