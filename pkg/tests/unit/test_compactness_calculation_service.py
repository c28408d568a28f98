"""
Tests for certificates, equi-integrability, witnesses and exponent inequalities.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.models.entities import FrechetCertificate, FunctionFamily, FunctionOnSpace, GeneratorSpec, Refusal
from src.core.models.exceptions import BadExponents, InvalidParams, MissingGradient, NoSeparatedPair
from src.core.services.calculations.compactness_calculation_service import (
    CompactnessCalculationService,
    l0_distance,
)
from src.core.services.calculations.regularization_service import RegularizationService
from src.core.services.calculations.space_calculation_service import SpaceCalculationService


def random_space(rng, n, symmetric=True):
    """Quasi-metric with off-diagonal distances in [0.1, 3) and weights in [0.1, 1)"""
    D = rng.uniform(0.1, 3.0, (n, n))
    if symmetric:
        D = np.triu(D, 1) + np.triu(D, 1).T
    np.fill_diagonal(D, 0.0)
    return SpaceCalculationService().validate_space(D, rng.uniform(0.1, 1.0, n))


def pair_gradient(space, u, alpha):
    """Smallest g with |u(x) - u(y)| <= min(d(x, y), d(y, x))^alpha g(x) for every pair"""
    d = np.minimum(space.dist, space.dist.T)
    np.fill_diagonal(d, np.inf)
    return (np.abs(u[:, None] - u[None, :]) / d ** alpha).max(axis=1)


def constant_family(space, levels, with_gradients):
    members = [FunctionOnSpace(np.full(space.n, v), space) for v in levels]
    gradients = [np.zeros(space.n) for _ in levels] if with_gradients else None
    return FunctionFamily(members=members, gradients=gradients, alpha=1.0 if with_gradients else None)


class TestFrechetCertificate:
    """Total-boundedness certificates of finite families"""

    @pytest.mark.parametrize("with_gradients,route", [(True, "gradient"), (False, "oscillation")])
    def test_constant_family(self, deps, grid, with_gradients, route):
        # Arrange
        space = grid(8)
        family = constant_family(space, [0.2, 0.7, 1.3], with_gradients)

        # Act
        outcome = deps.compactness.frechet_certify(family, epsilon=0.5)

        # Assert
        assert isinstance(outcome, FrechetCertificate)
        assert outcome.route == route
        assert outcome.max_l0_distance < 0.5
        assert outcome.delta == pytest.approx(0.5 / 3)
        assert len(outcome.derived_net) <= outcome.net_size_bound

    def test_refusal_names_obstruction(self, deps, grid):
        space = grid(8)
        rng = np.random.default_rng(0)
        family = FunctionFamily(members=[FunctionOnSpace(rng.uniform(-50, 50, 8), space) for _ in range(3)])
        outcome = deps.compactness.frechet_certify(family, epsilon=0.01, cell_budget=1)
        assert isinstance(outcome, Refusal)
        assert outcome.cells_tried >= 1

    def test_exceptional_sets_need_gradients(self, deps, grid):
        space = grid(4)
        with pytest.raises(MissingGradient):
            deps.compactness.sobolev_exceptional_sets(constant_family(space, [1.0], False), 0.1)

    def test_exceptional_set_conditions(self, deps, grid):
        space = grid(8)
        u = np.linspace(0.0, 1.0, 8)
        g = np.full(8, 1.0 / (space.dist[0, 1]))
        family = FunctionFamily([FunctionOnSpace(u, space)], gradients=[g], alpha=1.0)
        data = deps.compactness.sobolev_exceptional_sets(family, epsilon=0.2)[0]
        assert all(data.conditions.values())
        assert data.measure < 0.2

    def test_invalid_epsilon(self, deps, grid):
        with pytest.raises(InvalidParams):
            deps.compactness.frechet_certify(constant_family(grid(4), [1.0], False), epsilon=0.0)

    @given(st.integers(min_value=0, max_value=100_000))
    @settings(max_examples=50, deadline=None, derandomize=True)
    def test_derived_net_covers_random_families(self, seed):
        # Arrange
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 11))
        space = random_space(rng, n, symmetric=bool(rng.integers(2)))
        members = [FunctionOnSpace(rng.normal(scale=3.0, size=n), space) for _ in range(int(rng.integers(1, 7)))]
        epsilon = float(rng.uniform(0.05, 1.0))

        # Act
        outcome = CompactnessCalculationService().frechet_certify(FunctionFamily(members), epsilon)

        # Assert
        assert isinstance(outcome, FrechetCertificate)
        assert outcome.max_l0_distance < epsilon
        assert len(outcome.derived_net) <= outcome.net_size_bound
        for u in members:
            assert min(l0_distance(u.values, s, space.mu) for s in outcome.derived_net) < epsilon


class TestEquiIntegrability:
    """Modulus of equi-integrability"""

    def test_constant_family(self, deps, grid):
        space = grid(10)
        curve = deps.compactness.equi_integrability_modulus(constant_family(space, [1.0], False), 1.0, [1e-4, 0.25])
        assert curve.verdict == "equi-integrable at tol"
        assert curve.fractional[0] == pytest.approx(1e-4)
        assert curve.greedy[0] == 0.0
        # two atoms of mass 0.1 fit into 0.25
        assert curve.greedy[1] == pytest.approx(0.2)
        assert curve.fractional[1] == pytest.approx(0.25)

    def test_concentrating_atoms(self, deps, discrete):
        """Unit L^p mass on ever lighter atoms"""
        space = discrete(10)
        members = []
        for k in range(space.n):
            f = np.zeros(space.n)
            f[k] = space.mu[k] ** -0.5
            members.append(FunctionOnSpace(f, space))
        curve = deps.compactness.equi_integrability_modulus(FunctionFamily(members), 2.0, [0.01, 0.1])
        assert curve.verdict == "not equi-integrable"
        assert curve.greedy[0] == pytest.approx(1.0)

    def test_empty_family(self, deps):
        curve = deps.compactness.equi_integrability_modulus(FunctionFamily([]), 2.0, [0.1])
        assert curve.greedy.tolist() == [0.0]


class TestWitnesses:
    """Non-compactness witnesses"""

    def test_separated_bumps(self, deps, discrete):
        # Act
        witness = deps.compactness.separated_bump_witness(discrete(10), delta=0.4, alpha=1.0, p=2.0)

        # Assert
        assert witness.pairwise_lp_gap == pytest.approx(2.0, abs=1e-12)
        assert witness.details["disjoint_supports"]
        assert len(witness.functions) == 10
        assert witness.details["masses_below_Delta"]

    def test_no_separated_pair(self, deps, grid):
        with pytest.raises(NoSeparatedPair):
            deps.compactness.separated_bump_witness(grid(4), delta=5.0, alpha=1.0, p=2.0)

    def test_tail_bumps(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("dyadic_tail", {"K": 8}))
        radii = [2.0 ** k for k in range(6)]
        witness = deps.compactness.tail_bump_witness(line, 0, alpha=1.0, p=2.0, R_grid=radii)
        assert all(m == pytest.approx(1.0, abs=1e-9) for m in witness.details["unit_tail_masses"])
        assert witness.details["max_ratio"] <= 4.0 * deps.config.diagnostics.bound_tol
        assert witness.details["equi_integrability"] == "not equi-integrable"

    def test_tail_bumps_need_alpha_below_one_on_lines(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("dyadic_tail", {"K": 4}))
        with pytest.raises(InvalidParams):
            deps.compactness.tail_bump_witness(line, 0, alpha=1.5, p=2.0, R_grid=[1.0])


class TestAveragingInequality:
    """Both sides of the averaging inequality as exact sums"""

    @pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
    def test_holds_on_grid(self, deps, grid, r):
        space = grid(8)
        u = np.sin(3 * np.arange(8.0))
        d = np.minimum(space.dist, space.dist.T).astype(float)
        np.fill_diagonal(d, np.inf)
        g = (np.abs(u[:, None] - u[None, :]) / d).max(axis=1)
        chain = deps.regularization.chain_metric(space, 1.0)
        report = deps.compactness.key_inequality_check(space, u, g, [0, 2, 5], r, 1.0, 2.0, chain)
        assert report.holds
        assert report.details["D_size"] == 3

    @given(st.integers(min_value=0, max_value=1_000_000))
    @settings(max_examples=1000, deadline=None, derandomize=True)
    def test_holds_on_random_quasi_metrics(self, seed):
        # Arrange
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        space = random_space(rng, n, symmetric=bool(rng.integers(2)))
        alpha = float(rng.uniform(0.2, 1.5))
        p = float(rng.uniform(0.5, 4.0))
        u = rng.normal(size=n)
        g = pair_gradient(space, u, alpha) * rng.uniform(1.0, 1.5, n)
        D = np.flatnonzero(rng.random(n) < 0.6)
        r = float(rng.uniform(0.05, 4.0))
        nu = space.mu * rng.uniform(0.2, 1.0, n) if rng.integers(2) else None
        chain = RegularizationService().chain_metric(space, float(rng.uniform(0.3, 1.0)))

        # Act
        report = CompactnessCalculationService().key_inequality_check(space, u, g, D, r, alpha, p, chain, nu)

        # Assert
        assert report.holds, (seed, report.lhs, report.rhs)


class TestExponentInequalities:
    """Interpolation, Holder and measure change"""

    @given(st.integers(min_value=0, max_value=100_000))
    @settings(max_examples=80, deadline=None, derandomize=True)
    def test_interpolation_holds(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 10))
        mu = rng.uniform(0.05, 2.0, n)
        f = rng.normal(size=n)
        p, p_tilde, p_star = np.sort(rng.uniform(0.3, 6.0, 3))
        if not p < p_tilde < p_star:
            return
        report = CompactnessCalculationService().interpolation_check(f, p, p_star, p_tilde, mu)
        assert report.holds
        assert 0 < report.details["theta"] < 1

    def test_interpolation_equality_on_atoms(self):
        mu = np.array([0.3, 1.7, 0.9])
        atom = np.array([0.0, 1.0, 0.0])
        report = CompactnessCalculationService().interpolation_check(atom, 1.0, 4.0, 2.0, mu)
        assert report.lhs == pytest.approx(report.rhs, rel=1e-10)

    def test_interpolation_with_sup_norm(self):
        mu = np.array([0.5, 0.5])
        report = CompactnessCalculationService().interpolation_check(np.array([1.0, 3.0]), 1.0, math.inf, 2.0, mu)
        assert report.details["theta"] == pytest.approx(0.5)
        assert report.holds

    def test_bad_exponents(self):
        service = CompactnessCalculationService()
        with pytest.raises(BadExponents):
            service.interpolation_check(np.ones(2), 2.0, 1.0, 1.5, np.ones(2))
        with pytest.raises(BadExponents):
            service.holder_check(np.ones(2), 1.0, 2.0, np.ones(2))

    def test_holder(self):
        report = CompactnessCalculationService().holder_check(np.array([1.0, -2.0, 0.5]), 3.0, 1.5, np.array([0.2, 0.3, 0.5]))
        assert report.holds

    def test_two_measure(self, deps, grid):
        space = grid(5)
        u = np.array([0.0, 1.0, 0.3, 0.8, -0.2])
        nu = space.mu * np.array([0.5, 1.0, 2.0, 0.25, 1.5])
        reports = deps.compactness.two_measure_check(space, u, nu, C=2.0, alpha=1.0, p=2.0)
        assert [r.name for r in reports] == ["lp_measure_change", "seminorm_measure_change", "gradient_transfer"]
        assert all(r.holds for r in reports)

    def test_two_measure_rejects_heavy_nu(self, deps, grid):
        space = grid(3)
        with pytest.raises(InvalidParams):
            deps.compactness.two_measure_check(space, np.arange(3.0), 3 * space.mu, C=2.0, alpha=1.0, p=2.0)
        with pytest.raises(InvalidParams):
            deps.compactness.two_measure_check(space, np.arange(3.0), 0 * space.mu, C=2.0, alpha=1.0, p=2.0)


class TestEmbeddingConditions:
    def test_uniform_grid(self, deps, grid):
        result = deps.compactness.embedding_conditions(grid(8), 0.3, [0.25, 0.5], [0.05, 0.2])
        assert result["beta"] == pytest.approx(1.0)
        radii = [R for R, _ in result["tail_profile"]]
        assert radii == [0.25, 0.5]
        assert result["modulus"].deltas.tolist() == [0.05, 0.2]


class TestL0Distance:
    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=50, deadline=None, derandomize=True)
    def test_metric_properties(self, seed):
        rng = np.random.default_rng(seed)
        mu = rng.uniform(0.1, 1.0, 6)
        f, g, h = rng.normal(size=(3, 6))
        assert l0_distance(f, f, mu) == 0.0
        assert l0_distance(f, g, mu) == pytest.approx(l0_distance(g, f, mu))
        assert l0_distance(f, h, mu) <= l0_distance(f, g, mu) + l0_distance(g, h, mu) + 1e-12
        assert l0_distance(f, g, mu) < mu.sum()
