"""
Tests for the certified minimal-gradient solver against the exhaustive oracle.
"""

import itertools

import numpy as np
import pytest

from src.core.config.app_config import SolverConfig
from src.core.models.entities import CertificateStatus
from src.core.services.calculations.gradient_solver import GradientProgram, GradientSolver, active_set_oracle


def single_level(mu, pairs, c, p) -> GradientProgram:
    i, j = zip(*pairs)
    return GradientProgram(
        mu=np.asarray(mu, dtype=float),
        slots=1,
        slot=np.zeros(len(pairs), dtype=int),
        i=np.asarray(i, dtype=int),
        j=np.asarray(j, dtype=int),
        c=np.asarray(c, dtype=float),
        p=p,
    )


class TestOracle:
    """Exhaustive active-set enumeration"""

    def test_two_points(self):
        F, g = active_set_oracle([0.5, 0.5], [0], [1], [1.0], 2.0)
        assert F == pytest.approx(0.25)
        np.testing.assert_allclose(g, [0.5, 0.5])

    def test_linear_vertex(self):
        # the lighter atom carries the whole constraint
        F, g = active_set_oracle([1.0, 3.0], [0], [1], [2.0], 1.0)
        assert F == pytest.approx(2.0)
        np.testing.assert_allclose(g, [2.0, 0.0])

    def test_limits(self):
        with pytest.raises(ValueError):
            active_set_oracle(np.ones(5), [0], [1], [1.0], 2.0)
        with pytest.raises(ValueError):
            active_set_oracle(np.ones(3), [0], [1], [1.0], 0.5)


class TestGradientSolver:
    """Solver output against the oracle on 100 instances with two to four points"""

    @pytest.fixture
    def solver(self):
        return GradientSolver.from_config(SolverConfig(), seed=0)

    @pytest.mark.parametrize("seed", range(25))
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_matches_oracle(self, solver, seed, p):
        # Arrange
        rng = np.random.default_rng(seed)
        n = 2 + seed % 3
        mu = rng.uniform(0.1, 1.0, n)
        pairs = list(itertools.combinations(range(n), 2))
        c = rng.uniform(0.0, 2.0, len(pairs))
        program = single_level(mu, pairs, c, p)

        # Act
        g, F, diag = solver.solve(program)
        expected, _ = active_set_oracle(mu, [a for a, _ in pairs], [b for _, b in pairs], c, p)

        # Assert
        assert diag.status is CertificateStatus.CERTIFIED
        assert F == pytest.approx(expected, rel=1e-5)
        assert program.violation(g) <= 1e-9 * max(1.0, c.max())
        assert diag.lower_bound <= F * (1 + 1e-9)

    def test_empty_program(self, solver):
        program = GradientProgram(
            mu=np.ones(3), slots=1, slot=np.zeros(0, dtype=int),
            i=np.zeros(0, dtype=int), j=np.zeros(0, dtype=int), c=np.zeros(0), p=2.0,
        )
        g, F, diag = solver.solve(program)
        assert F == 0.0
        assert not g.any()

    def test_dual_value_is_a_lower_bound(self):
        program = single_level([0.5, 0.5, 1.0], [(0, 1), (1, 2)], [1.0, 2.0], 2.0)
        rng = np.random.default_rng(1)
        feasible = program.repair(rng.uniform(0, 1, (1, 3)))
        for _ in range(20):
            lam = rng.uniform(0, 2, program.m)
            assert program.dual_value(lam) <= program.objective(feasible) + 1e-12

    def test_nonconvex_range_is_an_upper_bound(self, solver):
        program = single_level([1.0, 1.0, 1.0], [(0, 1), (1, 2)], [1.0, 1.0], 0.5)
        g, F, diag = solver.solve(program)
        assert diag.status is CertificateStatus.UPPER_BOUND
        assert program.violation(g) <= 1e-9
        # never worse than the greedy start, which pays 1 on two atoms
        assert F <= 2.0 + 1e-9
