"""
Norm Calculation Service

Hajlasz-Sobolev, Triebel-Lizorkin and Besov (semi)norms of functions on
finite spaces as minimal-gradient programs.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.models.entities import (
    CertificateStatus,
    FiniteQMMSpace,
    FunctionOnSpace,
    GradientSequence,
    LevelConstraints,
    NormKind,
    NormProblem,
    NormResult,
    SolverDiagnostics,
)
from src.core.models.exceptions import InvalidParams
from src.core.services.calculations.gradient_solver import GradientProgram, GradientSolver

logger = logging.getLogger(__name__)


def lp_norm(values: np.ndarray, p: float, mu: np.ndarray) -> float:
    """(sum mu_i |u_i|^p)^(1/p); max |u_i| for p = inf"""
    values = np.abs(np.asarray(values, dtype=float))
    if p == math.inf:
        return float(values.max()) if values.size else 0.0
    if not p > 0:
        raise InvalidParams(f"p must be positive, got {p}")
    return float(np.sum(mu * values ** p) ** (1.0 / p))


def dyadic_level(d: np.ndarray) -> np.ndarray:
    """k with 2^(-k-1) <= d < 2^(-k)"""
    return -np.frexp(np.asarray(d, dtype=float))[1]


def combine_levels(minima: List[float], q: float) -> float:
    """l^q norm of the per-level minima"""
    if not minima:
        return 0.0
    arr = np.asarray(minima, dtype=float)
    if q == math.inf:
        return float(arr.max())
    return float(np.sum(arr ** q) ** (1.0 / q))


class NormCalculationService:
    """Minimal-gradient (semi)norms on finite spaces"""

    def __init__(self, solver: Optional[GradientSolver] = None, workers: int = 1):
        self.solver = solver or GradientSolver()
        self.workers = workers

    def check_problem(self, problem: NormProblem) -> None:
        if not problem.alpha > 0:
            raise InvalidParams(f"alpha must be positive, got {problem.alpha}")
        if not (problem.p > 0 and problem.p < math.inf):
            raise InvalidParams(f"p must lie in (0, inf), got {problem.p}")
        if not problem.q > 0:
            raise InvalidParams(f"q must lie in (0, inf], got {problem.q}")
        if problem.u.values.shape[0] != problem.space.n:
            raise InvalidParams("function and space sizes differ")

    def build_constraints(self, problem: NormProblem) -> List[LevelConstraints]:
        """
        Pair constraints c = |u_i - u_j| / d^alpha grouped by dyadic level.

        The Sobolev kind uses one collapsed level (None) and the smaller of
        d(i, j), d(j, i) per unordered pair. The level-binned kinds take each
        ordered pair at the level of its own distance; when both orders of a
        pair land on one level the larger bound is kept. Pairs with equal
        values carry no constraint.
        """
        space, u, alpha = problem.space, problem.u.values, problem.alpha
        n = space.n
        if problem.kind is NormKind.M_SOBOLEV:
            I, J = np.triu_indices(n, k=1)
            d = np.minimum(space.dist[I, J], space.dist[J, I])
            c = np.abs(u[I] - u[J]) / d ** alpha
            keep = c > 0
            if not np.any(keep):
                return []
            return [LevelConstraints(None, I[keep], J[keep], c[keep])]

        I, J = np.nonzero(~np.eye(n, dtype=bool))
        d = space.dist[I, J]
        c = np.abs(u[I] - u[J]) / d ** alpha
        keep = c > 0
        I, J, d, c = I[keep], J[keep], d[keep], c[keep]
        if c.size == 0:
            return []
        levels = dyadic_level(d)
        keys = np.stack([levels, np.minimum(I, J), np.maximum(I, J)], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        bound = np.zeros(uniq.shape[0])
        np.maximum.at(bound, inverse, c)

        out = []
        for level in np.unique(uniq[:, 0]):
            sel = uniq[:, 0] == level
            out.append(LevelConstraints(int(level), uniq[sel, 1], uniq[sel, 2], bound[sel]))
        return out

    def _program(
        self, constraints: List[LevelConstraints], mu: np.ndarray, p: float, q: float = 2.0
    ) -> GradientProgram:
        slot = np.concatenate([np.full(lc.size, k) for k, lc in enumerate(constraints)])
        return GradientProgram(
            mu=np.asarray(mu, dtype=float),
            slots=len(constraints),
            slot=slot.astype(int),
            i=np.concatenate([lc.i for lc in constraints]).astype(int),
            j=np.concatenate([lc.j for lc in constraints]).astype(int),
            c=np.concatenate([lc.c for lc in constraints]),
            p=p,
            q=q,
        )

    def _solve_level(
        self, lc: LevelConstraints, mu: np.ndarray, p: float
    ) -> Tuple[np.ndarray, float, SolverDiagnostics]:
        g, F, diag = self.solver.solve(self._program([lc], mu, p))
        return g[0], F, diag

    @staticmethod
    def _seminorm_diag(F: float, p: float, diag: SolverDiagnostics) -> SolverDiagnostics:
        """Objective-unit diagnostics converted to seminorm units"""
        upper = F ** (1.0 / p)
        lower = max(0.0, diag.lower_bound) ** (1.0 / p)
        return SolverDiagnostics(
            iterations=diag.iterations,
            residual=diag.residual,
            certified_gap=max(0.0, upper - lower),
            status=diag.status,
            method=diag.method,
            lower_bound=lower,
        )

    def _result(
        self,
        problem: NormProblem,
        seminorm: float,
        levels: Tuple[Optional[int], ...],
        g: np.ndarray,
        diag: SolverDiagnostics,
        level_minima: Optional[Dict[Optional[int], float]] = None,
    ) -> NormResult:
        full = seminorm + lp_norm(problem.u.values, problem.p, problem.space.mu)
        return NormResult(
            problem=problem,
            seminorm=seminorm,
            full_norm=full,
            optimal_g=GradientSequence(levels=levels, g=g),
            solver=diag,
            level_minima=level_minima or {},
        )

    def _trivial(self, problem: NormProblem, levels: Tuple[Optional[int], ...] = ()) -> NormResult:
        diag = SolverDiagnostics(0, 0.0, 0.0, CertificateStatus.CERTIFIED, "trivial")
        return self._result(problem, 0.0, levels, np.zeros((len(levels), problem.space.n)), diag)

    def min_gradient_sobolev(self, problem: NormProblem) -> NormResult:
        """
        M^{alpha,p} seminorm: min ||g||_p over g with g(i) + g(j) >= c_ij.

        Raises:
            SolverDiverged: duality gap not closed within the budget
        """
        self.check_problem(problem)
        sob = problem if problem.kind is NormKind.M_SOBOLEV else NormProblem(
            problem.alpha, problem.p, problem.q, NormKind.M_SOBOLEV, problem.space, problem.u
        )
        constraints = self.build_constraints(sob)
        if not constraints:
            return self._trivial(problem, (None,))
        g, F, diag = self._solve_level(constraints[0], problem.space.mu, problem.p)
        return self._result(
            problem, F ** (1.0 / problem.p), (None,), g[None, :], self._seminorm_diag(F, problem.p, diag)
        )

    def _per_level(
        self, problem: NormProblem, constraints: List[LevelConstraints]
    ) -> Tuple[np.ndarray, List[float], List[SolverDiagnostics]]:
        mu, p = problem.space.mu, problem.p
        if self.workers > 1 and len(constraints) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                runs = list(executor.map(lambda lc: self._solve_level(lc, mu, p), constraints))
        else:
            runs = [self._solve_level(lc, mu, p) for lc in constraints]
        g = np.vstack([r[0] for r in runs])
        return g, [r[1] for r in runs], [r[2] for r in runs]

    @staticmethod
    def _merge(diags: List[SolverDiagnostics], method: str) -> SolverDiagnostics:
        certified = all(d.status is CertificateStatus.CERTIFIED for d in diags)
        return SolverDiagnostics(
            iterations=sum(d.iterations for d in diags),
            residual=max(d.residual for d in diags),
            certified_gap=sum(d.certified_gap for d in diags),
            status=CertificateStatus.CERTIFIED if certified else CertificateStatus.UPPER_BOUND,
            method=method,
            lower_bound=sum(d.lower_bound for d in diags),
        )

    def min_gradient_TL(self, problem: NormProblem) -> NormResult:
        """
        M^alpha_{p,q} seminorm: min ||(sum_k g_k^q)^(1/q)||_p.

        q = inf goes through the Sobolev program with the optimal g repeated
        on every level; q = p splits into independent per-level programs.
        """
        self.check_problem(problem)
        constraints = self.build_constraints(problem)
        levels = tuple(lc.level for lc in constraints)
        if not constraints:
            return self._trivial(problem)
        p, q = problem.p, problem.q

        if q == math.inf:
            sob = self.min_gradient_sobolev(problem)
            g = np.repeat(sob.optimal_g.g, len(levels), axis=0)
            diag = replace(sob.solver, method=sob.solver.method + " (sup route)")
            return self._result(problem, sob.seminorm, levels, g, diag)

        if q == p:
            g, F, diags = self._per_level(problem, constraints)
            total = float(sum(F))
            diag = self._seminorm_diag(total, p, self._merge(diags, "per-level (q = p)"))
            minima = {lc.level: f ** (1.0 / p) for lc, f in zip(constraints, F)}
            return self._result(problem, total ** (1.0 / p), levels, g, diag, minima)

        g, F, diag = self.solver.solve(self._program(constraints, problem.space.mu, p, q))
        return self._result(problem, F ** (1.0 / p), levels, g, self._seminorm_diag(F, p, diag))

    def min_gradient_besov(self, problem: NormProblem) -> NormResult:
        """N^alpha_{p,q} seminorm: l^q norm of the per-level minima"""
        self.check_problem(problem)
        constraints = self.build_constraints(problem)
        if not constraints:
            return self._trivial(problem)
        p = problem.p
        g, F, diags = self._per_level(problem, constraints)
        minima = [f ** (1.0 / p) for f in F]
        seminorm = combine_levels(minima, problem.q)

        lower = combine_levels([max(0.0, d.lower_bound) ** (1.0 / p) for d in diags], problem.q)
        merged = self._merge(diags, "per-level")
        diag = SolverDiagnostics(
            iterations=merged.iterations,
            residual=merged.residual,
            certified_gap=max(0.0, seminorm - lower),
            status=merged.status,
            method=merged.method,
            lower_bound=lower,
        )
        levels = tuple(lc.level for lc in constraints)
        return self._result(problem, seminorm, levels, g, diag, dict(zip(levels, minima)))

    def compute(self, problem: NormProblem) -> NormResult:
        """Dispatch on problem.kind"""
        if problem.kind is NormKind.M_SOBOLEV:
            result = self.min_gradient_sobolev(problem)
        elif problem.kind is NormKind.M_TL:
            result = self.min_gradient_TL(problem)
        else:
            result = self.min_gradient_besov(problem)
        logger.info(
            "%s alpha=%g p=%g q=%g: seminorm %.10g (%s)",
            problem.kind.value, problem.alpha, problem.p, problem.q,
            result.seminorm, result.solver.status.value,
        )
        return result

    def norm(
        self,
        space: FiniteQMMSpace,
        u: np.ndarray,
        alpha: float,
        p: float,
        q: float = math.inf,
        kind: NormKind = NormKind.M_SOBOLEV,
    ) -> NormResult:
        """Convenience wrapper building the NormProblem"""
        return self.compute(NormProblem(alpha, p, q, kind, space, FunctionOnSpace(np.asarray(u, float), space)))
