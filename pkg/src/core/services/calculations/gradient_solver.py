"""
Gradient Solver

Minimal-gradient convex programs

    minimize   sum_i mu_i ||(g_1(i), ..., g_L(i))||_q^p
    subject to g_l(i) + g_l(j) >= c   for every constraint (l, i, j, c), g >= 0

solved through their concave dual with a duality-gap certificate, plus an
exhaustive active-set oracle for tiny single-level instances.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize, nnls

from src.core.config.app_config import SolverConfig
from src.core.models.entities import CertificateStatus, SolverDiagnostics
from src.core.models.exceptions import SolverDiverged

logger = logging.getLogger(__name__)

# Objective smoothing for the non-smooth and non-convex ranges
SMOOTHING = 1e-10


@dataclass(frozen=True, eq=False)
class GradientProgram:
    """Constraint data of one minimal-gradient program.

    ``slot`` indexes the level row of each constraint; with ``slots == 1``
    the exponent q plays no role.
    """
    mu: np.ndarray
    slots: int
    slot: np.ndarray
    i: np.ndarray
    j: np.ndarray
    c: np.ndarray
    p: float
    q: float = 2.0

    @property
    def n(self) -> int:
        return int(self.mu.shape[0])

    @property
    def m(self) -> int:
        return int(self.c.shape[0])

    @property
    def coupled(self) -> bool:
        return self.slots > 1

    def apply(self, g: np.ndarray) -> np.ndarray:
        """g_l(i) + g_l(j) per constraint"""
        return g[self.slot, self.i] + g[self.slot, self.j]

    def adjoint(self, lam: np.ndarray) -> np.ndarray:
        s = np.zeros((self.slots, self.n))
        np.add.at(s, (self.slot, self.i), lam)
        np.add.at(s, (self.slot, self.j), lam)
        return s

    def incidence(self) -> np.ndarray:
        """Dense m x (slots * n) constraint matrix"""
        A = np.zeros((self.m, self.slots * self.n))
        rows = np.arange(self.m)
        A[rows, self.slot * self.n + self.i] = 1.0
        A[rows, self.slot * self.n + self.j] = 1.0
        return A

    def degree(self) -> np.ndarray:
        return self.adjoint(np.ones(self.m))

    def block_norms(self, g: np.ndarray, eps: float = 0.0) -> np.ndarray:
        if not self.coupled:
            return g[0] + eps
        return np.sum((g + eps) ** self.q, axis=0) ** (1.0 / self.q)

    def objective(self, g: np.ndarray, eps: float = 0.0) -> float:
        return float(np.sum(self.mu * self.block_norms(g, eps) ** self.p))

    def objective_grad(self, g: np.ndarray, eps: float = 0.0) -> np.ndarray:
        if not self.coupled:
            with np.errstate(divide="ignore"):
                grad = self.p * self.mu * (g[0] + eps) ** (self.p - 1)
            return np.nan_to_num(grad[None, :], posinf=0.0)
        B = self.block_norms(g, eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = np.where(B > 0, self.p * self.mu * B ** (self.p - self.q), 0.0)
            inner = (g + eps) ** (self.q - 1)
        return np.nan_to_num(outer[None, :] * inner, posinf=0.0)

    def dual_norms(self, s: np.ndarray) -> np.ndarray:
        if not self.coupled:
            return s[0]
        if self.q == 1:
            return s.max(axis=0)
        q_dual = self.q / (self.q - 1)
        return np.sum(s ** q_dual, axis=0) ** (1.0 / q_dual)

    def dual_value(self, lam: np.ndarray) -> float:
        """Lower bound sum lam c - sum_i h_i*(s_i), valid for every lam >= 0"""
        lam = np.maximum(lam, 0.0)
        N = self.dual_norms(self.adjoint(lam))
        if self.p == 1:
            scale = max(1.0, float(np.max(N / self.mu)))
            return float(lam @ self.c) / scale
        p_dual = self.p / (self.p - 1)
        conj = (self.p - 1) * self.mu * (N / (self.p * self.mu)) ** p_dual
        return float(lam @ self.c - conj.sum())

    def dual_argmax(self, lam: np.ndarray) -> np.ndarray:
        """Maximizer g(lam) of the Lagrangian, defined for p > 1 and 1 < q < inf"""
        s = self.adjoint(lam)
        N = self.dual_norms(s)
        t = (N / (self.p * self.mu)) ** (1.0 / (self.p - 1))
        if not self.coupled:
            return t[None, :]
        q_dual = self.q / (self.q - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            direction = np.where(N > 0, (s / N) ** (q_dual - 1), 0.0)
        return t[None, :] * direction

    def repair(self, g: np.ndarray) -> np.ndarray:
        """Feasible point obtained from g by filling empty pairs and scaling up"""
        g = np.maximum(g, 0.0).copy()
        sums = self.apply(g)
        empty = sums <= 0
        if np.any(empty):
            np.maximum.at(g, (self.slot[empty], self.i[empty]), self.c[empty] / 2)
            np.maximum.at(g, (self.slot[empty], self.j[empty]), self.c[empty] / 2)
            sums = self.apply(g)
        t = max(1.0, float(np.max(self.c / sums)))
        return g * t

    def violation(self, g: np.ndarray) -> float:
        return float(max(0.0, np.max(self.c - self.apply(g)))) if self.m else 0.0

    def normalized(self) -> Tuple["GradientProgram", float, float]:
        """Copy with mu summing to 1 and max c equal to 1, plus the two scales"""
        mass = float(self.mu.sum())
        c_max = float(self.c.max())
        prog = GradientProgram(
            mu=self.mu / mass, slots=self.slots, slot=self.slot, i=self.i, j=self.j,
            c=self.c / c_max, p=self.p, q=self.q,
        )
        return prog, mass, c_max


@dataclass
class SolveOutcome:
    """Normalized solver output before rescaling"""
    g: np.ndarray
    F: float
    D: float
    iterations: int
    residual: float
    method: str
    certified: bool
    notes: List[str] = field(default_factory=list)


class GradientSolver:
    """Certified solver for minimal-gradient programs"""

    def __init__(
        self,
        tol: float = 1e-6,
        max_iter: int = 100_000,
        feas_tol: float = 1e-9,
        multistart: int = 8,
        seed: int = 0,
    ):
        self.tol = tol
        self.max_iter = max_iter
        self.feas_tol = feas_tol
        self.multistart = multistart
        self.seed = seed

    @classmethod
    def from_config(cls, config: SolverConfig, seed: int = 0) -> "GradientSolver":
        return cls(config.tol, config.max_iter, config.feas_tol, config.multistart, seed)

    def _closed(self, F: float, D: float) -> bool:
        return F - D <= self.tol * (1.0 + F)

    def solve(self, program: GradientProgram) -> Tuple[np.ndarray, float, SolverDiagnostics]:
        """
        Solve a program and certify the result.

        Returns:
            Tuple[g, objective, diagnostics] with g of shape (slots, n) and the
            objective sum mu ||g||^p in the original units

        Raises:
            SolverDiverged: a convex program whose duality gap stays open
        """
        if program.m == 0:
            diag = SolverDiagnostics(0, 0.0, 0.0, CertificateStatus.CERTIFIED, "trivial")
            return np.zeros((program.slots, program.n)), 0.0, diag

        prog, mass, c_max = program.normalized()
        convex = prog.p >= 1 and (not prog.coupled or prog.q >= 1)
        if not convex:
            out = self._multistart(prog)
        elif not prog.coupled and prog.p == 1:
            out = self._linear(prog)
        elif not prog.coupled:
            out = self._separable(prog)
        elif prog.p > 1 and 1 < prog.q < math.inf:
            out = self._block_dual(prog)
        else:
            out = self._coupled_fallback(prog)

        factor = mass * c_max ** prog.p
        status = CertificateStatus.CERTIFIED if out.certified else CertificateStatus.UPPER_BOUND
        diag = SolverDiagnostics(
            iterations=out.iterations,
            residual=out.residual * c_max,
            certified_gap=max(0.0, out.F - out.D) * factor,
            status=status,
            method=out.method,
            lower_bound=max(0.0, out.D) * factor,
        )
        logger.debug(
            "solved %s: F=%.10g gap=%.3e status=%s iterations=%d",
            out.method, out.F * factor, diag.certified_gap, status.value, out.iterations,
        )
        return out.g * c_max, out.F * factor, diag

    # ------------------------------------------------------------------
    # p = 1, one level: linear program
    # ------------------------------------------------------------------

    def _linear(self, prog: GradientProgram) -> SolveOutcome:
        A = prog.incidence()
        res = linprog(
            c=prog.mu, A_ub=-A, b_ub=-prog.c, bounds=[(0, None)] * prog.n, method="highs"
        )
        if res.status != 0:
            raise SolverDiverged(f"linear program failed: {res.message}", int(res.nit))
        g = np.maximum(res.x, 0.0)[None, :]
        lam = np.maximum(-res.ineqlin.marginals, 0.0)
        F = prog.objective(g)
        D = prog.dual_value(lam)

        # complementary slackness of the HiGHS pair
        slack = prog.apply(g) - prog.c
        s = prog.adjoint(lam)[0]
        cs = max(float(np.max(np.abs(lam * slack))), float(np.max(np.abs(g[0] * (prog.mu - s)))))
        certified = self._closed(F, D) and cs <= 1e-7
        if not certified:
            logger.warning("LP complementary slackness residual %.3e", cs)
        return SolveOutcome(g, F, D, int(res.nit), prog.violation(g), "highs-lp", certified)

    # ------------------------------------------------------------------
    # p > 1: dual ascent, primal polish, first-order refinement
    # ------------------------------------------------------------------

    def _dual_lbfgs(self, prog: GradientProgram) -> Tuple[np.ndarray, int]:
        def neg_dual(lam: np.ndarray) -> Tuple[float, np.ndarray]:
            g = prog.dual_argmax(lam)
            return -prog.dual_value(lam), -(prog.c - prog.apply(g))

        lam0 = np.full(prog.m, 1.0 / prog.m)
        res = minimize(
            neg_dual, lam0, jac=True, method="L-BFGS-B",
            bounds=[(0, None)] * prog.m,
            options={"maxiter": min(self.max_iter, 20_000), "ftol": 1e-16, "gtol": 1e-12, "maxcor": 30},
        )
        return np.maximum(res.x, 0.0), int(res.nit)

    def _multipliers(self, prog: GradientProgram, g: np.ndarray) -> np.ndarray:
        """Nonnegative least-squares multipliers on the tight constraints"""
        tight = np.flatnonzero(prog.apply(g) - prog.c <= 1e-6 * np.maximum(1.0, prog.c))
        lam = np.zeros(prog.m)
        if tight.size == 0:
            return lam
        K = prog.incidence()[tight].T
        grad = prog.objective_grad(g, SMOOTHING if prog.p == 1 else 0.0).ravel()
        try:
            sol, _ = nnls(K, grad, maxiter=50 * K.shape[1])
        except RuntimeError:
            return lam
        lam[tight] = sol
        return lam

    def _polish(self, prog: GradientProgram, g0: np.ndarray) -> Tuple[np.ndarray, int]:
        """SLSQP on the primal started at a feasible point"""
        A = prog.incidence()
        shape = (prog.slots, prog.n)
        eps = SMOOTHING if prog.p <= 1 or (prog.coupled and prog.q <= 1) else 0.0
        res = minimize(
            lambda x: prog.objective(x.reshape(shape), eps),
            g0.ravel(),
            jac=lambda x: prog.objective_grad(x.reshape(shape), eps).ravel(),
            method="SLSQP",
            bounds=[(0, None)] * g0.size,
            constraints=[{
                "type": "ineq",
                "fun": lambda x: A @ x - prog.c,
                "jac": lambda x: A,
            }],
            options={"maxiter": 2000, "ftol": 1e-15},
        )
        return prog.repair(res.x.reshape(shape)), int(res.nit)

    def _best(
        self, prog: GradientProgram, g_candidates: Sequence[np.ndarray], lam_candidates: Sequence[np.ndarray]
    ) -> Tuple[np.ndarray, float, np.ndarray, float]:
        scored = [(prog.objective(g), k) for k, g in enumerate(g_candidates)]
        F, k = min(scored)
        duals = [(prog.dual_value(lam), k) for k, lam in enumerate(lam_candidates)]
        D, kd = max(duals)
        return g_candidates[k], F, lam_candidates[kd], D

    def _separable(self, prog: GradientProgram) -> SolveOutcome:
        lam, iters = self._dual_lbfgs(prog)
        raw = prog.dual_argmax(lam)
        residual = prog.violation(raw)
        g = prog.repair(raw)
        F, D = prog.objective(g), prog.dual_value(lam)
        if self._closed(F, D):
            return SolveOutcome(g, F, D, iters, residual, "dual-lbfgsb", True)

        g2, it2 = self._polish(prog, g)
        lam2 = self._multipliers(prog, g2)
        g, F, lam, D = self._best(prog, [g, g2], [lam, lam2])
        iters += it2
        if self._closed(F, D):
            return SolveOutcome(g, F, D, iters, residual, "dual-lbfgsb+slsqp", True)

        logger.info("dual gap %.3e still open, refining with PDHG", F - D)
        return self._pdhg(prog, g, lam, iters, residual)

    def _pdhg(
        self, prog: GradientProgram, g: np.ndarray, lam: np.ndarray, iters: int, residual: float
    ) -> SolveOutcome:
        """Diagonally preconditioned primal-dual iterations"""
        tau = 1.0 / np.maximum(prog.degree()[0], 1.0)
        sigma = 0.5
        mu, p = prog.mu, prog.p
        best_g, best_F = g, prog.objective(g)
        best_D = prog.dual_value(lam)
        x = g[0].copy()

        for k in range(1, self.max_iter + 1):
            v = x + tau * prog.adjoint(lam)[0]
            x_new = self._prox(v, tau, mu, p)
            x_bar = 2 * x_new - x
            lam = np.maximum(0.0, lam + sigma * (prog.c - prog.apply(x_bar[None, :])))
            x = x_new
            if k % 100 == 0:
                cand = prog.repair(x[None, :])
                F = prog.objective(cand)
                if F < best_F:
                    best_g, best_F = cand, F
                best_D = max(best_D, prog.dual_value(lam))
                if self._closed(best_F, best_D):
                    return SolveOutcome(best_g, best_F, best_D, iters + k, residual, "pdhg", True)

        raise SolverDiverged(
            f"duality gap {best_F - best_D:.3e} above tolerance after {self.max_iter} iterations",
            iters + self.max_iter,
            best_F - best_D,
        )

    @staticmethod
    def _prox(v: np.ndarray, tau: np.ndarray, mu: np.ndarray, p: float) -> np.ndarray:
        """argmin_g>=0 mu g^p + (g - v)^2 / (2 tau), by bisection on tau p mu g^(p-1) + g = v"""
        lo = np.zeros_like(v)
        hi = np.maximum(v, 0.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            over = tau * p * mu * mid ** (p - 1) + mid > v
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
        return np.where(v > 0, 0.5 * (lo + hi), 0.0)

    def _block_dual(self, prog: GradientProgram) -> SolveOutcome:
        lam, iters = self._dual_lbfgs(prog)
        raw = prog.dual_argmax(lam)
        residual = prog.violation(raw)
        g = prog.repair(raw)
        F, D = prog.objective(g), prog.dual_value(lam)
        if self._closed(F, D):
            return SolveOutcome(g, F, D, iters, residual, "block-dual-lbfgsb", True)

        g2, it2 = self._polish(prog, g)
        lam2 = self._multipliers(prog, g2)
        g, F, lam, D = self._best(prog, [g, g2], [lam, lam2])
        if self._closed(F, D):
            return SolveOutcome(g, F, D, iters + it2, residual, "block-dual-lbfgsb+slsqp", True)
        raise SolverDiverged(
            f"coupled duality gap {F - D:.3e} above tolerance", iters + it2, F - D
        )

    def _coupled_fallback(self, prog: GradientProgram) -> SolveOutcome:
        """p = 1 or q = 1 across levels: primal SLSQP from the per-level optimum"""
        warm = np.zeros((prog.slots, prog.n))
        iters = 0
        for level in range(prog.slots):
            sel = prog.slot == level
            if not np.any(sel):
                continue
            sub = GradientProgram(
                mu=prog.mu, slots=1, slot=np.zeros(int(sel.sum()), dtype=int),
                i=prog.i[sel], j=prog.j[sel], c=prog.c[sel], p=max(prog.p, 1.0),
            )
            out = self._linear(sub) if sub.p == 1 else self._separable(sub)
            warm[level] = out.g[0]
            iters += out.iterations

        g, it2 = self._polish(prog, prog.repair(warm))
        lam = self._multipliers(prog, g)
        g, F, lam, D = self._best(prog, [prog.repair(warm), g], [np.zeros(prog.m), lam])
        certified = self._closed(F, D)
        if not certified:
            logger.warning(
                "coupled p=%g q=%g: gap %.3e open, result labelled UPPER_BOUND", prog.p, prog.q, F - D
            )
        return SolveOutcome(g, F, D, iters + it2, prog.violation(g), "coupled-slsqp", certified)

    # ------------------------------------------------------------------
    # p < 1 or q < 1: non-convex, upper bound only
    # ------------------------------------------------------------------

    def _greedy_start(self, prog: GradientProgram) -> np.ndarray:
        """Put each deficit on the lighter endpoint, largest bounds first"""
        g = np.zeros((prog.slots, prog.n))
        for e in np.argsort(-prog.c, kind="stable"):
            l, a, b = prog.slot[e], prog.i[e], prog.j[e]
            deficit = prog.c[e] - g[l, a] - g[l, b]
            if deficit > 0:
                target = a if prog.mu[a] <= prog.mu[b] else b
                g[l, target] += deficit
        return g

    def _multistart(self, prog: GradientProgram) -> SolveOutcome:
        rng = np.random.default_rng(self.seed)
        starts = [self._greedy_start(prog), prog.repair(np.zeros((prog.slots, prog.n)))]
        starts += [prog.repair(rng.random((prog.slots, prog.n))) for _ in range(self.multistart)]

        best_g, best_F, iters = None, math.inf, 0
        for g0 in starts:
            g, it = self._polish(prog, g0)
            iters += it
            for cand in (g, g0):
                F = prog.objective(cand)
                if F < best_F:
                    best_g, best_F = cand, F
        logger.info("non-convex exponents p=%g q=%g: upper bound from %d starts", prog.p, prog.q, len(starts))
        return SolveOutcome(best_g, best_F, 0.0, iters, prog.violation(best_g), "multistart-slsqp", False)


# ----------------------------------------------------------------------
# exhaustive oracle
# ----------------------------------------------------------------------

ORACLE_MAX_POINTS = 4


def _minimize_on_interval(mu: np.ndarray, a: np.ndarray, b: np.ndarray, p: float, lo: float, hi: float) -> float:
    """argmin over t in [lo, hi] of sum mu (a + b t)^p, convex in t"""
    if p == 2:
        t = -float(np.sum(mu * b * a)) / float(np.sum(mu))
        return min(max(t, lo), hi)

    def slope(t: float) -> float:
        return float(np.sum(p * mu * b * np.maximum(a + b * t, 0.0) ** (p - 1)))

    if slope(lo) >= 0:
        return lo
    if slope(hi) <= 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _component_candidate(
    mu: np.ndarray, edges: List[Tuple[int, int, float]], n: int, p: float
) -> Optional[np.ndarray]:
    """Minimizer of sum mu g^p with the given constraints tight and g = 0 off them"""
    g = np.zeros(n)
    adj = {v: [] for v in range(n)}
    for a, b, c in edges:
        adj[a].append((b, c))
        adj[b].append((a, c))
    seen = np.zeros(n, dtype=bool)
    for root in range(n):
        if seen[root] or not adj[root]:
            continue
        # g_v = off_v + sign_v * t along a spanning tree
        off = {root: 0.0}
        sign = {root: 1.0}
        stack = [root]
        seen[root] = True
        fixed_t: Optional[float] = None
        while stack:
            v = stack.pop()
            for w, c in adj[v]:
                if w not in off:
                    off[w] = c - off[v]
                    sign[w] = -sign[v]
                    seen[w] = True
                    stack.append(w)
                    continue
                s = sign[v] + sign[w]
                rest = c - off[v] - off[w]
                if s == 0:
                    if abs(rest) > 1e-12 * max(1.0, c):
                        return None
                else:
                    t = rest / s
                    if fixed_t is not None and abs(t - fixed_t) > 1e-12 * max(1.0, abs(t)):
                        return None
                    fixed_t = t
        nodes = np.array(sorted(off))
        a = np.array([off[v] for v in nodes])
        b = np.array([sign[v] for v in nodes])
        lo = float(np.max(np.where(b > 0, -a, -np.inf)))
        hi = float(np.min(np.where(b < 0, a, np.inf)))
        if fixed_t is not None:
            t = fixed_t
            if t < lo - 1e-12 or t > hi + 1e-12:
                return None
        else:
            if lo > hi:
                return None
            t = _minimize_on_interval(mu[nodes], a, b, p, lo, hi)
        g[nodes] = np.maximum(a + b * t, 0.0)
    return g


def active_set_oracle(
    mu: Sequence[float],
    i: Sequence[int],
    j: Sequence[int],
    c: Sequence[float],
    p: float,
) -> Tuple[float, np.ndarray]:
    """
    Exact min of sum mu g^p subject to g_i + g_j >= c, g >= 0, by enumeration.

    For p > 1 every subset of constraints is tried as the active set; the
    points it does not touch are set to 0 and each connected component is
    solved along its one free parameter. For p = 1 the vertices of the
    feasible polyhedron are enumerated.

    Raises:
        ValueError: more than four points or p < 1
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[0]
    if n > ORACLE_MAX_POINTS:
        raise ValueError(f"oracle is limited to {ORACLE_MAX_POINTS} points, got {n}")
    if p < 1:
        raise ValueError("oracle needs p >= 1")
    ii, jj, cc = np.asarray(i, int), np.asarray(j, int), np.asarray(c, float)
    if cc.size == 0:
        return 0.0, np.zeros(n)

    def feasible(g: np.ndarray) -> bool:
        return bool(np.all(g >= -1e-12) and np.all(g[ii] + g[jj] >= cc - 1e-9 * np.maximum(1.0, cc)))

    best_F, best_g = math.inf, np.zeros(n)
    if p == 1:
        rows = np.vstack([np.eye(n)[ii] + np.eye(n)[jj], np.eye(n)])
        rhs = np.concatenate([cc, np.zeros(n)])
        for subset in itertools.combinations(range(rows.shape[0]), n):
            M = rows[list(subset)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            g = np.linalg.solve(M, rhs[list(subset)])
            if feasible(g):
                F = float(mu @ g)
                if F < best_F:
                    best_F, best_g = F, np.maximum(g, 0.0)
        return best_F, best_g

    edges = list(zip(ii.tolist(), jj.tolist(), cc.tolist()))
    for k in range(1, len(edges) + 1):
        for subset in itertools.combinations(edges, k):
            g = _component_candidate(mu, list(subset), n, p)
            if g is not None and feasible(g):
                F = float(np.sum(mu * g ** p))
                if F < best_F:
                    best_F, best_g = F, g
    return best_F, best_g
