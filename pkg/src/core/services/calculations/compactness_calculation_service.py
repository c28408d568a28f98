"""
Compactness Calculation Service

Finite certificates and witnesses around compactness of function families:
convergence-in-measure distance, Frechet-type total boundedness
certificates, equi-integrability moduli, the averaging inequality behind
the L^p embeddings and the separated/tail bump sequences.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.models.entities import (
    ChainMetricResult,
    DensityLine,
    ExceptionalSetData,
    FiniteQMMSpace,
    FrechetCertificate,
    FunctionFamily,
    FunctionOnSpace,
    GradientSequence,
    InequalityReport,
    ModulusCurve,
    NormKind,
    QuasiMetricMeasureSpace,
    Refusal,
    WitnessSequence,
)
from src.core.models.exceptions import (
    BadExponents,
    EmptyTail,
    InfeasibleGradient,
    InvalidParams,
    MissingGradient,
    NoSeparatedPair,
)
from src.core.services.calculations.geometry_calculation_service import GeometryCalculationService
from src.core.services.calculations.gradient_construction_service import GradientConstructionService
from src.core.services.calculations.norm_calculation_service import NormCalculationService, lp_norm
from src.core.services.calculations.regularization_service import RegularizationService

logger = logging.getLogger(__name__)


def l0_distance(f: np.ndarray, g: np.ndarray, mu: np.ndarray) -> float:
    """Integral of |f - g| / (1 + |f - g|)"""
    diff = np.abs(np.asarray(f, dtype=float) - np.asarray(g, dtype=float))
    return float(np.sum(mu * diff / (1.0 + diff)))


def _largest_window(values: np.ndarray, mass: np.ndarray, width: float) -> np.ndarray:
    """Mask of a max-mass subset whose values spread less than width"""
    order = np.argsort(values, kind="stable")
    v, m = values[order], mass[order]
    cum = np.concatenate(([0.0], np.cumsum(m)))
    # window [a, b] is admissible when v[b] - v[a] < width
    ends = np.searchsorted(v, v + width, side="left")
    gains = cum[ends] - cum[np.arange(v.size)]
    a = int(np.argmax(gains))
    keep = np.zeros(values.size, dtype=bool)
    keep[order[a:ends[a]]] = True
    return keep


class CompactnessCalculationService:
    """Certificates, moduli and witnesses for function families"""

    def __init__(
        self,
        geometry: Optional[GeometryCalculationService] = None,
        regularization: Optional[RegularizationService] = None,
        norms: Optional[NormCalculationService] = None,
        constructions: Optional[GradientConstructionService] = None,
        workers: int = 1,
    ):
        self.geometry = geometry or GeometryCalculationService(workers)
        self.regularization = regularization or RegularizationService(workers=workers)
        self.norms = norms or NormCalculationService(workers=workers)
        self.constructions = constructions or GradientConstructionService(self.norms, self.regularization)
        self.workers = workers

    def _map(self, fn: Callable, items: Sequence) -> List:
        if self.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(fn, items))
        return [fn(x) for x in items]

    # ------------------------------------------------------------------
    # exceptional sets and Frechet certificates
    # ------------------------------------------------------------------

    def _family_bound(self, family: FunctionFamily, p: float) -> float:
        mu = family.space.weights
        if family.norm_bound is not None:
            return float(family.norm_bound)
        sizes = [lp_norm(u.values, p, mu) for u in family.members]
        sizes += [lp_norm(g, p, mu) for g in family.gradients or []]
        return max(sizes) if sizes else 0.0

    def sobolev_exceptional_sets(
        self,
        family: FunctionFamily,
        epsilon: float,
        eta: Optional[float] = None,
        p: float = 2.0,
    ) -> List[ExceptionalSetData]:
        """
        E(u) = {max(|u|, g) > lam} with lam = M 2^(2 + 1/p) / eta^(1/p).

        M bounds ||u||_p and ||g||_p over the family. Off E(u) the function
        is bounded by lam and oscillates by less than epsilon across any
        pair closer than delta = (epsilon / (2 lam))^(1/alpha); all three
        conditions are checked by enumeration.

        Raises:
            MissingGradient: a member has no gradient or alpha is unset
        """
        if not family.gradients or len(family.gradients) != len(family.members) or family.alpha is None:
            raise MissingGradient("every member needs an alpha-gradient")
        eta = epsilon if eta is None else eta
        space = family.space
        mu = space.weights
        M = self._family_bound(family, p)
        lam = M * 2.0 ** (2 + 1.0 / p) / eta ** (1.0 / p) if M > 0 else 0.0
        delta = (epsilon / (2 * lam)) ** (1.0 / family.alpha) if lam > 0 else math.inf

        def one(k: int) -> ExceptionalSetData:
            u = family.members[k].values
            g = np.asarray(family.gradients[k], dtype=float)
            if not self.constructions.check_feasible(space, u, GradientSequence((None,), g[None, :]), family.alpha):
                raise InfeasibleGradient(f"member {k}: gradient is not an alpha-gradient")
            bad = np.maximum(np.abs(u), g) > lam
            good = np.flatnonzero(~bad)
            close = space.dist[np.ix_(good, good)] < delta
            osc = np.abs(u[good][:, None] - u[good][None, :])
            conditions = {
                "measure_below_eta": bool(mu[bad].sum() < eta),
                "bounded_off_E": bool(np.all(np.abs(u[good]) <= lam)),
                "oscillation_below_epsilon": bool(np.all(osc[close] < epsilon)),
            }
            return ExceptionalSetData(
                E=np.flatnonzero(bad), lam=lam, delta=delta, eta=eta,
                measure=float(mu[bad].sum()), conditions=conditions,
            )

        return self._map(one, list(range(len(family.members))))

    def _cells(self, rho_space: FiniteQMMSpace, radius: float) -> List[np.ndarray]:
        """Assign every point to the first greedy rho-center closer than radius"""
        centers = self.geometry.greedy_separated(rho_space, radius).centers
        owner = np.full(rho_space.n, -1)
        for k, c in enumerate(centers):
            free = (owner < 0) & (rho_space.dist[c] < radius)
            owner[free] = k
        return [np.flatnonzero(owner == k) for k in range(len(centers)) if np.any(owner == k)]

    def _step_functions(
        self,
        family: FunctionFamily,
        cells: List[np.ndarray],
        exceptional: List[np.ndarray],
        delta: float,
    ) -> List[np.ndarray]:
        """sum over cells of delta floor(u(x_i) / delta) chi_{X_i}, x_i a cell point off E(u)"""
        n = family.space.n
        out = []
        for u, E in zip(family.members, exceptional):
            off = np.ones(n, dtype=bool)
            off[E] = False
            step = np.zeros(n)
            for cell in cells:
                reps = cell[off[cell]]
                if reps.size:
                    step[cell] = delta * math.floor(u.values[reps[0]] / delta)
            out.append(step)
        return out

    def frechet_certify(
        self,
        family: FunctionFamily,
        epsilon: float,
        cell_budget: int = 64,
        p: float = 2.0,
        beta: Optional[float] = None,
    ) -> Union[FrechetCertificate, Refusal]:
        """
        Total boundedness certificate of a finite family in measure.

        With delta = epsilon / (1 + 2 mu(X)) a partition into cells and sets
        E(u) of mass < delta are sought such that every u oscillates by less
        than delta on each cell minus E(u). Cells are balls of the
        regularized quasi-metric around a greedy net. Members carrying
        gradients get E(u) from sobolev_exceptional_sets; otherwise the
        partition is refined from diam down and E(u) is, per cell, the
        complement of the heaviest window of values narrower than delta.

        Returns:
            FrechetCertificate with the derived step-function net, verified
            member by member in d_L0; or a Refusal naming the obstruction
        """
        if not epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {epsilon}")
        space = family.space
        if not isinstance(space, FiniteQMMSpace):
            raise InvalidParams("certificates need a finite space")
        mu = space.mu
        delta = epsilon / (1 + 2 * space.total_mass)

        if beta is None:
            beta = 1.0 if space.C_d <= 1 else min(1.0, 1.0 / math.log2(space.C_d))
        chain = self.regularization.chain_metric(space, beta)
        rho_space = self.regularization.rho_space(space, chain)

        if family.gradients:
            return self._certify_gradients(family, epsilon, delta, cell_budget, p, chain, rho_space)

        radius = float(rho_space.diam)
        tried = 0
        last: List[np.ndarray] = []
        worst: Tuple[float, int, int] = (0.0, -1, -1)
        while True:
            cells = self._cells(rho_space, radius)
            tried = len(cells)
            if tried > cell_budget:
                break
            exceptional = []
            worst = (0.0, -1, -1)
            last = cells
            for k, u in enumerate(family.members):
                E = np.zeros(space.n, dtype=bool)
                for ci, cell in enumerate(cells):
                    keep = _largest_window(u.values[cell], mu[cell], delta)
                    E[cell[~keep]] = True
                    lost = float(mu[cell[~keep]].sum())
                    if lost > worst[0]:
                        worst = (lost, k, ci)
                exceptional.append(np.flatnonzero(E))
            if all(mu[E].sum() < delta for E in exceptional):
                lam = max(
                    (float(np.max(np.abs(np.delete(u.values, E)), initial=0.0))
                     for u, E in zip(family.members, exceptional)),
                    default=0.0,
                )
                cert = self._assemble(family, epsilon, delta, lam, cells, exceptional, "oscillation")
                if isinstance(cert, FrechetCertificate):
                    return cert
            if radius < rho_space.min_positive_distance:
                break
            radius /= 2

        lost, member, ci = worst
        if member < 0:
            return Refusal(epsilon, "cell budget exceeded before any partition was tried", cells_tried=tried)
        cell = last[ci]
        vals = family.members[member].values[cell]
        pair = (int(cell[int(np.argmin(vals))]), int(cell[int(np.argmax(vals))]))
        logger.info("refusal at epsilon=%g after %d cells", epsilon, tried)
        return Refusal(
            epsilon=epsilon,
            reason=f"oscillation of member {member} cannot be confined within {cell_budget} cells",
            cell=ci,
            member=member,
            pair=pair,
            oscillation=float(vals.max() - vals.min()),
            cells_tried=tried,
        )

    def _certify_gradients(
        self,
        family: FunctionFamily,
        epsilon: float,
        delta: float,
        cell_budget: int,
        p: float,
        chain: ChainMetricResult,
        rho_space: FiniteQMMSpace,
    ) -> Union[FrechetCertificate, Refusal]:
        sets = self.sobolev_exceptional_sets(family, delta, delta, p)
        lam, reach = sets[0].lam, sets[0].delta
        # x, y in one cell: d(x, y) <= kappa rho(x, y) < kappa C_rho radius <= reach
        radius = min(reach / (chain.kappa * rho_space.C_d), 2 * float(rho_space.diam))
        cells = self._cells(rho_space, radius)
        if len(cells) > cell_budget:
            return Refusal(
                epsilon, f"gradient route needs {len(cells)} cells, budget {cell_budget}",
                cells_tried=len(cells),
            )
        for k, data in enumerate(sets):
            if not all(data.conditions.values()):
                failed = [name for name, ok in data.conditions.items() if not ok]
                return Refusal(epsilon, f"exceptional set conditions failed: {failed}", member=k)
        return self._assemble(family, epsilon, delta, lam, cells, [s.E for s in sets], "gradient")

    def _assemble(
        self,
        family: FunctionFamily,
        epsilon: float,
        delta: float,
        lam: float,
        cells: List[np.ndarray],
        exceptional: List[np.ndarray],
        route: str,
    ) -> Union[FrechetCertificate, Refusal]:
        mu = family.space.weights
        steps = self._step_functions(family, cells, exceptional, delta)
        distances = [l0_distance(u.values, s, mu) for u, s in zip(family.members, steps)]
        M = int(math.ceil(lam / delta)) if lam > 0 else 0
        net = list({s.tobytes(): s for s in steps}.values())
        levels_ok = all(np.all(np.abs(np.round(s / delta)) <= M) for s in steps)
        cert = FrechetCertificate(
            epsilon=epsilon,
            delta=delta,
            lam=lam,
            partition=cells,
            exceptional_sets=exceptional,
            derived_net=net,
            M=M,
            max_l0_distance=max(distances, default=0.0),
            route=route,
        )
        if cert.max_l0_distance >= epsilon or not levels_ok or len(net) > cert.net_size_bound:
            return Refusal(epsilon, "derived net failed verification", cells_tried=len(cells))
        logger.info(
            "certificate (%s): %d cells, M=%d, max d_L0 %.3e < %g", route, len(cells), M,
            cert.max_l0_distance, epsilon,
        )
        return cert

    # ------------------------------------------------------------------
    # equi-integrability
    # ------------------------------------------------------------------

    def equi_integrability_modulus(
        self,
        family: FunctionFamily,
        p: float,
        delta_grid: Iterable[float],
        tol: float = 1e-3,
    ) -> ModulusCurve:
        """
        sup over A with nu(A) <= delta and over members of the integral of |f|^p over A.

        greedy: atoms by decreasing |f|^p, skipped when they do not fit;
        fractional: the knapsack relaxation, an upper bound. The verdict reads
        the fractional bound at the smallest delta.
        """
        if not p > 0:
            raise InvalidParams(f"p must be positive, got {p}")
        deltas = np.sort(np.asarray(list(delta_grid), dtype=float))
        greedy = np.zeros(deltas.size)
        fractional = np.zeros(deltas.size)
        if not family.members:
            return ModulusCurve(deltas, greedy, fractional, "equi-integrable at tol")
        nu = family.nu if family.nu is not None else family.space.weights

        for u in family.members:
            density = np.abs(u.values) ** p
            order = np.argsort(-density, kind="stable")
            w, v = nu[order], density[order] * nu[order]
            cum_w = np.cumsum(w)
            cum_v = np.cumsum(v)
            for t, d in enumerate(deltas):
                # fractional knapsack
                full = int(np.searchsorted(cum_w, d, side="right"))
                frac = cum_v[full - 1] if full > 0 else 0.0
                if full < w.size:
                    used = cum_w[full - 1] if full > 0 else 0.0
                    frac += (d - used) * density[order[full]]
                fractional[t] = max(fractional[t], frac)
                # greedy skip-and-continue
                room, total = d, 0.0
                for wi, vi in zip(w, v):
                    if vi <= 0:
                        break
                    if wi <= room:
                        room -= wi
                        total += vi
                greedy[t] = max(greedy[t], total)

        verdict = "equi-integrable at tol" if fractional[0] < tol else "not equi-integrable"
        return ModulusCurve(deltas, greedy, fractional, verdict)

    # ------------------------------------------------------------------
    # averaging inequality
    # ------------------------------------------------------------------

    def key_inequality_check(
        self,
        space: FiniteQMMSpace,
        u: np.ndarray,
        g: np.ndarray,
        D: Iterable[int],
        r: float,
        alpha: float,
        p: float,
        chain: ChainMetricResult,
        nu: Optional[np.ndarray] = None,
    ) -> InequalityReport:
        """
        Integral over D of |u|^p d nu against
        4^p k^(ap) r^(ap) ||g||^p_{L^p(nu)}
          + sum_y mu_y (4^p k^(ap) r^(ap) g_y^p + 2^p |u_y|^p) sum_{x in D, rho(x,y) < r} nu_x / mu(B_rho(x, r)),
        k = chain.kappa. Both sides are exact finite sums.

        Raises:
            InfeasibleGradient: g is not an alpha-gradient of u
        """
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        nu = space.mu if nu is None else np.asarray(nu, dtype=float)
        if not self.constructions.check_feasible(space, u, GradientSequence((None,), g[None, :]), alpha):
            raise InfeasibleGradient("g is not an alpha-gradient of u")
        idx = np.asarray(sorted(set(int(i) for i in D)), dtype=int)

        lhs = float(np.sum(nu[idx] * np.abs(u[idx]) ** p)) if idx.size else 0.0
        scale = 4.0 ** p * chain.kappa ** (alpha * p) * r ** (alpha * p)
        inside = chain.rho < r
        ball = inside @ space.mu
        kernel = np.zeros(space.n)
        if idx.size:
            # kernel[y] = sum over x in D with rho(x, y) < r of nu_x / mu(B_rho(x, r))
            kernel = (nu[idx] / ball[idx]) @ inside[idx]
        rhs = scale * float(np.sum(nu * g ** p)) + float(
            np.sum(space.mu * (scale * g ** p + 2.0 ** p * np.abs(u) ** p) * kernel)
        )
        return InequalityReport(
            name="averaging_inequality",
            lhs=lhs,
            rhs=rhs,
            holds=lhs <= rhs * (1 + 1e-12),
            details={"kappa": chain.kappa, "r": r, "D_size": int(idx.size)},
        )

    # ------------------------------------------------------------------
    # witnesses
    # ------------------------------------------------------------------

    @staticmethod
    def _pair_gradient(space: FiniteQMMSpace, phi: np.ndarray, alpha: float) -> np.ndarray:
        """g(x) = max_y |phi(x) - phi(y)| / min(d(x, y), d(y, x))^alpha on {phi > 0}, 0 elsewhere"""
        dmin = np.minimum(space.dist, space.dist.T)
        np.fill_diagonal(dmin, np.inf)
        g = (np.abs(phi[:, None] - phi[None, :]) / dmin ** alpha).max(axis=1)
        return np.where(phi > 0, g, 0.0)

    @staticmethod
    def _pairwise_gap(F: np.ndarray, mu: np.ndarray, p: float) -> float:
        m = F.shape[0]
        best = math.inf
        for k in range(m):
            diffs = np.sum(mu * np.abs(F[k + 1:] - F[k]) ** p, axis=1)
            if diffs.size:
                best = min(best, float(diffs.min()))
        return best

    def separated_bump_witness(
        self, space: FiniteQMMSpace, delta: float, alpha: float, p: float
    ) -> WitnessSequence:
        """
        f_j = Phi_j / mu(B(x_j, delta))^(1/p) around a C~_d C_d^2 delta-separated set.

        Phi_j is 1 on B(x_j, delta), 0 off B(x_j, C_d delta) and linear in
        d(x_j, .) in between (an indicator when C_d = 1); the supports are
        pairwise disjoint, so ||f_k - f_l||_p^p >= 2.

        Raises:
            NoSeparatedPair: fewer than two separated centers
        """
        if not delta > 0:
            raise InvalidParams(f"delta must be positive, got {delta}")
        c_d, c_tilde = space.C_d, space.C_d_tilde
        centers = self.geometry.greedy_separated(space, c_tilde * c_d ** 2 * delta).centers
        if len(centers) < 2:
            raise NoSeparatedPair(
                f"no two points are {c_tilde * c_d ** 2 * delta:g}-separated"
            )
        mu = space.mu
        functions, gradients, norms, masses = [], [], [], []
        for x in centers:
            d = space.dist[x]
            if c_d > 1:
                phi = np.clip((c_d * delta - d) / ((c_d - 1) * delta), 0.0, 1.0)
            else:
                phi = (d < delta).astype(float)
            mass = float(mu[d < delta].sum())
            scale = mass ** (-1.0 / p)
            f = phi * scale
            g = self._pair_gradient(space, phi, alpha) * scale
            functions.append(FunctionOnSpace(f, space))
            gradients.append(g)
            masses.append(float(np.sum(mu * f ** p)))
            norms.append(lp_norm(f, p, mu) + lp_norm(g, p, mu))

        F = np.vstack([fn.values for fn in functions])
        supports = F > 0
        disjoint = bool(np.all(supports.sum(axis=0) <= 1))
        doubling = self.geometry.doubling_constant(space, max(1.0, c_d), delta, np.asarray(centers))
        return WitnessSequence(
            functions=functions,
            pairwise_lp_gap=self._pairwise_gap(F, mu, p),
            norm_bound=max(norms),
            recipe="separated_bumps",
            gradients=gradients,
            details={
                "centers": [int(c) for c in centers],
                "disjoint_supports": disjoint,
                "lp_masses": masses,
                "Delta_Cd": doubling,
                "masses_below_Delta": all(m <= doubling * (1 + 1e-12) for m in masses),
            },
        )

    def tail_bump_witness(
        self,
        space: QuasiMetricMeasureSpace,
        x0: int,
        alpha: float,
        p: float,
        R_grid: Iterable[float],
    ) -> WitnessSequence:
        """
        f_R = Phi_R / mu(X - B(x0, C_d R))^(1/p) with Phi_R = 0 on B(x0, R),
        1 off B(x0, C_d R) and linear in d(x0, .) in between.

        Every f_R has tail integral exactly 1 beyond C_d R. The gradients
        live outside B(x0, R); their L^p norms are bounded through the tail
        ratios mu(X - B(x0, R)) / mu(X - B(x0, C_d R)).

        Raises:
            EmptyTail: some C_d R leaves no mass outside the ball
            InvalidParams: alpha > 1 on a density line
        """
        radii = np.sort(np.asarray(list(R_grid), dtype=float))
        c_d = max(space.C_d, 1.0)
        mu = space.weights
        d0 = space.distances_from(x0)
        tails_far = space.tail_masses(x0, c_d * radii)
        tails_near = space.tail_masses(x0, radii)
        if np.any(tails_far <= 0):
            raise EmptyTail("some C_d R lies beyond the support")
        if isinstance(space, DensityLine) and alpha > 1:
            raise InvalidParams("tail gradients on the line need alpha <= 1")

        functions, gradients, norms, unit = [], [], [], []
        for R, far in zip(radii, tails_far):
            if c_d > 1:
                phi = np.clip((d0 - R) / ((c_d - 1) * R), 0.0, 1.0)
            else:
                phi = (d0 >= R).astype(float)
            scale = far ** (-1.0 / p)
            f = phi * scale
            if isinstance(space, DensityLine):
                lipschitz = 1.0 / ((c_d - 1) * R)
                g = np.where(d0 >= R, lipschitz ** alpha, 0.0) * scale
            else:
                g = self._pair_gradient(space, phi, alpha) * scale
            functions.append(FunctionOnSpace(f, space))
            gradients.append(g)
            unit.append(float(np.sum(mu[d0 >= c_d * R] * f[d0 >= c_d * R] ** p)))
            norms.append(lp_norm(f, p, mu) + lp_norm(g, p, mu))

        F = np.vstack([fn.values for fn in functions])
        family = FunctionFamily(members=functions)
        modulus = self.equi_integrability_modulus(family, p, [float(tails_far.min())])
        ratios = tails_near / tails_far
        return WitnessSequence(
            functions=functions,
            pairwise_lp_gap=self._pairwise_gap(F, mu, p) if len(functions) > 1 else math.inf,
            norm_bound=max(norms),
            recipe="tail_bumps",
            gradients=gradients,
            details={
                "radii": radii.tolist(),
                "tail_ratios": ratios.tolist(),
                "max_ratio": float(ratios.max()),
                "unit_tail_masses": unit,
                "norms": norms,
                "equi_integrability": modulus.verdict,
            },
        )

    # ------------------------------------------------------------------
    # exponent inequalities
    # ------------------------------------------------------------------

    def interpolation_check(
        self, f: np.ndarray, p: float, p_star: float, p_tilde: float, mu: np.ndarray
    ) -> InequalityReport:
        """||f||_{p~} <= ||f||_p^theta ||f||_{p*}^(1 - theta), 1/p~ = theta/p + (1 - theta)/p*"""
        if not (0 < p < p_tilde < p_star):
            raise BadExponents(f"need 0 < p < p~ < p*, got {p}, {p_tilde}, {p_star}")
        inv_star = 0.0 if p_star == math.inf else 1.0 / p_star
        theta = (1.0 / p_tilde - inv_star) / (1.0 / p - inv_star)
        lhs = lp_norm(f, p_tilde, mu)
        rhs = lp_norm(f, p, mu) ** theta * lp_norm(f, p_star, mu) ** (1 - theta)
        return InequalityReport(
            name="interpolation",
            lhs=lhs,
            rhs=rhs,
            holds=lhs <= rhs * (1 + 1e-12),
            details={"theta": theta},
        )

    def holder_check(self, u: np.ndarray, p: float, p_tilde: float, mu: np.ndarray) -> InequalityReport:
        """||u||_{p~} <= mu(X)^(1/p~ - 1/p) ||u||_p for p~ < p"""
        if not (0 < p_tilde < p):
            raise BadExponents(f"need 0 < p~ < p, got p~={p_tilde}, p={p}")
        inv_p = 0.0 if p == math.inf else 1.0 / p
        lhs = lp_norm(u, p_tilde, mu)
        rhs = float(np.sum(mu)) ** (1.0 / p_tilde - inv_p) * lp_norm(u, p, mu)
        return InequalityReport("holder", lhs, rhs, lhs <= rhs * (1 + 1e-12))

    def two_measure_check(
        self,
        space: FiniteQMMSpace,
        u: np.ndarray,
        nu: np.ndarray,
        C: float,
        alpha: float,
        p: float,
        q: float = math.inf,
        kind: NormKind = NormKind.M_SOBOLEV,
    ) -> List[InequalityReport]:
        """
        Measure change nu <= C mu: L^p norms and seminorms grow by at most C^(1/p).

        The optimal mu-gradient stays a gradient under nu, so the nu-seminorm
        is also checked against the nu-norm of that gradient.

        Raises:
            InvalidParams: nu not positive or nu > C mu somewhere
        """
        nu = np.asarray(nu, dtype=float)
        u = np.asarray(u, dtype=float)
        if nu.shape != space.mu.shape or np.any(nu <= 0):
            raise InvalidParams("nu must be a positive weight per atom")
        if np.any(nu > C * space.mu * (1 + 1e-12)):
            raise InvalidParams(f"nu exceeds {C} mu")
        factor = C ** (1.0 / p)
        nu_space = replace(space, mu=nu)

        base = self.norms.norm(space, u, alpha, p, q, kind)
        moved = self.norms.norm(nu_space, u, alpha, p, q, kind)
        g = base.optimal_g.g
        if kind is NormKind.N_BESOV:
            transfer = float(np.linalg.norm([lp_norm(row, p, nu) for row in g], ord=q)) if g.size else 0.0
        elif kind is NormKind.M_TL and g.shape[0] > 1 and q != math.inf:
            transfer = lp_norm(np.sum(g ** q, axis=0) ** (1.0 / q), p, nu)
        else:
            transfer = lp_norm(g.max(axis=0), p, nu) if g.size else 0.0

        low = min(moved.seminorm, max(0.0, moved.solver.lower_bound))
        return [
            InequalityReport("lp_measure_change", lp_norm(u, p, nu), factor * lp_norm(u, p, space.mu),
                             lp_norm(u, p, nu) <= factor * lp_norm(u, p, space.mu) * (1 + 1e-12)),
            InequalityReport("seminorm_measure_change", moved.seminorm, factor * base.seminorm,
                             low <= factor * base.seminorm * (1 + 1e-9) + 1e-12,
                             {"lower_bound": low, "C": C}),
            InequalityReport("gradient_transfer", moved.seminorm, transfer,
                             low <= transfer * (1 + 1e-9) + 1e-12 and transfer <= factor * base.seminorm * (1 + 1e-9) + 1e-12),
        ]

    # ------------------------------------------------------------------
    # embedding hypotheses
    # ------------------------------------------------------------------

    def embedding_conditions(
        self,
        space: FiniteQMMSpace,
        r: float,
        R_grid: Iterable[float],
        delta_grid: Iterable[float],
        x0: int = 0,
        nu: Optional[np.ndarray] = None,
        beta: Optional[float] = None,
        tol: float = 1e-3,
    ) -> Dict[str, Any]:
        """
        The two hypotheses of the L^p embedding as diagnostics.

        i) modulus of the family chi_{B_rho(y, r)}(.) / mu(B_rho(., r)) in nu;
        ii) R -> sup over y outside B_rho(x0, R) of
            sum over x in B_rho(y, r) of nu_x / mu(B_rho(x, r)).
        """
        nu = space.mu if nu is None else np.asarray(nu, dtype=float)
        if beta is None:
            beta = 1.0 if space.C_d <= 1 else min(1.0, 1.0 / math.log2(space.C_d))
        chain = self.regularization.chain_metric(space, beta)
        inside = chain.rho < r
        ball = inside @ space.mu
        kernel = inside / ball[:, None]  # row x, column y
        family = FunctionFamily(
            members=[FunctionOnSpace(kernel[:, y], space) for y in range(space.n)], nu=nu
        )
        modulus = self.equi_integrability_modulus(family, 1.0, delta_grid, tol)

        totals = (nu / ball) @ inside
        profile = []
        for R in sorted(float(x) for x in R_grid):
            outside = chain.rho[x0] >= R
            profile.append((R, float(totals[outside].max()) if np.any(outside) else 0.0))
        return {"modulus": modulus, "tail_profile": profile, "beta": beta, "kappa": chain.kappa}
