"""
Geometry Calculation Service

Measure-geometric diagnostics: separated sets and nets, h(r), (c, delta)
doubling constants, doubling at infinity, lower Ahlfors fits and the
integrability functional.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config.settings.base import QMMS_INTEGRABILITY_TOL
from src.core.models.entities import (
    DensityLine,
    DoublingReport,
    FiniteQMMSpace,
    InequalityReport,
    IntegrabilityReport,
    NetKind,
    NetResult,
    QuasiMetricMeasureSpace,
    TailRatioReport,
)
from src.core.models.exceptions import EmptyTail, InvalidParams

logger = logging.getLogger(__name__)

INTEGRABILITY_TOL = QMMS_INTEGRABILITY_TOL


class GeometryCalculationService:
    """Diagnostics on finite spaces and density lines"""

    def __init__(self, workers: int = 1, integrability_tol: float = INTEGRABILITY_TOL):
        self.workers = workers
        self.integrability_tol = integrability_tol

    def _map(self, fn: Callable, items: Sequence) -> List:
        if self.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(fn, items))
        return [fn(x) for x in items]

    # ------------------------------------------------------------------
    # nets
    # ------------------------------------------------------------------

    def greedy_separated(self, space: QuasiMetricMeasureSpace, epsilon: float) -> NetResult:
        """
        Maximal epsilon-separated set, lowest index first.

        A point is skipped once d(a, x) < epsilon or d(x, a) < epsilon for a
        chosen center a, so every point lies within C~_d epsilon of a center
        (cover_radius_factor).

        Raises:
            InvalidParams: epsilon <= 0
        """
        if not epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {epsilon}")

        centers: List[int] = []
        if isinstance(space, DensityLine):
            pos = space.positions
            a = 0
            while a < space.n:
                centers.append(a)
                a = int(np.searchsorted(pos, pos[a] + epsilon, side="left"))
        else:
            blocked = np.zeros(space.n, dtype=bool)
            for a in range(space.n):
                if blocked[a]:
                    continue
                centers.append(a)
                blocked |= (space.dist[a] < epsilon) | (space.dist[:, a] < epsilon)

        return NetResult(
            epsilon=epsilon,
            centers=centers,
            kind=NetKind.MAXIMAL_SEPARATED,
            cover_radius_factor=space.C_d_tilde,
        )

    def is_net(self, space: FiniteQMMSpace, net: NetResult) -> bool:
        """Every point within cover_radius_factor * epsilon of some center"""
        reach = space.dist[net.centers].min(axis=0)
        return bool(np.all(reach < net.cover_radius_factor * net.epsilon))

    def covering_profile(
        self, space: QuasiMetricMeasureSpace, epsilon_grid: Iterable[float]
    ) -> List[Tuple[float, int, int]]:
        """
        Greedy separated-set sizes along a grid.

        Returns:
            (epsilon, greedy size, net size) per grid point in ascending
            order; the net size is the smallest greedy size at any scale
            <= epsilon, which is nonincreasing
        """
        grid = sorted(float(e) for e in epsilon_grid)
        sizes = self._map(lambda e: len(self.greedy_separated(space, e).centers), grid)
        net_sizes = np.minimum.accumulate(sizes) if sizes else []
        return [(e, int(s), int(m)) for e, s, m in zip(grid, sizes, net_sizes)]

    # ------------------------------------------------------------------
    # ball masses
    # ------------------------------------------------------------------

    def h_profile(self, space: QuasiMetricMeasureSpace, r_grid: Iterable[float]) -> Dict[float, float]:
        """h(r) = min over atoms of mu(B(x, r))"""
        grid = [float(r) for r in r_grid]
        values = self._map(lambda r: float(space.ball_masses(r).min()), grid)
        return dict(zip(grid, values))

    def doubling_constant(
        self,
        space: QuasiMetricMeasureSpace,
        c: float,
        delta: float,
        centers: Optional[np.ndarray] = None,
    ) -> float:
        """
        Exact max of mu(B(x, c delta)) / mu(B(x, delta)) over the centers.

        Raises:
            InvalidParams: c < 1 or delta <= 0
        """
        if c < 1 or not delta > 0:
            raise InvalidParams(f"need c >= 1 and delta > 0, got c={c}, delta={delta}")
        if c == 1:
            return 1.0
        big = space.ball_masses(c * delta, centers)
        small = space.ball_masses(delta, centers)
        return float(np.max(big / small))

    def interior_centers(self, line: DensityLine, reach: float) -> np.ndarray:
        """Atoms whose ball of radius reach stays inside the truncation"""
        return np.flatnonzero(line.positions <= line.positions[-1] - reach)

    def doubling_sup(self, space: FiniteQMMSpace, c: float, delta_max: float = math.inf) -> float:
        """
        sup over 0 < delta <= delta_max of Delta_c(delta).

        The ratio only changes when c delta crosses a distance, and it is
        largest right after such a crossing; so the candidates are
        delta = t / c for t in each row, where the ratio reads
        mu{d <= t} / mu{d <= t / c}.
        """
        best = 1.0
        for x in range(space.n):
            row = space.dist[x]
            order = np.argsort(row, kind="stable")
            d_sorted = row[order]
            cum = np.cumsum(space.mu[order])
            t = d_sorted[1:]
            t = t[t / c < delta_max]
            if t.size == 0:
                continue
            num = cum[np.searchsorted(d_sorted, t, side="right") - 1]
            den = cum[np.searchsorted(d_sorted, t / c, side="right") - 1]
            best = max(best, float((num / den).max()))
        return best

    def doubling_iteration_bound(
        self, space: QuasiMetricMeasureSpace, c: float, c_prime: float, delta: float
    ) -> Tuple[float, float]:
        """
        Measured Delta_{c'}(delta) and the product of Delta_c(c' delta / c^l),
        l = 1..k, where k is the smallest integer with c^k >= c'.
        """
        if not c > 1 or c_prime < 1:
            raise InvalidParams(f"need c > 1 and c' >= 1, got c={c}, c'={c_prime}")
        k = max(1, math.ceil(math.log(c_prime) / math.log(c) - 1e-12))
        bound = 1.0
        for level in range(1, k + 1):
            bound *= self.doubling_constant(space, c, c_prime * delta / c ** level)
        return self.doubling_constant(space, c_prime, delta), bound

    def doubling_at_infinity(
        self, space: QuasiMetricMeasureSpace, x0: int, R_grid: Iterable[float]
    ) -> TailRatioReport:
        """
        Tail ratios mu(X - B(x0, R)) / mu(X - B(x0, C_d R)).

        The liminf estimate is the minimum over the upper half of the grid;
        growing flags a strictly increasing run there.

        Raises:
            EmptyTail: some C_d R leaves no mass outside the ball
        """
        radii = np.sort(np.asarray(list(R_grid), dtype=float))
        near = space.tail_masses(x0, radii)
        far = space.tail_masses(x0, space.C_d * radii)
        if np.any(far <= 0):
            R = float(radii[np.flatnonzero(far <= 0)[0]])
            raise EmptyTail(f"no mass outside B(x0, {space.C_d * R:g}); R={R:g} exceeds the support")
        ratios = near / far
        upper = ratios[len(ratios) // 2:]
        growing = bool(upper.size > 2 and np.all(np.diff(upper) > 0))
        return TailRatioReport(
            x0=x0,
            radii=radii,
            ratios=ratios,
            liminf=float(upper.min()),
            growing=growing,
        )

    def ahlfors_lower_fit(
        self, space: QuasiMetricMeasureSpace, r_grid: Iterable[float], s: float = 1.0
    ) -> Tuple[float, float]:
        """
        Best b with mu(B(x, r)) >= b r^s on the grid.

        Raises:
            InvalidParams: radii outside (0, 1]
        """
        grid = np.asarray(list(r_grid), dtype=float)
        if grid.size == 0 or np.any(grid <= 0) or np.any(grid > 1):
            raise InvalidParams("Ahlfors radii must lie in (0, 1]")
        b = min(float(space.ball_masses(r).min()) / r ** s for r in grid)
        return s, b

    def doubling_dimension(
        self,
        space: QuasiMetricMeasureSpace,
        r_grid: Iterable[float],
        lambdas: Iterable[float] = (1.5, 2.0, 3.0, 4.0, 8.0),
    ) -> InequalityReport:
        """
        mu(B(x, lambda r)) <= 4^s lambda^s mu(B(x, r)) with s = log2 C_mu.

        C_mu is measured as the largest Delta_2 over every radius the dyadic
        chain from r to lambda r passes through, so the inequality is exact
        on the grid. Also reports b = h(1) 4^-s, the lower Ahlfors constant
        it implies for r <= 1.
        """
        grid = [float(r) for r in r_grid]
        lams = [float(lam) for lam in lambdas]
        if any(lam < 1 for lam in lams):
            raise InvalidParams("lambda must be at least 1")
        steps = max(1, max(math.ceil(math.log2(lam)) for lam in lams))
        radii = sorted({r * 2.0 ** j for r in grid for j in range(steps)})
        c_mu = max(self.doubling_constant(space, 2.0, r) for r in radii)
        s = math.log2(c_mu)

        worst = 0.0
        for r in grid:
            base = space.ball_masses(r)
            for lam in lams:
                ratio = float((space.ball_masses(lam * r) / base).max())
                worst = max(worst, ratio / (4.0 ** s * lam ** s))

        h1 = float(space.ball_masses(1.0).min())
        b_implied = h1 * 4.0 ** -s
        small = [r for r in grid if r <= 1]
        b_measured = (
            min(float(space.ball_masses(r).min()) / r ** s for r in small) if small else math.inf
        )
        return InequalityReport(
            name="doubling_dimension",
            lhs=worst,
            rhs=1.0,
            holds=worst <= 1.0 + 1e-12,
            details={
                "C_mu": c_mu,
                "s": s,
                "b_implied": b_implied,
                "b_measured": b_measured,
                "ahlfors_implied_holds": b_measured >= b_implied * (1 - 1e-12),
            },
        )

    def local_ratio(
        self, space: QuasiMetricMeasureSpace, x0: int, x_grid: Iterable[float]
    ) -> List[Tuple[float, float]]:
        """mu(B(x0, 2x)) / mu(B(x0, x)) per grid point"""
        centers = np.array([x0])
        out = []
        for x in x_grid:
            out.append((float(x), float(space.ball_masses(2 * x, centers)[0] / space.ball_masses(x, centers)[0])))
        return out

    def report(
        self,
        space: QuasiMetricMeasureSpace,
        c: float,
        deltas: Iterable[float],
        r_grid: Iterable[float] = (),
    ) -> DoublingReport:
        """Delta_c over a delta grid plus h over an r grid"""
        grid = np.asarray(list(deltas), dtype=float)
        values = np.array(self._map(lambda d: self.doubling_constant(space, c, d), list(grid)))
        return DoublingReport(c=c, deltas=grid, Delta_c=values, h=self.h_profile(space, r_grid))

    # ------------------------------------------------------------------
    # integrability
    # ------------------------------------------------------------------

    def integrability_functional(
        self,
        space_or_builder: object,
        r: float,
        T_max: float = 16.0,
    ) -> IntegrabilityReport:
        """
        Integral of 1/mu(B(x, r)) d mu(x).

        Args:
            space_or_builder: a space (exact sum) or a callable T -> DensityLine
                truncated at T, evaluated along T = 1, 2, 4, ..., T_max
            r: ball radius
            T_max: last truncation of the schedule

        Returns:
            IntegrabilityReport; for generators the verdict compares the
            increment over the last doubling of T against the tolerance:
            below it "integrable", above ten times it "divergent",
            otherwise "inconclusive"
        """
        if not r > 0:
            raise InvalidParams(f"r must be positive, got {r}")

        if isinstance(space_or_builder, QuasiMetricMeasureSpace):
            space = space_or_builder
            value = float(np.sum(space.weights / space.ball_masses(r)))
            return IntegrabilityReport(r=r, value=value, diverges=False, verdict="finite space")

        builder = space_or_builder
        # balls around x <= T_max must not feel the truncation
        line = builder(T_max + r)
        terms = np.cumsum(line.mu / line.ball_masses(r))
        schedule = [2.0 ** k for k in range(int(math.floor(math.log2(T_max))) + 1)]
        curve = []
        for T in schedule:
            idx = line.index_below(T)
            curve.append((T, float(terms[idx - 1]) if idx > 0 else 0.0))

        increment = curve[-1][1] - curve[-2][1] if len(curve) > 1 else math.inf
        if increment < self.integrability_tol:
            verdict = "integrable"
        elif increment > 10 * self.integrability_tol:
            verdict = "divergent"
        else:
            verdict = "inconclusive"
        logger.info("integrability at r=%g: last increment %.3e -> %s", r, increment, verdict)
        return IntegrabilityReport(
            r=r,
            value=curve[-1][1],
            diverges=verdict == "divergent",
            verdict=verdict,
            truncation_curve=curve,
            details={"last_increment": increment, "tol": self.integrability_tol},
        )

    # ------------------------------------------------------------------
    # counting bounds
    # ------------------------------------------------------------------

    def counting_bound(self, space: QuasiMetricMeasureSpace, epsilon: float) -> InequalityReport:
        """#A <= mu(X) / h(epsilon / (C_d C~_d)) for the greedy separated set A"""
        size = len(self.greedy_separated(space, epsilon).centers)
        radius = epsilon / (space.C_d * space.C_d_tilde)
        bound = space.total_mass / float(space.ball_masses(radius).min())
        return InequalityReport(
            name="counting_bound",
            lhs=float(size),
            rhs=bound,
            holds=size <= bound * (1 + 1e-12),
            details={"radius": radius},
        )

    def total_boundedness_bound(
        self, space: QuasiMetricMeasureSpace, epsilon: float, c: float = 2.0
    ) -> InequalityReport:
        """
        #A <= prod_{l < k} Delta_c(c^l epsilon / (C~_d C_d)), k smallest with
        c^k epsilon > C~_d C_d diam(X).
        """
        if not c > 1:
            raise InvalidParams(f"c must exceed 1, got {c}")
        size = len(self.greedy_separated(space, epsilon).centers)
        radius = epsilon / (space.C_d * space.C_d_tilde)
        k = 0
        while c ** k * radius <= space.diam:
            k += 1
        bound = 1.0
        for level in range(k):
            bound *= self.doubling_constant(space, c, c ** level * radius)
        return InequalityReport(
            name="total_boundedness_bound",
            lhs=float(size),
            rhs=bound,
            holds=size <= bound * (1 + 1e-12),
            details={"k": k, "radius": radius, "c": c},
        )

    def nonintegrability_lower_bound(
        self, space: QuasiMetricMeasureSpace, r: float
    ) -> InequalityReport:
        """
        Integral of 1/mu(B(x, r)) >= #A / Delta_{C_d}(r) for a maximal
        C_d C~_d r-separated set A.
        """
        net = self.greedy_separated(space, space.C_d * space.C_d_tilde * r)
        centers = np.asarray(net.centers)
        delta = self.doubling_constant(space, max(1.0, space.C_d), r, centers)
        lower = len(centers) / delta
        value = float(np.sum(space.weights / space.ball_masses(r)))
        return InequalityReport(
            name="nonintegrability_lower_bound",
            lhs=lower,
            rhs=value,
            holds=lower <= value * (1 + 1e-12),
            details={"separated": len(centers), "Delta": delta},
        )
