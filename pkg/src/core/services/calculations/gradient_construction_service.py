"""
Gradient Construction Service

Explicit gradient constructions on finite spaces: feasibility checks, the
dyadic gradient downgrade, the embedding inequalities between the norm
families and Holder bump functions separating two sets.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import math
from typing import Iterable, List, Optional

import numpy as np

from config.settings.base import QMMS_FEAS_TOL
from src.core.models.entities import (
    BumpResult,
    CertificateStatus,
    FiniteQMMSpace,
    FunctionOnSpace,
    GradientSequence,
    InequalityReport,
    NormKind,
    NormResult,
    as_index_array,
)
from src.core.models.exceptions import (
    EmptySet,
    InfeasibleGradient,
    InfeasibleInput,
    InvalidParams,
    TouchingSets,
)
from src.core.services.calculations.norm_calculation_service import (
    NormCalculationService,
    dyadic_level,
    lp_norm,
)
from src.core.services.calculations.regularization_service import RegularizationService

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = QMMS_FEAS_TOL


class GradientConstructionService:
    """Explicit gradients and the inequalities built from them"""

    def __init__(
        self,
        norms: Optional[NormCalculationService] = None,
        regularization: Optional[RegularizationService] = None,
    ):
        self.norms = norms or NormCalculationService()
        self.regularization = regularization or RegularizationService()

    # ------------------------------------------------------------------
    # feasibility
    # ------------------------------------------------------------------

    def violation(
        self, space: FiniteQMMSpace, u: np.ndarray, gseq: GradientSequence, alpha: float
    ) -> float:
        """
        Largest relative violation of |u(x) - u(y)| <= d(x, y)^alpha (g_k(x) + g_k(y))
        over ordered pairs, k the level of d(x, y); a single None level
        applies to every pair.
        """
        u = np.asarray(u, dtype=float)
        I, J = np.nonzero(~np.eye(space.n, dtype=bool))
        d = space.dist[I, J]
        c = np.abs(u[I] - u[J]) / d ** alpha
        if gseq.levels == (None,):
            gi, gj = gseq.g[0][I], gseq.g[0][J]
        else:
            levels = dyadic_level(d)
            index = {lvl: k for k, lvl in enumerate(gseq.levels)}
            rows = np.array([index.get(int(lvl), -1) for lvl in levels])
            padded = np.vstack([gseq.g, np.zeros((1, space.n))]) if gseq.g.size else np.zeros((1, space.n))
            gi, gj = padded[rows, I], padded[rows, J]
        excess = (c - gi - gj) / np.maximum(1.0, c)
        return float(max(0.0, excess.max())) if excess.size else 0.0

    def check_feasible(
        self, space: FiniteQMMSpace, u: np.ndarray, gseq: GradientSequence, alpha: float
    ) -> bool:
        return self.violation(space, u, gseq, alpha) <= FEASIBILITY_TOL

    # ------------------------------------------------------------------
    # downgrade
    # ------------------------------------------------------------------

    @staticmethod
    def split_level(epsilon: float) -> int:
        """K with 2^-K <= epsilon < 2^(-K+1)"""
        return 1 - int(np.frexp(epsilon)[1])

    def downgrade_gradient(
        self,
        space: FiniteQMMSpace,
        u_n: np.ndarray,
        u_m: np.ndarray,
        g_nm: GradientSequence,
        alpha: float,
        beta: float,
        epsilon: float,
    ) -> GradientSequence:
        """
        beta-gradient of u_n - u_m from an alpha-gradient, beta < alpha.

        h_k = 2^beta 2^(k beta) |u_n - u_m| below the split level K of
        epsilon and h_k = epsilon^(alpha - beta) g_k from K on.

        Raises:
            InvalidParams: beta >= alpha or epsilon <= 0
            InfeasibleInput: g_nm is not an alpha-gradient of u_n - u_m
        """
        if not beta < alpha:
            raise InvalidParams(f"need beta < alpha, got beta={beta}, alpha={alpha}")
        if not epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {epsilon}")
        w = np.asarray(u_n, dtype=float) - np.asarray(u_m, dtype=float)
        if not self.check_feasible(space, w, g_nm, alpha):
            raise InfeasibleInput(
                f"input gradient violates its alpha-constraints by {self.violation(space, w, g_nm, alpha):.3e}"
            )

        K = self.split_level(epsilon)
        off = space.dist[~np.eye(space.n, dtype=bool)]
        levels = tuple(int(k) for k in np.unique(dyadic_level(off)))
        h = np.empty((len(levels), space.n))
        for row, k in enumerate(levels):
            if k < K:
                h[row] = 2.0 ** beta * 2.0 ** (k * beta) * np.abs(w)
            else:
                g_k = g_nm.g[0] if g_nm.levels == (None,) else g_nm.at(k)
                h[row] = epsilon ** (alpha - beta) * g_k
        out = GradientSequence(levels=levels, g=h)
        if not self.check_feasible(space, w, out, beta):
            raise InfeasibleGradient("downgraded gradient failed its beta-constraints")
        logger.debug("downgrade split at K=%d over %d levels", K, len(levels))
        return out

    # ------------------------------------------------------------------
    # embeddings between the norm families
    # ------------------------------------------------------------------

    @staticmethod
    def _at_most(name: str, lhs: NormResult, rhs: NormResult, details: Optional[dict] = None) -> InequalityReport:
        # certified lower bound of the left side against the computed right side
        low = lhs.solver.lower_bound if lhs.solver.status is CertificateStatus.CERTIFIED else 0.0
        low = min(low, lhs.seminorm)
        return InequalityReport(
            name=name,
            lhs=lhs.seminorm,
            rhs=rhs.seminorm,
            holds=low <= rhs.seminorm * (1 + 1e-9) + 1e-12,
            details={"lhs_lower_bound": low, **(details or {})},
        )

    @staticmethod
    def _equal(name: str, a: NormResult, b: NormResult, rel: float = 1e-6) -> InequalityReport:
        diff = abs(a.seminorm - b.seminorm)
        return InequalityReport(
            name=name,
            lhs=a.seminorm,
            rhs=b.seminorm,
            holds=diff <= rel * max(1.0, abs(a.seminorm), abs(b.seminorm)),
            details={"difference": diff},
        )

    def _dyadic_tail_bound(self, g_lp: float, u_lp: float, sigma: float, alpha: float, r: float) -> float:
        return (g_lp ** r / (1 - 2.0 ** (-r * sigma)) + u_lp ** r / (1 - 2.0 ** (-r * alpha))) ** (1.0 / r)

    def _downgraded_levels(
        self, space: FiniteQMMSpace, u: np.ndarray, source: GradientSequence, sigma: float, alpha: float
    ) -> GradientSequence:
        """h_k = 2^(-k sigma) g_k for k >= 0 and 2^((k+1) alpha) |u| for k < 0"""
        off = space.dist[~np.eye(space.n, dtype=bool)]
        levels = tuple(int(k) for k in np.unique(dyadic_level(off)))
        h = np.empty((len(levels), space.n))
        for row, k in enumerate(levels):
            if k >= 0:
                g_k = source.g[0] if source.levels == (None,) else source.at(k)
                h[row] = 2.0 ** (-k * sigma) * g_k
            else:
                h[row] = 2.0 ** ((k + 1) * alpha) * np.abs(u)
        return GradientSequence(levels=levels, g=h)

    def embs_check(
        self,
        space: FiniteQMMSpace,
        u: np.ndarray,
        alpha: float,
        sigma: float,
        p: float,
        q: float,
        r: float,
    ) -> List[InequalityReport]:
        """
        The embedding inequalities between the norm families at one u.

        Returns reports named
            besov_sup_below_q, tl_sup_below_q   ||.||_{q = inf} <= ||.||_q
            tl_sup_equals_sobolev, tl_p_equals_besov_p
            besov_smoothness_downgrade, tl_smoothness_downgrade
        the last two comparing the computed alpha-norm at r against the
        explicit bound from the (alpha + sigma)-gradient.
        """
        if not (sigma > 0 and r > 0):
            raise InvalidParams("sigma and r must be positive")
        u = np.asarray(u, dtype=float)
        mu = space.mu
        norm = self.norms.norm
        reports = []

        n_inf = norm(space, u, alpha, p, math.inf, NormKind.N_BESOV)
        n_q = norm(space, u, alpha, p, q, NormKind.N_BESOV)
        reports.append(self._at_most("besov_sup_below_q", n_inf, n_q))

        m_inf = norm(space, u, alpha, p, math.inf, NormKind.M_TL)
        m_q = norm(space, u, alpha, p, q, NormKind.M_TL)
        reports.append(self._at_most("tl_sup_below_q", m_inf, m_q))

        sobolev = norm(space, u, alpha, p, math.inf, NormKind.M_SOBOLEV)
        reports.append(self._equal("tl_sup_equals_sobolev", m_inf, sobolev))

        m_pp = norm(space, u, alpha, p, p, NormKind.M_TL)
        n_pp = norm(space, u, alpha, p, p, NormKind.N_BESOV)
        reports.append(self._equal("tl_p_equals_besov_p", m_pp, n_pp))

        u_lp = lp_norm(u, p, mu)

        # Besov: smoothness alpha + sigma at q = inf down to alpha at q = r
        source = norm(space, u, alpha + sigma, p, math.inf, NormKind.N_BESOV)
        target = norm(space, u, alpha, p, r, NormKind.N_BESOV)
        h = self._downgraded_levels(space, u, source.optimal_g, sigma, alpha)
        h_norm = float(np.sum(np.array([lp_norm(row, p, mu) for row in h.g]) ** r) ** (1.0 / r))
        bound = self._dyadic_tail_bound(source.seminorm, u_lp, sigma, alpha, r)
        low = target.solver.lower_bound if target.solver.status is CertificateStatus.CERTIFIED else target.seminorm
        reports.append(InequalityReport(
            name="besov_smoothness_downgrade",
            lhs=target.seminorm,
            rhs=bound,
            holds=min(low, target.seminorm) <= bound * (1 + 1e-9) and h_norm <= bound * (1 + 1e-9),
            details={
                "constructed": h_norm,
                "constructed_feasible": self.check_feasible(space, u, h, alpha),
                "factor": (1 - 2.0 ** (-r * sigma)) ** (-1.0 / r),
                "status": target.solver.status.value,
            },
        ))

        # Triebel-Lizorkin: the same construction pointwise
        source = norm(space, u, alpha + sigma, p, math.inf, NormKind.M_SOBOLEV)
        target = norm(space, u, alpha, p, r, NormKind.M_TL)
        h = self._downgraded_levels(space, u, source.optimal_g, sigma, alpha)
        pointwise = np.sum(h.g ** r, axis=0) ** (1.0 / r)
        h_norm = lp_norm(pointwise, p, mu)
        a = 2.0 ** (p / r) * (1 - 2.0 ** (-r * sigma)) ** (-p / r)
        b = 2.0 ** (p / r) * (1 - 2.0 ** (-r * alpha)) ** (-p / r)
        bound = (a * source.seminorm ** p + b * u_lp ** p) ** (1.0 / p)
        certified = target.solver.status is CertificateStatus.CERTIFIED
        reports.append(InequalityReport(
            name="tl_smoothness_downgrade",
            lhs=target.seminorm,
            rhs=bound,
            holds=(not certified or target.solver.lower_bound <= bound * (1 + 1e-9))
            and h_norm <= bound * (1 + 1e-9),
            details={
                "constructed": h_norm,
                "constructed_feasible": self.check_feasible(space, u, h, alpha),
                "status": target.solver.status.value,
            },
        ))
        for rep in reports:
            if not rep.holds:
                logger.warning("embedding check %s failed: %.10g vs %.10g", rep.name, rep.lhs, rep.rhs)
        return reports

    # ------------------------------------------------------------------
    # bump functions
    # ------------------------------------------------------------------

    def bump(
        self,
        space: FiniteQMMSpace,
        E0: Iterable[int],
        E1: Iterable[int],
        beta: Optional[float] = None,
        alpha: Optional[float] = None,
        p: float = 2.0,
        q: float = math.inf,
    ) -> BumpResult:
        """
        Phi = min(1, dist_sigma(x, E0) / dist_sigma(E0, E1)) for the beta-power chain metric sigma.

        Phi vanishes on E0, equals 1 on E1 and has Holder quotient at most
        1 / dist_sigma(E0, E1) against rho^beta = sigma. With alpha given the
        M^{alpha,p} and N^alpha_{p,q} seminorms of Phi are computed and
        reported next to dist_d(E0, E1)^-alpha mu(X - E0)^(1/p).

        Raises:
            EmptySet: E0 or E1 empty
            TouchingSets: dist_d(E0, E1) = 0
        """
        e0, e1 = as_index_array(E0), as_index_array(E1)
        if e0.size == 0 or e1.size == 0:
            raise EmptySet("bump needs two nonempty sets")
        if np.intersect1d(e0, e1).size:
            raise TouchingSets("the sets intersect")
        dist_d = float(space.dist[np.ix_(e0, e1)].min())
        if dist_d <= 0:
            raise TouchingSets("the sets are at distance 0")

        if beta is None:
            beta = 1.0 if space.C_d <= 1 else min(1.0, 1.0 / math.log2(space.C_d))
        chain = self.regularization.chain_metric(space, beta)
        sigma = chain.sigma
        dist_sigma = float(sigma[np.ix_(e0, e1)].min())
        phi = np.minimum(1.0, sigma[:, e0].min(axis=1) / dist_sigma)

        diff = np.abs(phi[:, None] - phi[None, :])
        off = ~np.eye(space.n, dtype=bool)
        quotient = np.where(off, diff / np.where(off, sigma, 1.0), 0.0)
        a, b = np.unravel_index(int(np.argmax(quotient)), quotient.shape)

        rest = np.setdiff1d(np.arange(space.n), e0)
        norms = {}
        shape = math.nan
        if alpha is not None:
            shape = dist_d ** (-alpha) * float(space.mu[rest].sum()) ** (1.0 / p)
            norms["M"] = self.norms.norm(space, phi, alpha, p, math.inf, NormKind.M_SOBOLEV).seminorm
            norms["N"] = self.norms.norm(space, phi, alpha, p, q, NormKind.N_BESOV).seminorm

        return BumpResult(
            phi=FunctionOnSpace(phi, space),
            beta=beta,
            holder_quotient=float(quotient[a, b]),
            holder_bound=1.0 / dist_sigma,
            witness_pair=(int(a), int(b)),
            dist_d=dist_d,
            dist_sigma=dist_sigma,
            shape_value=shape,
            norms=norms,
        )
