"""
Regularization Service

beta-power chain metrics, snowflakes and distortion profiles used as a
computable lower-bound certificate for the smoothness index.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import floyd_warshall

from src.core.models.entities import ChainMetricResult, FiniteQMMSpace, IndexProfile
from src.core.models.exceptions import InvalidParams
from src.core.services.calculations.space_calculation_service import SpaceCalculationService

logger = logging.getLogger(__name__)


def default_beta_grid() -> np.ndarray:
    """0.1 * 2^(k/8), k = 0..64"""
    return 0.1 * 2.0 ** (np.arange(65) / 8.0)


class RegularizationService:
    """Chain-metric regularization of finite quasi-metric spaces"""

    def __init__(self, space_service: Optional[SpaceCalculationService] = None, workers: int = 1):
        self.spaces = space_service or SpaceCalculationService(workers)
        self.workers = workers

    def snowflake(self, space: FiniteQMMSpace, s: float) -> FiniteQMMSpace:
        """dist' = dist^s, weights unchanged"""
        if not s > 0:
            raise InvalidParams(f"snowflake exponent must be positive, got {s}")
        if s == 1:
            return space
        snow = self.spaces.with_distances(space, space.dist ** s)
        snow.metadata["snowflake"] = s * space.metadata.get("snowflake", 1.0)
        return snow

    def chain_metric(self, space: FiniteQMMSpace, beta: float) -> ChainMetricResult:
        """
        Shortest-path metric on edge weights d_sym^beta.

        Args:
            space: any valid space (symmetrized internally)
            beta: Holder exponent > 0

        Returns:
            ChainMetricResult with sigma, rho = sigma^(1/beta), the distortion
            max d_sym^beta / sigma and the exact equivalence constant kappa of
            rho against the original d
        """
        if not beta > 0:
            raise InvalidParams(f"beta must be positive, got {beta}")
        sym = np.maximum(space.dist, space.dist.T)
        weights = sym ** beta
        sigma = floyd_warshall(weights, directed=False)
        # shortest paths never exceed the direct edge
        sigma = np.minimum(sigma, weights)

        off = ~np.eye(space.n, dtype=bool)
        distortion = float((weights[off] / sigma[off]).max())
        rho = sigma ** (1.0 / beta)

        ratio = space.dist[off] / rho[off]
        kappa = float(max(ratio.max(), (1.0 / ratio).max()))
        kappa_bound = max(space.C_d_tilde, distortion ** (1.0 / beta))

        logger.debug("chain metric beta=%.4g distortion=%.6g kappa=%.6g", beta, distortion, kappa)
        return ChainMetricResult(
            beta=beta,
            sigma=sigma,
            distortion=max(1.0, distortion),
            rho=rho,
            kappa=max(1.0, kappa),
            kappa_bound=kappa_bound,
        )

    def rho_space(self, space: FiniteQMMSpace, chain: ChainMetricResult) -> FiniteQMMSpace:
        """The regularized quasi-metric as a space with the same weights"""
        return self.spaces.with_distances(space, chain.rho)

    def index_profile(
        self,
        space: FiniteQMMSpace,
        beta_grid: Optional[Sequence[float]] = None,
        threshold: float = 16.0,
    ) -> IndexProfile:
        """
        Distortion of chain_metric along a grid of exponents.

        feasible_sup is the largest beta on the grid whose distortion is at
        most the threshold; rho = sigma^(1/beta) is then equivalent to d with
        constant distortion^(1/beta) and has C_rho <= 2^(1/beta).
        """
        betas = np.sort(np.asarray(default_beta_grid() if beta_grid is None else beta_grid, float))
        if betas.size == 0 or np.any(betas <= 0):
            raise InvalidParams("beta grid must be a nonempty set of positive exponents")

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                results = list(executor.map(lambda b: self.chain_metric(space, b), betas))
        else:
            results = [self.chain_metric(space, b) for b in betas]

        distortions = np.array([r.distortion for r in results])
        feasible = betas[distortions <= threshold]
        monotone = bool(np.all(np.diff(distortions) >= -1e-12 * distortions[:-1]))
        if not monotone:
            logger.warning("distortion profile is not monotone on this grid")
        return IndexProfile(
            betas=betas,
            distortions=distortions,
            threshold=threshold,
            feasible_sup=float(feasible.max()) if feasible.size else None,
            monotone=monotone,
        )

    @staticmethod
    def beta_power_triangle_violation(rho: np.ndarray, beta: float) -> float:
        """max over triples of rho(x,y)^b - rho(x,z)^b - rho(z,y)^b (<= 0 when it holds)"""
        s = rho ** beta
        worst = -np.inf
        for z in range(s.shape[0]):
            worst = max(worst, float((s - s[:, z][:, None] - s[z][None, :]).max()))
        return worst
