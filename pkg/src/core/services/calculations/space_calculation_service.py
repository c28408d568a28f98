"""
Space Calculation Service

Validation of finite quasi-metric-measure spaces, the constants C_d and
C~_d, balls, open hulls and the elementary set operations.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.models.entities import Ball, FiniteQMMSpace, QuasiMetricMeasureSpace
from src.core.models.exceptions import (
    EmptySet,
    InvalidSpace,
    NegativeDistance,
    NonpositiveWeight,
    ZeroOffDiagonal,
)

logger = logging.getLogger(__name__)

# Upper bound on elements of one (block x n x n) temporary
_BLOCK_ELEMENTS = 8_000_000


def _cd_block(dist: np.ndarray, zs: np.ndarray) -> float:
    denom = np.maximum(dist[:, zs].T[:, :, None], dist[zs][:, None, :])
    num = np.broadcast_to(dist, denom.shape)
    # denom == 0 only for x == y == z, whose ratio is 0 by convention
    ratio = np.divide(num, denom, out=np.zeros(denom.shape), where=denom > 0)
    return float(ratio.max())


def compute_quasi_constants(dist: np.ndarray, workers: int = 1) -> Tuple[float, float]:
    """
    Exact suprema C_d and C~_d over all admissible triples and pairs.

    Args:
        dist: n x n distance matrix
        workers: threads used for the triple scan

    Returns:
        (C_d, C_d_tilde)
    """
    n = dist.shape[0]
    block = max(1, _BLOCK_ELEMENTS // max(1, n * n))
    chunks = [np.arange(s, min(n, s + block)) for s in range(0, n, block)]

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_cd_block, dist, zs) for zs in chunks]
            c_d = max(f.result() for f in as_completed(futures))
    else:
        c_d = max(_cd_block(dist, zs) for zs in chunks)

    off = ~np.eye(n, dtype=bool)
    c_tilde = float((dist.T[off] / dist[off]).max()) if n > 1 else 1.0
    return max(1.0, c_d), max(1.0, c_tilde)


@dataclass
class SetOperations:
    """Result bundle of set_ops"""
    diam: float
    dist_between: Optional[float]
    neighborhood: np.ndarray
    closure: np.ndarray
    closure_equals_set: bool


class SpaceCalculationService:
    """Validation and elementary geometry of finite quasi-metric-measure spaces"""

    def __init__(self, workers: int = 1):
        self.workers = workers

    def validate_space(
        self,
        dist: Sequence[Sequence[float]],
        mu: Sequence[float],
        point_ids: Optional[Sequence[str]] = None,
        compute_constants: bool = True,
        log_mu: Optional[np.ndarray] = None,
        metadata: Optional[Dict] = None,
    ) -> FiniteQMMSpace:
        """
        Check the quasi-metric axioms and build a space.

        Raises:
            InvalidSpace: matrix not square, fewer than two points, bad lengths
            NegativeDistance, ZeroOffDiagonal, NonpositiveWeight
        """
        D = np.array(dist, dtype=float)
        m = np.array(mu, dtype=float)

        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InvalidSpace(f"distance matrix must be square, got shape {D.shape}")
        n = D.shape[0]
        if n < 2:
            raise InvalidSpace("a space needs at least two points")
        if m.shape != (n,):
            raise InvalidSpace(f"expected {n} weights, got {m.shape}")

        bad = np.argwhere(~np.isfinite(D) | (D < 0))
        if bad.size:
            i, j = bad[0]
            raise NegativeDistance(int(i), int(j), float(D[i, j]))
        if np.any(np.diag(D) != 0):
            k = int(np.flatnonzero(np.diag(D) != 0)[0])
            raise InvalidSpace(f"dist[{k}][{k}] must be 0")
        zero = np.argwhere((D == 0) & ~np.eye(n, dtype=bool))
        if zero.size:
            i, j = zero[0]
            raise ZeroOffDiagonal(int(i), int(j))

        bad_w = np.flatnonzero(~np.isfinite(m) | (m <= 0))
        if bad_w.size:
            k = int(bad_w[0])
            raise NonpositiveWeight(k, float(m[k]))

        ids = tuple(str(p) for p in point_ids) if point_ids is not None else tuple(
            str(i) for i in range(n)
        )
        if len(ids) != n:
            raise InvalidSpace(f"expected {n} point labels, got {len(ids)}")

        c_d = c_tilde = None
        if compute_constants:
            c_d, c_tilde = compute_quasi_constants(D, self.workers)
            logger.debug("validated space n=%d C_d=%.6g C~_d=%.6g", n, c_d, c_tilde)

        D.setflags(write=False)
        m.setflags(write=False)
        return FiniteQMMSpace(
            point_ids=ids,
            dist=D,
            mu=m,
            cached_Cd=c_d,
            cached_Cd_tilde=c_tilde,
            log_mu=log_mu,
            metadata=dict(metadata or {}),
        )

    def quasi_constants(self, space: FiniteQMMSpace) -> Tuple[float, float]:
        """Exact (C_d, C~_d) of a space, reusing cached values"""
        if space.cached_Cd is not None and space.cached_Cd_tilde is not None:
            return space.cached_Cd, space.cached_Cd_tilde
        return compute_quasi_constants(space.dist, self.workers)

    def with_distances(self, space: FiniteQMMSpace, dist: np.ndarray) -> FiniteQMMSpace:
        """Same atoms and weights, new distance matrix"""
        return self.validate_space(
            dist, space.mu, space.point_ids, log_mu=space.log_mu, metadata=space.metadata
        )

    def symmetrize(self, space: FiniteQMMSpace) -> FiniteQMMSpace:
        """d_sym(x, y) = max(d(x, y), d(y, x))"""
        if space.is_symmetric:
            return space
        return self.with_distances(space, np.maximum(space.dist, space.dist.T))

    def ball(self, space: QuasiMetricMeasureSpace, center: int, r: float) -> Ball:
        members = space.members(center, r)
        return Ball(
            center=center,
            radius=r,
            members=tuple(int(i) for i in members),
            mass=float(space.weights[members].sum()),
        )

    def open_hull(self, space: FiniteQMMSpace, center: int, r: float) -> np.ndarray:
        """
        Open set E(x, r) with B(x, r) inside E(x, r) inside B(x, C_d r).

        E_0 = B(x, r), E_{k+1} = union of B(y, r / C_d^{k+1}) over y in E_k;
        stops at a fixpoint or once the radius is below every positive distance.
        """
        c_d = space.C_d
        current = space.dist[center] < r
        k = 0
        d_min = space.min_positive_distance
        while True:
            radius = r / c_d ** (k + 1)
            nxt = current | (space.dist[current] < radius).any(axis=0)
            k += 1
            if np.array_equal(nxt, current) or radius < d_min:
                current = nxt
                break
            current = nxt
        logger.debug("open hull of (%d, %g) settled after %d steps", center, r, k)
        return np.flatnonzero(current)

    def _check_nonempty(self, *sets: np.ndarray) -> None:
        for s in sets:
            if len(s) == 0:
                raise EmptySet("set operations need nonempty index sets")

    def diam(self, space: FiniteQMMSpace, E: Iterable[int]) -> float:
        idx = np.asarray(list(E), dtype=int)
        self._check_nonempty(idx)
        return float(space.dist[np.ix_(idx, idx)].max())

    def dist_between(self, space: FiniteQMMSpace, E: Iterable[int], F: Iterable[int]) -> float:
        """inf of d(x, y) over x in E and y in F"""
        e = np.asarray(list(E), dtype=int)
        f = np.asarray(list(F), dtype=int)
        self._check_nonempty(e, f)
        return float(space.dist[np.ix_(e, f)].min())

    def dist_to_set(self, space: FiniteQMMSpace, E: Iterable[int]) -> np.ndarray:
        """dist_d(x, E) for every x"""
        e = np.asarray(list(E), dtype=int)
        self._check_nonempty(e)
        return space.dist[:, e].min(axis=1)

    def neighborhood(self, space: FiniteQMMSpace, E: Iterable[int], delta: float) -> np.ndarray:
        """(E)_delta = {x : dist_d(x, E) < delta}"""
        return np.flatnonzero(self.dist_to_set(space, E) < delta)

    def closure(self, space: FiniteQMMSpace, E: Iterable[int]) -> np.ndarray:
        """Points every ball around which meets E"""
        return np.flatnonzero(self.dist_to_set(space, E) == 0)

    def set_ops(
        self,
        space: FiniteQMMSpace,
        E: Iterable[int],
        F: Optional[Iterable[int]] = None,
        delta: Optional[float] = None,
    ) -> SetOperations:
        e = np.asarray(sorted(set(int(i) for i in E)), dtype=int)
        self._check_nonempty(e)
        closure = self.closure(space, e)
        nbhd = self.neighborhood(space, e, delta) if delta is not None else e
        return SetOperations(
            diam=self.diam(space, e),
            dist_between=self.dist_between(space, e, F) if F is not None else None,
            neighborhood=nbhd,
            closure=closure,
            closure_equals_set=bool(np.array_equal(closure, e)),
        )

    def ball_neighborhood_check(
        self, space: FiniteQMMSpace, center: int, r: float, delta: float
    ) -> bool:
        """(B(x, r))_delta inside B(x, C_d r); meaningful when C~_d delta <= r"""
        ball = space.members(center, r)
        nbhd = self.neighborhood(space, ball, delta)
        big = set(space.members(center, space.C_d * r).tolist())
        return set(nbhd.tolist()) <= big

    def hull_containment(self, space: FiniteQMMSpace, center: int, r: float) -> Dict[str, bool]:
        hull = set(self.open_hull(space, center, r).tolist())
        inner = set(space.members(center, r).tolist())
        outer = set(space.members(center, space.C_d * r).tolist())
        return {"contains_ball": inner <= hull, "inside_dilate": hull <= outer}

    def relabel(self, space: FiniteQMMSpace, perm: List[int]) -> FiniteQMMSpace:
        """Same space with points listed in the order perm"""
        p = np.asarray(perm, dtype=int)
        return self.validate_space(
            space.dist[np.ix_(p, p)],
            space.mu[p],
            [space.point_ids[i] for i in p],
        )
