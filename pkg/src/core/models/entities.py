"""
Domain entities for the qmms laboratory.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np


# Rows of the distance matrix processed at once by ball-mass kernels
ROW_CHUNK = 512


class NormKind(Enum):
    """Hajlasz-type (semi)norm families"""
    M_SOBOLEV = "M"
    M_TL = "TL"
    N_BESOV = "N"


class CertificateStatus(Enum):
    """How much a solver result can be trusted"""
    CERTIFIED = "CERTIFIED"
    UPPER_BOUND = "UPPER_BOUND"


class QuasiMetricMeasureSpace(ABC):
    """Finite set of atoms with a quasi-metric and strictly positive weights"""

    @property
    @abstractmethod
    def n(self) -> int:
        pass

    @property
    @abstractmethod
    def weights(self) -> np.ndarray:
        pass

    @abstractmethod
    def distances_from(self, i: int) -> np.ndarray:
        """Row d(i, .)"""
        pass

    @abstractmethod
    def ball_masses(self, r: float, centers: Optional[np.ndarray] = None) -> np.ndarray:
        """mu(B(x, r)) for each center x (all points when centers is None)"""
        pass

    @abstractmethod
    def tail_masses(self, x0: int, radii: np.ndarray) -> np.ndarray:
        """mu(X minus B(x0, R)) for each R"""
        pass

    @property
    @abstractmethod
    def C_d(self) -> float:
        pass

    @property
    @abstractmethod
    def C_d_tilde(self) -> float:
        pass

    @property
    @abstractmethod
    def diam(self) -> float:
        pass

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def members(self, center: int, r: float) -> np.ndarray:
        return np.flatnonzero(self.distances_from(center) < r)


@dataclass(frozen=True, eq=False)
class FiniteQMMSpace(QuasiMetricMeasureSpace):
    """Dense finite quasi-metric-measure space.

    ``log_mu`` is kept for spaces whose atoms underflow in double precision;
    ``mu`` then holds the floored values and ``log_mu`` the exact logarithms.
    """
    point_ids: Tuple[str, ...]
    dist: np.ndarray
    mu: np.ndarray
    cached_Cd: Optional[float] = None
    cached_Cd_tilde: Optional[float] = None
    log_mu: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.mu.shape[0])

    @property
    def weights(self) -> np.ndarray:
        return self.mu

    def distances_from(self, i: int) -> np.ndarray:
        return self.dist[i]

    def ball_masses(self, r: float, centers: Optional[np.ndarray] = None) -> np.ndarray:
        rows = np.arange(self.n) if centers is None else np.asarray(centers, dtype=int)
        out = np.empty(rows.shape[0])
        for start in range(0, rows.shape[0], ROW_CHUNK):
            block = rows[start:start + ROW_CHUNK]
            out[start:start + ROW_CHUNK] = (self.dist[block] < r) @ self.mu
        return out

    def tail_masses(self, x0: int, radii: np.ndarray) -> np.ndarray:
        row = self.dist[x0]
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        return np.array([self.mu[row >= R].sum() for R in radii])

    @cached_property
    def _constants(self) -> Tuple[float, float]:
        from src.core.services.calculations.space_calculation_service import (
            compute_quasi_constants,
        )
        return compute_quasi_constants(self.dist)

    @property
    def C_d(self) -> float:
        if self.cached_Cd is not None:
            return self.cached_Cd
        return self._constants[0]

    @property
    def C_d_tilde(self) -> float:
        if self.cached_Cd_tilde is not None:
            return self.cached_Cd_tilde
        return self._constants[1]

    @cached_property
    def diam(self) -> float:
        return float(self.dist.max())

    @cached_property
    def min_positive_distance(self) -> float:
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.dist, self.dist.T))


@dataclass(frozen=True, eq=False)
class DensityLine(QuasiMetricMeasureSpace):
    """Atoms on the real line with Euclidean distance.

    Ball masses come from prefix and suffix sums; whichever of the two is
    smaller is used so that masses far out in a decaying tail keep their
    relative precision.
    """
    positions: np.ndarray
    mu: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.mu.shape[0])

    @property
    def weights(self) -> np.ndarray:
        return self.mu

    @cached_property
    def _prefix(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.mu)))

    @cached_property
    def _suffix(self) -> np.ndarray:
        return np.concatenate((np.cumsum(self.mu[::-1])[::-1], [0.0]))

    def interval_mass(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Mass of atoms with index in [lo, hi)"""
        P, S = self._prefix, self._suffix
        return np.where(S[lo] < P[hi], S[lo] - S[hi], P[hi] - P[lo])

    def distances_from(self, i: int) -> np.ndarray:
        return np.abs(self.positions - self.positions[i])

    def ball_masses(self, r: float, centers: Optional[np.ndarray] = None) -> np.ndarray:
        x = self.positions if centers is None else self.positions[np.asarray(centers, dtype=int)]
        lo = np.searchsorted(self.positions, x - r, side="right")
        hi = np.searchsorted(self.positions, x + r, side="left")
        return self.interval_mass(lo, hi)

    def tail_masses(self, x0: int, radii: np.ndarray) -> np.ndarray:
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        c = self.positions[x0]
        # |x - c| >= R splits into a left and a right run of atoms
        left = np.searchsorted(self.positions, c - radii, side="right")
        right = np.searchsorted(self.positions, c + radii, side="left")
        zeros = np.zeros_like(left)
        ends = np.full_like(right, self.n)
        return self.interval_mass(zeros, left) + self.interval_mass(right, ends)

    @property
    def C_d(self) -> float:
        """Euclidean value; attained by three equally spaced atoms, so exact on uniform grids"""
        return 2.0 if self.n >= 3 else 1.0

    @property
    def C_d_tilde(self) -> float:
        return 1.0

    @property
    def diam(self) -> float:
        return float(self.positions[-1] - self.positions[0])

    def index_below(self, x: float) -> int:
        """Number of atoms with position < x"""
        return int(np.searchsorted(self.positions, x, side="left"))


@dataclass(frozen=True)
class Ball:
    """Ball as a triple: center, radius and the member set"""
    center: int
    radius: float
    members: Tuple[int, ...]
    mass: float


@dataclass(frozen=True, eq=False)
class FunctionOnSpace:
    """Real function on the atoms of a space"""
    values: np.ndarray
    space: QuasiMetricMeasureSpace

    def __post_init__(self) -> None:
        from src.core.models.exceptions import InvalidParams

        if self.values.shape != (self.space.n,):
            raise InvalidParams(
                f"function has {self.values.shape} values, space has {self.space.n} points"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParams("function values must be finite")

    def __sub__(self, other: "FunctionOnSpace") -> "FunctionOnSpace":
        return FunctionOnSpace(self.values - other.values, self.space)

    def scaled(self, factor: float) -> "FunctionOnSpace":
        return FunctionOnSpace(factor * self.values, self.space)


@dataclass(frozen=True, eq=False)
class LevelConstraints:
    """Pair constraints g(i) + g(j) >= c active on one dyadic level.

    ``level`` is None for the single collapsed level of the Sobolev kind.
    """
    level: Optional[int]
    i: np.ndarray
    j: np.ndarray
    c: np.ndarray

    @property
    def size(self) -> int:
        return int(self.c.shape[0])


@dataclass(frozen=True, eq=False)
class GradientSequence:
    """Per-level nonnegative gradients, one row per stored level"""
    levels: Tuple[Optional[int], ...]
    g: np.ndarray

    def at(self, level: Optional[int]) -> np.ndarray:
        if level in self.levels:
            return self.g[self.levels.index(level)]
        return np.zeros(self.g.shape[1])

    def pointwise_sup(self) -> np.ndarray:
        if self.g.shape[0] == 0:
            return np.zeros(self.g.shape[1])
        return self.g.max(axis=0)


@dataclass
class NormProblem:
    """Parameters of one minimal-gradient program"""
    alpha: float
    p: float
    q: float
    kind: NormKind
    space: FiniteQMMSpace
    u: FunctionOnSpace


@dataclass
class SolverDiagnostics:
    """Convergence record of a solver run"""
    iterations: int
    residual: float
    certified_gap: float
    status: CertificateStatus
    method: str
    lower_bound: float = 0.0


@dataclass
class NormResult:
    """Computed (semi)norm together with its optimal gradient"""
    problem: NormProblem
    seminorm: float
    full_norm: float
    optimal_g: GradientSequence
    solver: SolverDiagnostics
    level_minima: Dict[Optional[int], float] = field(default_factory=dict)


@dataclass
class ChainMetricResult:
    """beta-power chain metric and its distortion against d"""
    beta: float
    sigma: np.ndarray
    distortion: float
    rho: np.ndarray
    kappa: float
    kappa_bound: float


@dataclass
class IndexProfile:
    """Distortion of the chain metric along a grid of exponents"""
    betas: np.ndarray
    distortions: np.ndarray
    threshold: float
    feasible_sup: Optional[float]
    monotone: bool


class NetKind(Enum):
    MAXIMAL_SEPARATED = "maximal_separated"
    NET = "net"


@dataclass
class NetResult:
    """Greedy separated set and its covering data"""
    epsilon: float
    centers: List[int]
    kind: NetKind
    cover_radius_factor: float


@dataclass
class DoublingReport:
    """Doubling data of a space at several scales"""
    c: float
    deltas: np.ndarray
    Delta_c: np.ndarray
    h: Dict[float, float] = field(default_factory=dict)
    at_infinity: Optional[float] = None
    ahlfors: Optional[Tuple[float, float]] = None


@dataclass
class TailRatioReport:
    """Ratios mu(X - B(x0, R)) / mu(X - B(x0, C_d R)) along a radius grid"""
    x0: int
    radii: np.ndarray
    ratios: np.ndarray
    liminf: float
    growing: bool


@dataclass
class IntegrabilityReport:
    """Integral of 1/mu(B(x, r)) with its truncation curve"""
    r: float
    value: float
    diverges: bool
    verdict: str
    truncation_curve: List[Tuple[float, float]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class InequalityReport:
    """Two sides of an inequality evaluated by exact sums"""
    name: str
    lhs: float
    rhs: float
    holds: bool
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class GeneratorSpec:
    """Name and parameters of an example space generator"""
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ReferenceClaim:
    """Closed-form statement attached to a generated space"""
    claim: str
    provenance: str
    value: Optional[float] = None


@dataclass
class ReferenceCard:
    """All reference claims for one generated space"""
    generator: GeneratorSpec
    claims: List[ReferenceClaim] = field(default_factory=list)


@dataclass
class FunctionFamily:
    """Finite family of functions on one space, optionally with gradients"""
    members: List[FunctionOnSpace]
    nu: Optional[np.ndarray] = None
    nu_constant: Optional[float] = None
    gradients: Optional[List[np.ndarray]] = None
    alpha: Optional[float] = None
    norm_bound: Optional[float] = None

    @property
    def space(self) -> QuasiMetricMeasureSpace:
        return self.members[0].space


@dataclass
class FrechetCertificate:
    """Total-boundedness certificate of a family at scale epsilon"""
    epsilon: float
    delta: float
    lam: float
    partition: List[np.ndarray]
    exceptional_sets: List[np.ndarray]
    derived_net: List[np.ndarray]
    M: int
    max_l0_distance: float
    route: str

    @property
    def net_size_bound(self) -> int:
        return (2 * self.M + 1) ** len(self.partition)


@dataclass
class Refusal:
    """Evidence that no certificate was found within the cell budget"""
    epsilon: float
    reason: str
    cell: Optional[int] = None
    member: Optional[int] = None
    pair: Optional[Tuple[int, int]] = None
    oscillation: Optional[float] = None
    cells_tried: int = 0


@dataclass
class ExceptionalSetData:
    """Exceptional set and constants for one family member"""
    E: np.ndarray
    lam: float
    delta: float
    eta: float
    measure: float
    conditions: Dict[str, bool] = field(default_factory=dict)


@dataclass
class WitnessSequence:
    """Non-compactness witness sequence with its separation and norm data"""
    functions: List[FunctionOnSpace]
    pairwise_lp_gap: float
    norm_bound: float
    recipe: str
    gradients: List[np.ndarray] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class BumpResult:
    """Bump function with its certified Holder data"""
    phi: FunctionOnSpace
    beta: float
    holder_quotient: float
    holder_bound: float
    witness_pair: Tuple[int, int]
    dist_d: float
    dist_sigma: float
    shape_value: float
    norms: Dict[str, float] = field(default_factory=dict)


@dataclass
class ModulusCurve:
    """Equi-integrability modulus estimates along a grid of masses"""
    deltas: np.ndarray
    greedy: np.ndarray
    fractional: np.ndarray
    verdict: str


def as_index_array(indices: Sequence[int]) -> np.ndarray:
    return np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
