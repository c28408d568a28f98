"""
Strategy Pattern for the example space generators.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import itertools
import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Tuple, Type

import numpy as np
from scipy.special import log_ndtr

from src.core.models.entities import (
    DensityLine,
    FiniteQMMSpace,
    QuasiMetricMeasureSpace,
    ReferenceClaim,
)
from src.core.models.exceptions import InvalidParams
from src.core.services.calculations.space_calculation_service import SpaceCalculationService

logger = logging.getLogger(__name__)

TINY = np.finfo(float).tiny

# Spaces above this size get their constants computed lazily
EAGER_CONSTANTS_LIMIT = 400


def first_primes(count: int) -> List[int]:
    primes: List[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


def density_line(
    density: Callable[[np.ndarray], np.ndarray],
    T: float,
    resolution: int,
    metadata: Dict[str, Any],
) -> DensityLine:
    """Trapezoid cells of width about 1/resolution on [0, T], atoms at midpoints"""
    cells = max(2, int(math.ceil(T * resolution)))
    edges = np.linspace(0.0, T, cells + 1)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        f = density(edges)
    f = np.nan_to_num(f, nan=0.0)
    mu = np.diff(edges) * 0.5 * (f[:-1] + f[1:])
    mu = np.maximum(mu, TINY)
    positions = 0.5 * (edges[:-1] + edges[1:])
    positions.setflags(write=False)
    mu.setflags(write=False)
    return DensityLine(positions=positions, mu=mu, metadata=metadata)


class SpaceGenerationStrategy(ABC):
    """Abstract base class for example space generators"""

    defaults: Dict[str, Any] = {}

    def __init__(self, space_service: SpaceCalculationService):
        self.spaces = space_service

    def resolve(self, params: Dict[str, Any]) -> Dict[str, Any]:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise InvalidParams(
                f"{self.get_strategy_name()}: unknown parameters {sorted(unknown)}"
            )
        merged = dict(self.defaults)
        for key, value in params.items():
            try:
                merged[key] = type(self.defaults[key])(value)
            except (TypeError, ValueError) as e:
                raise InvalidParams(f"{key}={value!r}: {e}") from e
        self.check(merged)
        return merged

    def check(self, params: Dict[str, Any]) -> None:
        """Raise InvalidParams for out-of-range parameters"""
        for key in ("beta", "s", "T"):
            if key in params and not params[key] > 0:
                raise InvalidParams(f"{key} must be positive, got {params[key]}")
        for key in ("n", "resolution"):
            if key in params and params[key] < 2:
                raise InvalidParams(f"{key} must be at least 2, got {params[key]}")

    @abstractmethod
    def generate(self, params: Dict[str, Any]) -> QuasiMetricMeasureSpace:
        pass

    @abstractmethod
    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        pass

    @abstractmethod
    def get_strategy_name(self) -> str:
        pass


class EuclideanGridStrategy(SpaceGenerationStrategy):
    """Points i * length / n, i < n, with uniform weights 1/n"""

    defaults = {"n": 10, "length": 1.0}

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        x = np.arange(params["n"]) * params["length"] / params["n"]
        return self.spaces.validate_space(
            np.abs(x[:, None] - x[None, :]),
            np.full(params["n"], 1.0 / params["n"]),
            [repr(float(v)) for v in x],
            compute_constants=params["n"] <= EAGER_CONSTANTS_LIMIT,
            metadata={"positions": x.tolist()},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim("C_d = 2 for the Euclidean distance", "Section 2.1 (euclidean.constant)", 2.0),
            ReferenceClaim("lower Ahlfors regular with s = 1", "Section 3 (euclidean.ahlfors)", 1.0),
        ]

    def get_strategy_name(self) -> str:
        return "euclidean_grid"


class SnowflakeGridStrategy(EuclideanGridStrategy):
    """Euclidean grid with distances raised to the power s"""

    defaults = {"n": 10, "length": 1.0, "s": 0.5}

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        x = np.arange(params["n"]) * params["length"] / params["n"]
        return self.spaces.validate_space(
            np.abs(x[:, None] - x[None, :]) ** params["s"],
            np.full(params["n"], 1.0 / params["n"]),
            [repr(float(v)) for v in x],
            compute_constants=params["n"] <= EAGER_CONSTANTS_LIMIT,
            metadata={"positions": x.tolist(), "snowflake": params["s"]},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        s = params["s"]
        return [
            ReferenceClaim(
                "C_{|x-y|^s} = 2^s", "Section 2.1 (snowflake.constant)", 2.0 ** s
            ),
            ReferenceClaim(
                "ind(X, d^s) = ind(X, d) / s", "Section 2.1 (snowflake.index)", None
            ),
        ]

    def get_strategy_name(self) -> str:
        return "snowflake_grid"


class DiscreteNStrategy(SpaceGenerationStrategy):
    """Points 1..n, discrete metric, mu({k}) = 2^-k"""

    defaults = {"n": 10}

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        n = params["n"]
        dist = 1.0 - np.eye(n)
        mu = np.ldexp(1.0, -np.arange(1, n + 1))
        return self.spaces.validate_space(
            dist, mu, [str(k) for k in range(1, n + 1)],
            compute_constants=n <= EAGER_CONSTANTS_LIMIT,
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim(
                "Delta_c(delta) = 1 for every delta in (0, 1/c]",
                "Example 3.8 (discrete_N.doubling)", 1.0,
            ),
            ReferenceClaim("mu is not doubling", "Example 3.8 (discrete_N.not_doubling)"),
            ReferenceClaim(
                "the ball B(1, 2) is the whole space and is not totally bounded",
                "Example 3.8 (discrete_N.ball)",
            ),
            ReferenceClaim(
                "h(r) = 2^-n for r <= 1 on the truncation",
                "Example 3.8 (discrete_N.h)", 2.0 ** -params["n"],
            ),
        ]

    def get_strategy_name(self) -> str:
        return "discrete_N"


class ExpDensityStrategy(SpaceGenerationStrategy):
    """d mu = exp(x^beta) dx on [0, T]"""

    defaults = {"beta": 0.5, "T": 8.0, "resolution": 10_000}

    def generate(self, params: Dict[str, Any]) -> DensityLine:
        beta = params["beta"]
        return density_line(
            lambda x: np.exp(x ** beta), params["T"], params["resolution"],
            {"generator": self.get_strategy_name(), **params},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        claims = [ReferenceClaim("mu(R+) is infinite", "Example 3.9 (exp_density.mass)")]
        if params["beta"] <= 1:
            claims += [
                ReferenceClaim(
                    "Delta_c(delta) <= 2c exp((c delta)^beta)",
                    "Example 3.9 (exp_density.doubling)",
                ),
                ReferenceClaim("mu is not doubling", "Example 3.9 (exp_density.not_doubling)"),
            ]
        else:
            claims.append(
                ReferenceClaim("mu is integrable", "Example 3.20 (exp_density.integrable)")
            )
        return claims

    @staticmethod
    def doubling_bound(c: float, delta: float, beta: float) -> float:
        return 2 * c * math.exp((c * delta) ** beta)

    def get_strategy_name(self) -> str:
        return "exp_density"


class GaussDensityStrategy(SpaceGenerationStrategy):
    """d mu = exp(-x^beta) dx on [0, T]"""

    defaults = {"beta": 2.0, "T": 16.0, "resolution": 10_000}

    def generate(self, params: Dict[str, Any]) -> DensityLine:
        beta = params["beta"]
        return density_line(
            lambda x: np.exp(-(x ** beta)), params["T"], params["resolution"],
            {"generator": self.get_strategy_name(), **params},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        claims = [ReferenceClaim("mu(R+) is finite", "Example 3.10 (gauss_density.mass)")]
        if params["beta"] <= 1:
            claims += [
                ReferenceClaim(
                    "Delta_c(delta) <= 2c exp(((c + 1) delta)^beta)",
                    "Example 3.10 (gauss_density.doubling)",
                ),
                ReferenceClaim(
                    "unbounded and (C_d, delta)-doubling, hence not integrable",
                    "Prop 3.22 (gauss_density.not_integrable)",
                ),
            ]
        else:
            claims.append(
                ReferenceClaim("mu is integrable", "Example 3.19 (gauss_density.integrable)")
            )
        return claims

    @staticmethod
    def doubling_bound(c: float, delta: float, beta: float) -> float:
        return 2 * c * math.exp(((c + 1) * delta) ** beta)

    def get_strategy_name(self) -> str:
        return "gauss_density"


class InvExpDensityStrategy(SpaceGenerationStrategy):
    """d mu = exp(-1/x^beta) dx on [0, T]"""

    defaults = {"beta": 1.0, "T": 4.0, "resolution": 10_000}

    def generate(self, params: Dict[str, Any]) -> DensityLine:
        beta = params["beta"]
        return density_line(
            lambda x: np.exp(-1.0 / x ** beta), params["T"], params["resolution"],
            {"generator": self.get_strategy_name(), **params},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim(
                "Delta_c(delta) <= 4c exp((2/delta)^beta)",
                "Example 3.11 (inv_exp_density.doubling)",
            ),
            ReferenceClaim(
                "mu(B(0, 2x)) / mu(B(0, x)) is unbounded as x -> 0+",
                "Example 3.11 (inv_exp_density.not_locally_doubling)",
            ),
        ]

    @staticmethod
    def doubling_bound(c: float, delta: float, beta: float) -> float:
        return 4 * c * math.exp((2 / delta) ** beta)

    def get_strategy_name(self) -> str:
        return "inv_exp_density"


class DyadicTailStrategy(SpaceGenerationStrategy):
    """
    f = 1 on [0, 1) and f = a_k exp(2^k x - 2 * 4^k) on [2^k, 2^(k+1)), k < K.

    Block k carries mass 2^-k; the last block also carries the mass of the
    blocks beyond the truncation so that every tail sum stays exact.
    """

    defaults = {"K": 8, "resolution": 4}

    def check(self, params: Dict[str, Any]) -> None:
        if params["K"] < 3:
            raise InvalidParams("dyadic_tail needs K >= 3 blocks")
        if params["resolution"] < 1:
            raise InvalidParams("resolution must be at least 1")

    def generate(self, params: Dict[str, Any]) -> DensityLine:
        K, res = params["K"], params["resolution"]
        positions: List[np.ndarray] = [(np.arange(res) + 0.5) / res]
        log_mu: List[np.ndarray] = [np.full(res, -math.log(res))]
        for k in range(K):
            lo, scale = 2.0 ** k, 2.0 ** k
            edges = lo + np.arange(int(lo) * res + 1) / res
            block_mass = 2.0 ** -k if k < K - 1 else 2.0 ** -(K - 2)
            # cell [a, b): block_mass * (e^{2^k (b - 2^{k+1})} - e^{2^k (a - 2^{k+1})}) / (1 - e^{-4^k})
            upper = scale * (edges[1:] - 2 * lo)
            log_cell = (
                math.log(block_mass)
                + upper
                + np.log(-np.expm1(-scale / res))
                - math.log(-math.expm1(-(4.0 ** k)))
            )
            positions.append(0.5 * (edges[:-1] + edges[1:]))
            log_mu.append(log_cell)
        x = np.concatenate(positions)
        lm = np.concatenate(log_mu)
        mu = np.maximum(np.exp(lm), TINY)
        x.setflags(write=False)
        mu.setflags(write=False)
        return DensityLine(
            positions=x,
            mu=mu,
            metadata={"generator": self.get_strategy_name(), **params},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim(
                "mu(X minus B(0, N)) / mu(X minus B(0, 2N)) <= 4",
                "Def 3.17 (dyadic_tail.doubling_at_infinity)", 4.0,
            ),
            ReferenceClaim(
                "mu is not (2, delta)-doubling for any delta",
                "Thm 6.14 (dyadic_tail.not_doubling)",
            ),
        ]

    def get_strategy_name(self) -> str:
        return "dyadic_tail"


class UltrametricCantorStrategy(SpaceGenerationStrategy):
    """Words of length depth over branching letters, d = 2^-(common prefix length)"""

    defaults = {"depth": 4, "branching": 2}

    def check(self, params: Dict[str, Any]) -> None:
        if params["depth"] < 1 or params["branching"] < 2:
            raise InvalidParams("ultrametric_cantor needs depth >= 1 and branching >= 2")

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        depth, b = params["depth"], params["branching"]
        words = np.array(list(itertools.product(range(b), repeat=depth)))
        same = words[:, None, :] == words[None, :, :]
        prefix = np.cumprod(same, axis=2).sum(axis=2)
        dist = np.where(prefix == depth, 0.0, np.ldexp(1.0, -prefix))
        n = words.shape[0]
        return self.spaces.validate_space(
            dist, np.full(n, 1.0 / n), ["".join(map(str, w)) for w in words],
            compute_constants=n <= EAGER_CONSTANTS_LIMIT,
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim("C_d = 1 (ultrametric)", "Section 2.1 (ultrametric.constant)", 1.0),
            ReferenceClaim(
                "ind(X, d) is infinite", "Section 2.1 (ultrametric.index)", math.inf
            ),
        ]

    def get_strategy_name(self) -> str:
        return "ultrametric_cantor"


class UniformSampleStrategy(SpaceGenerationStrategy):
    """Seeded uniform points in [0, 1]^dim with Euclidean distance"""

    defaults = {"n": 8, "dim": 1, "seed": 0, "random_weights": 0}

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        rng = np.random.default_rng(params["seed"])
        pts = rng.random((params["n"], params["dim"]))
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        if params["random_weights"]:
            mu = rng.uniform(0.1, 1.0, params["n"])
        else:
            mu = np.full(params["n"], 1.0 / params["n"])
        return self.spaces.validate_space(
            dist, mu, compute_constants=params["n"] <= EAGER_CONSTANTS_LIMIT,
            metadata={"points": pts.tolist()},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [ReferenceClaim("Euclidean distance, C_d <= 2", "Section 2.1 (euclidean.constant)", 2.0)]

    def get_strategy_name(self) -> str:
        return "uniform_sample"


class InfiniteCombStrategy(SpaceGenerationStrategy):
    """
    Finite truncation of the infinite comb.

    Teeth are the tuples of D^1..D^depth with D = {j / (4(b + 1)) : j = 1..b},
    ranked by the product of the primes coding their letters (ties broken
    lexicographically). Tooth k of length n lies at
    (d_1, d_2/2, ..., d_n/2^(n-1), t), t in (0, 2^(-n-2)), with density
    exp(-(t + k)^2); J_0 = {(t, 0, ...) : t in (0, 1/4)} has density exp(-t^2).
    Cell masses are kept in log space because deep teeth underflow.
    """

    defaults = {"depth": 3, "branching": 2, "resolution": 16}

    def check(self, params: Dict[str, Any]) -> None:
        if params["depth"] < 1:
            raise InvalidParams("comb depth must be at least 1")
        if params["branching"] < 1:
            raise InvalidParams("comb branching must be at least 1")
        if params["resolution"] < 2:
            raise InvalidParams("resolution must be at least 2")

    @staticmethod
    def teeth(depth: int, branching: int) -> List[Tuple[int, ...]]:
        primes = first_primes(branching)
        tuples = [
            t for n in range(1, depth + 1) for t in itertools.product(range(branching), repeat=n)
        ]
        return sorted(tuples, key=lambda t: (math.prod(primes[i] for i in t), t))

    @staticmethod
    def log_cell_masses(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
        """log of the integral of exp(-(y + k)^2) over [a, b]"""
        # erfc(z) = 2 * ndtr(-z * sqrt(2))
        la = math.log(2.0) + log_ndtr(-(a + k) * math.sqrt(2.0))
        lb = math.log(2.0) + log_ndtr(-(b + k) * math.sqrt(2.0))
        return math.log(math.sqrt(math.pi) / 2) + la + np.log1p(-np.exp(lb - la))

    def coordinates(self, params: Dict[str, Any]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        depth, b, res = params["depth"], params["branching"], params["resolution"]
        letters = np.arange(1, b + 1) / (4.0 * (b + 1))
        width = depth + 1

        coords: List[np.ndarray] = []
        log_mu: List[np.ndarray] = []
        tooth_ids: List[np.ndarray] = []

        grid = np.arange(res + 1) / res
        a0 = 0.25
        block = np.zeros((res, width))
        block[:, 0] = 0.5 * (grid[:-1] + grid[1:]) * a0
        coords.append(block)
        log_mu.append(self.log_cell_masses(grid[:-1] * a0, grid[1:] * a0, 0))
        tooth_ids.append(np.zeros(res, dtype=int))

        for k, word in enumerate(self.teeth(depth, b), start=1):
            n = len(word)
            a_k = 2.0 ** (-n - 2)
            block = np.zeros((res, width))
            for pos, letter in enumerate(word):
                block[:, pos] = letters[letter] / 2.0 ** pos
            block[:, n] = 0.5 * (grid[:-1] + grid[1:]) * a_k
            coords.append(block)
            log_mu.append(self.log_cell_masses(grid[:-1] * a_k, grid[1:] * a_k, k))
            tooth_ids.append(np.full(res, k, dtype=int))

        return np.vstack(coords), np.concatenate(log_mu), np.concatenate(tooth_ids)

    @staticmethod
    def comb_distance(X: np.ndarray) -> np.ndarray:
        """|x_kappa - y_kappa| + sum over later coordinates of x_m + y_m"""
        n, width = X.shape
        # suffix[i, m] = sum of X[i, m+1:]
        suffix = np.cumsum(X[:, ::-1], axis=1)[:, ::-1] - X
        dist = np.zeros((n, n))
        for start in range(0, n, 256):
            rows = X[start:start + 256]
            neq = rows[:, None, :] != X[None, :, :]
            kappa = np.argmax(neq, axis=2)
            ii = np.arange(rows.shape[0])[:, None]
            jj = np.arange(n)[None, :]
            head = np.abs(rows[ii, kappa] - X[jj, kappa])
            tail = suffix[start + ii, kappa] + suffix[jj, kappa]
            block = head + tail
            block[~neq.any(axis=2)] = 0.0
            dist[start:start + 256] = block
        return dist

    def generate(self, params: Dict[str, Any]) -> FiniteQMMSpace:
        X, log_mu, tooth = self.coordinates(params)
        dist = self.comb_distance(X)
        mu = np.maximum(np.exp(log_mu), TINY)
        logger.debug("comb with %d teeth and %d atoms", int(tooth.max()), X.shape[0])
        return self.spaces.validate_space(
            dist,
            mu,
            [f"J{k}:{i}" for i, k in enumerate(tooth)],
            compute_constants=X.shape[0] <= EAGER_CONSTANTS_LIMIT,
            log_mu=log_mu,
            metadata={"tooth": tooth.tolist(), "coordinates": X.tolist(), **params},
        )

    def reference_claims(self, params: Dict[str, Any]) -> List[ReferenceClaim]:
        return [
            ReferenceClaim(
                "integral over J_0 of 1/mu(B(x, r)) <= e^(1/16) / r for 0 < r < 1/4",
                "Example 6.8 (infinite_comb.J0_bound)",
            ),
            ReferenceClaim("d is a metric (C_d <= 2, C~_d = 1)", "Example 6.8 (infinite_comb.metric)", 2.0),
            ReferenceClaim("mu is integrable", "Example 6.8 (infinite_comb.integrable)"),
        ]

    def get_strategy_name(self) -> str:
        return "infinite_comb"


class SpaceGenerationFactory:
    """Factory for example space generators"""

    _strategies: Dict[str, Type[SpaceGenerationStrategy]] = {
        "euclidean_grid": EuclideanGridStrategy,
        "snowflake_grid": SnowflakeGridStrategy,
        "discrete_N": DiscreteNStrategy,
        "exp_density": ExpDensityStrategy,
        "gauss_density": GaussDensityStrategy,
        "inv_exp_density": InvExpDensityStrategy,
        "dyadic_tail": DyadicTailStrategy,
        "infinite_comb": InfiniteCombStrategy,
        "ultrametric_cantor": UltrametricCantorStrategy,
        "uniform_sample": UniformSampleStrategy,
    }

    @classmethod
    def create_strategy(
        cls, name: str, space_service: SpaceCalculationService
    ) -> SpaceGenerationStrategy:
        """
        Create generator strategy for the given name.

        Raises:
            ValueError: If the generator name is not supported
        """
        if name not in cls._strategies:
            raise ValueError(f"Unsupported generator: {name}")
        return cls._strategies[name](space_service)

    @classmethod
    def get_supported_names(cls) -> List[str]:
        return list(cls._strategies.keys())

    @classmethod
    def register_strategy(cls, name: str, strategy_class: Type[SpaceGenerationStrategy]) -> None:
        cls._strategies[name] = strategy_class
