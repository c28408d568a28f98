"""
Domain exceptions for the qmms laboratory.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""


class QMMSError(Exception):
    """Base class for every domain error raised by qmms"""


class InvalidSpace(QMMSError):
    """Structural problem with raw space data (shape, size, lengths)"""


class ZeroOffDiagonal(InvalidSpace):
    """Two distinct points at distance zero"""

    def __init__(self, i: int, j: int):
        super().__init__(f"distinct points {i} and {j} are at distance 0")
        self.pair = (i, j)


class NegativeDistance(InvalidSpace):
    """Negative or non-finite distance entry"""

    def __init__(self, i: int, j: int, value: float):
        super().__init__(f"dist[{i}][{j}] = {value!r} is not a nonnegative real")
        self.pair = (i, j)


class NonpositiveWeight(InvalidSpace):
    """Measure atom that is not strictly positive and finite"""

    def __init__(self, i: int, value: float):
        super().__init__(f"mu[{i}] = {value!r} must be strictly positive")
        self.index = i


class EmptySet(QMMSError):
    """Set operation called on an empty index set"""


class EmptyTail(QMMSError):
    """Complement of a ball carries no mass"""


# Witness constructors use this name for the same condition
TailEmpty = EmptyTail


class InvalidParams(QMMSError):
    """Generator or operation parameters outside their valid range"""


class SolverDiverged(QMMSError):
    """Certified solver failed to reach its tolerance within the iteration budget"""

    def __init__(self, message: str, iterations: int = 0, gap: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.gap = gap


class InfeasibleInput(QMMSError):
    """Input gradient violates its own pair constraints"""


class InfeasibleGradient(QMMSError):
    """Gradient is not a Hajlasz gradient of the given function"""


class TouchingSets(QMMSError):
    """Sets at distance zero cannot be separated by a bump"""


class MissingGradient(QMMSError):
    """Family member carries no gradient where one is required"""


class NoSeparatedPair(QMMSError):
    """Space has fewer than two suitably separated points"""


class BadExponents(QMMSError):
    """Exponents violate the ordering an inequality needs"""
