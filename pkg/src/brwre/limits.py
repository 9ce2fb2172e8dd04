"""Closed-form limit rate functions for the CLT and local limit corrections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .env import ExpectedMoments
from .special import Phi, phi

__all__ = [
    "IntervalSet",
    "RateInputs",
    "v_rate",
    "v_rate_terms",
    "set_geometry",
    "c_of_A",
    "mu_rate",
    "gaussian_window_integral",
]


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of pairwise disjoint closed intervals ``[a_i, b_i]``.

    Endpoints may be infinite, so ``IntervalSet.half_line(t)`` represents
    ``(-inf, t]``. Intervals are stored sorted by left endpoint.
    """

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for a, b in ivs:
            if math.isnan(a) or math.isnan(b) or a > b:
                raise ValueError(f"bad interval [{a}, {b}]")
        for (_, b0), (a1, _) in zip(ivs[:-1], ivs[1:]):
            if a1 <= b0:
                raise ValueError("intervals must be pairwise disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def of(cls, *pairs: Iterable[float]) -> "IntervalSet":
        return cls(tuple(tuple(p) for p in pairs))

    @classmethod
    def half_line(cls, t: float) -> "IntervalSet":
        return cls(((-math.inf, t),))

    @classmethod
    def parse(cls, text: str) -> "IntervalSet":
        """Parse ``"a1:b1;a2:b2"``."""
        pairs = []
        for chunk in text.split(";"):
            if chunk.strip():
                a, b = chunk.split(":")
                pairs.append((float(a), float(b)))
        return cls(tuple(pairs))

    def __str__(self) -> str:
        return ";".join(f"{a!r}:{b!r}" for a, b in self.intervals)

    def shift(self, x: float) -> "IntervalSet":
        return IntervalSet(tuple((a + x, b + x) for a, b in self.intervals))

    def count(self, positions: np.ndarray) -> int:
        """Number of entries of ``positions`` lying in the set (with multiplicity)."""
        if len(positions) == 0:
            return 0
        srt = np.sort(positions)
        total = 0
        for a, b in self.intervals:
            total += int(np.searchsorted(srt, b, side="right") - np.searchsorted(srt, a, side="left"))
        return total

    def contains(self, positions: np.ndarray) -> np.ndarray:
        mask = np.zeros(len(positions), dtype=bool)
        for a, b in self.intervals:
            mask |= (positions >= a) & (positions <= b)
        return mask


@dataclass(frozen=True)
class RateInputs:
    """Environment expectations plus one path's limit estimates (W, V1, V2)."""

    e_sigma2: float
    e_sigma3: float
    e_sigma4_excess: float
    W: float
    V1: float
    V2: float = 0.0

    def __post_init__(self):
        if not self.e_sigma2 > 0:
            raise ValueError("E sigma_0^(2) must be positive")

    @classmethod
    def from_moments(cls, moments: ExpectedMoments, W: float, V1: float, V2: float = 0.0) -> "RateInputs":
        return cls(moments.e_sigma2, moments.e_sigma3, moments.e_sigma4_excess, W, V1, V2)


def v_rate_terms(t, inputs: RateInputs):
    """The two summands of the CLT rate function, returned separately."""
    s2 = inputs.e_sigma2
    first = -phi(t) * inputs.V1 / math.sqrt(s2)
    second = inputs.e_sigma3 * (1 - np.asarray(t) ** 2) * phi(t) * inputs.W / (6 * s2**1.5)
    return first, second


def v_rate(t, inputs: RateInputs):
    first, second = v_rate_terms(t, inputs)
    return first + second


def set_geometry(A: IntervalSet) -> tuple[float, float]:
    """Lebesgue measure of ``A`` and its barycentre."""
    if any(math.isinf(a) or math.isinf(b) for a, b in A.intervals):
        raise ValueError("set must be bounded")
    size = math.fsum(b - a for a, b in A.intervals)
    if not size > 0:
        raise ValueError("zero-measure set")
    moment = math.fsum((b * b - a * a) / 2 for a, b in A.intervals)
    return size, moment / size


def c_of_A(A: IntervalSet, inputs: RateInputs) -> float:
    _, xbar = set_geometry(A)
    s2, s3 = inputs.e_sigma2, inputs.e_sigma3
    W = inputs.W
    return (W * inputs.e_sigma4_excess
            + 4 * s3 * (inputs.V1 - xbar * W)
            - 5 * s3**2 * W / (3 * s2))


def mu_rate(A: IntervalSet, inputs: RateInputs) -> float:
    size, xbar = set_geometry(A)
    s2 = inputs.e_sigma2
    return (size / (2 * s2) * (inputs.V2 + 2 * xbar * inputs.V1)
            + size * c_of_A(A, inputs) / (8 * s2**2))


def gaussian_window_integral(A: IntervalSet, s: float) -> float:
    """Integral of exp(-x^2 / (2 s^2)) over ``A``."""
    if not s > 0:
        raise ValueError("s must be positive")
    total = 0.0
    for a, b in A.intervals:
        # difference of upper tails is more accurate on the right half-line
        if a >= 0:
            mass = Phi(-a / s) - Phi(-b / s)
        else:
            mass = Phi(b / s) - Phi(a / s)
        total += mass
    return s * math.sqrt(2 * math.pi) * total
