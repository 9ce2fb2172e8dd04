"""Edgeworth expansion terms for sums of independent, non-identical steps.

For independent centred steps X_j with cumulants gamma_{nu,j} and
B_n^2 = sum_j gamma_{2,j}, the normalised cumulant sums are

    lambda_{nu,n} = n^{(nu-2)/2} B_n^{-nu} sum_j gamma_{nu,j}

and the distribution function of the standardised sum is approximated by
``Phi(x) + sum_nu Q_{nu,n}(x) n^{-nu/2}``. The windowed versions used for the
branching random walk (steps k_n..n-1 of an environment) are exposed as the
kappa/D/R correction terms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .env import EnvironmentRealization, MomentProfile
from .special import Phi, hermite, phi

__all__ = [
    "HypothesisError",
    "CumulantSet",
    "EdgeworthTerms",
    "CorrectionTerms",
    "central_to_cumulants",
    "window_cumulants",
    "iid_cumulants",
    "build_terms",
    "q_partitions",
    "q_term",
    "expansion_cdf",
    "kappa_terms",
    "remainder_R",
    "choose_k",
    "validate_beta",
    "export_expansion_table",
]

MAX_ORDER = 3


class HypothesisError(ValueError):
    """A theorem hypothesis is violated (empty beta window, subcritical law, ...)."""


def central_to_cumulants(mean: float, mu) -> np.ndarray:
    """Cumulants gamma_2..gamma_6 from central moments mu_2..mu_6.

    The mean only shifts the first cumulant and is not needed for orders >= 2.
    Accepts a length-5 sequence or an array whose last axis has length 5.
    """
    mu = np.asarray(mu, dtype=float)
    m2, m3, m4, m5, m6 = (mu[..., i] for i in range(5))
    if np.any(m2 < 0):
        raise ValueError("second central moment must be nonnegative")
    return np.stack([
        m2,
        m3,
        m4 - 3 * m2**2,
        m5 - 10 * m3 * m2,
        m6 - 15 * m4 * m2 - 10 * m3**2 + 30 * m2**3,
    ], axis=-1)


@dataclass(frozen=True)
class CumulantSet:
    """Per-step cumulants (rows: steps 0..n-1; columns: orders 2..6).

    Steps before ``k_n`` are zero (padding), so ``n`` is the full length.
    """

    gammas: np.ndarray
    k_n: int = 0

    @property
    def n(self) -> int:
        return len(self.gammas)

    def sums(self) -> np.ndarray:
        return self.gammas[self.k_n:].sum(axis=0)


def window_cumulants(realization: EnvironmentRealization, k_n: int, n: int) -> CumulantSet:
    """Displacement cumulants of steps k_n..n-1, zero-padded below k_n."""
    if not 0 <= k_n < n <= len(realization):
        raise ValueError("need 0 <= k_n < n <= len(realization)")
    mus = np.array([s.sigma for s in realization.per_step[:n]])
    g = central_to_cumulants(0.0, mus)
    g[:k_n] = 0.0
    return CumulantSet(g, k_n)


def iid_cumulants(mu, n: int) -> CumulantSet:
    """``n`` identical steps with central moments ``mu``."""
    g = central_to_cumulants(0.0, mu)
    return CumulantSet(np.tile(g, (n, 1)), 0)


@dataclass(frozen=True)
class EdgeworthTerms:
    """B_n^2 and lambda_{3..6,n}; ``n`` is the normalising count."""

    B2: float
    lam: dict
    n: int
    order: int

    def lam_at(self, nu: int) -> float:
        return self.lam[nu]


def build_terms(source, k_n: int = 0, n: int | None = None, order: int = MAX_ORDER,
                normalization: str = "padded") -> EdgeworthTerms:
    """Expansion terms for a window of steps.

    ``source`` is an :class:`EnvironmentRealization` (window ``[k_n, n)``) or
    a :class:`CumulantSet`. With ``normalization="padded"`` the count in
    lambda's power of n is the full n including the zero prefix; with
    ``"window"`` it is the window length ``n - k_n``. The expansion value is
    the same under both.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 1..{MAX_ORDER}")
    if isinstance(source, CumulantSet):
        cs = source
    else:
        if n is None:
            n = len(source)
        cs = window_cumulants(source, k_n, n)
    if cs.n - cs.k_n < 1:
        raise ValueError("empty window")
    sums = cs.sums()
    B2 = float(sums[0])
    if not B2 > 0:
        raise ValueError("zero window variance")
    if normalization == "padded":
        count = cs.n
    elif normalization == "window":
        count = cs.n - cs.k_n
    else:
        raise ValueError("normalization must be 'padded' or 'window'")
    B = math.sqrt(B2)
    lam = {nu: count ** ((nu - 2) / 2) * B ** (-nu) * float(sums[nu - 2])
           for nu in range(3, order + 3)}
    return EdgeworthTerms(B2, lam, count, order)


def q_partitions(nu: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative (k_1..k_nu) with k_1 + 2 k_2 + ... + nu k_nu = nu."""
    def rec(j, remaining):
        if j > nu:
            if remaining == 0:
                yield ()
            return
        for k in range(remaining // j + 1):
            for rest in rec(j + 1, remaining - j * k):
                yield (k,) + rest

    yield from rec(1, nu)


def q_term(terms: EdgeworthTerms, nu: int, x):
    """Q_{nu,n}(x) = -phi(x) sum' H_{nu+2s-1}(x) prod_m (lambda_{m+2}/(m+2)!)^{k_m} / k_m!"""
    if not 1 <= nu <= MAX_ORDER:
        raise ValueError(f"nu > {MAX_ORDER} unsupported")
    if nu + 2 not in terms.lam:
        raise ValueError(f"terms built with order {terms.order} < {nu}")
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for ks in q_partitions(nu):
        s = sum(ks)
        coef = 1.0
        for m, k in enumerate(ks, start=1):
            if k:
                coef *= (terms.lam[m + 2] / math.factorial(m + 2)) ** k / math.factorial(k)
        total = total + coef * hermite(nu + 2 * s - 1, x)
    out = -phi(x) * total
    return float(out) if np.ndim(out) == 0 else out


def expansion_cdf(terms: EdgeworthTerms, x, order: int):
    """Phi(x) + sum_{nu <= order} Q_{nu,n}(x) n^{-nu/2}; ``order = 0`` gives Phi."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}")
    out = Phi(x)
    for nu in range(1, order + 1):
        out = out + q_term(terms, nu, x) * terms.n ** (-nu / 2)
    return out


@dataclass(frozen=True)
class CorrectionTerms:
    """Windowed corrections over steps k_n..n-1 of a moment profile.

    ``var`` is s_n^2 - s_{k_n}^2, ``third`` the summed third central moments,
    ``fourth`` and ``fifth`` the summed fourth and fifth cumulants.
    """

    kappa1: float
    kappa2: float
    kappa3: float
    var: float
    third: float
    fourth: float
    fifth: float

    @staticmethod
    def D1(x):
        return -hermite(2, x) * phi(x)

    @staticmethod
    def D2(x):
        return -hermite(5, x) * phi(x)

    @staticmethod
    def D3(x):
        return -hermite(3, x) * phi(x)

    def R(self, x):
        v, c3 = self.var, self.third
        return (-c3**3 / (1296 * v**4.5) * hermite(8, x) * phi(x)
                - self.fifth / (120 * v**2.5) * hermite(4, x) * phi(x)
                - c3 * self.fourth / (144 * v**3.5) * hermite(6, x) * phi(x))

    def cdf(self, x, order: int = 3):
        """Phi plus kappa-weighted corrections up to ``order`` (3 includes R)."""
        out = Phi(x)
        if order >= 1:
            out = out + self.kappa1 * self.D1(x)
        if order >= 2:
            out = out + self.kappa2 * self.D2(x) + self.kappa3 * self.D3(x)
        if order >= 3:
            out = out + self.R(x)
        return out


def kappa_terms(profile: MomentProfile, n: int, k_n: int) -> CorrectionTerms:
    if not 0 <= k_n < n <= profile.n:
        raise ValueError("need 0 <= k_n < n <= profile length")
    var = profile.s2(n) - profile.s2(k_n)
    if not var > 0:
        raise ValueError("degenerate window: zero variance")
    third = float(profile.s_nu[1, n] - profile.s_nu[1, k_n])
    fourth = float(profile.c4[n] - profile.c4[k_n])
    fifth = float(profile.c5[n] - profile.c5[k_n])
    return CorrectionTerms(
        kappa1=third / (6 * var**1.5),
        kappa2=third**2 / (72 * var**3),
        kappa3=fourth / (24 * var**2),
        var=var, third=third, fourth=fourth, fifth=fifth,
    )


def remainder_R(profile: MomentProfile, n: int, k_n: int, x):
    return kappa_terms(profile, n, k_n).R(x)


def choose_k(n: int, beta: float) -> int:
    """k_n = floor(n^beta)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return int(math.floor(n**beta))


def validate_beta(lambda_: float, eta: float, theorem_id: int, beta: float | None = None) -> tuple[float, float]:
    """Admissible open interval for beta; raises if empty or if ``beta`` lies outside."""
    if theorem_id == 1:
        lo = max(2 / lambda_, 3 / eta)
    elif theorem_id == 2:
        lo = max(4 / lambda_, 4 / eta)
    else:
        raise ValueError("theorem_id must be 1 or 2")
    hi = 0.25
    if not lo < hi:
        raise HypothesisError(
            f"empty beta interval ({lo:.4g}, {hi}) for theorem {theorem_id}: lambda or eta too small")
    if beta is not None and not lo < beta < hi:
        raise HypothesisError(f"beta={beta} outside ({lo:.4g}, {hi})")
    return lo, hi


def export_expansion_table(terms: EdgeworthTerms, xs, oracle_cdf: Callable, path) -> None:
    """CSV columns x, Phi, Q1_term, Q2_term, Q3_term, expansion, oracle_cdf, abs_error."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "Phi", "Q1_term", "Q2_term", "Q3_term", "expansion", "oracle_cdf", "abs_error"])
        for x in xs:
            q = [q_term(terms, nu, x) * terms.n ** (-nu / 2) if nu <= terms.order else 0.0
                 for nu in (1, 2, 3)]
            exp = Phi(x) + sum(q)
            ref = float(oracle_cdf(x))
            w.writerow([format(v, ".17g") for v in (x, Phi(x), *q, exp, ref, abs(exp - ref))])
