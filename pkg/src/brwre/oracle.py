"""Independent reference computations.

Nothing here reuses the simulation, moment or martingale code: small trees
are enumerated exhaustively, sum distributions come from exact formulas, and
moments come from quadrature against the densities.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from scipy import integrate
from scipy import special as _sp

__all__ = [
    "ExactDistribution",
    "enumerate_exact",
    "irwin_hall_cdf",
    "irwin_hall_standardized_cdf",
    "gamma_sum_cdf",
    "gamma_sum_standardized_cdf",
    "numeric_central_moments",
]

MAX_OUTCOMES = 10**7
_ROUND = 12


@dataclass(frozen=True)
class ExactDistribution:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise ValueError("outcomes must be distinct")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def as_dict(self) -> dict[float, float]:
        return dict(zip(self.values, self.probs))


def _finite_pairs(law, offspring: bool):
    """(value, prob) pairs of a finite law; accepts law objects or raw pair lists."""
    family = getattr(law, "family", None)
    if family is None:
        return [(float(v), float(p)) for v, p in law]
    params = law.params
    if family in ("finite", "finite_lattice"):
        return [(float(v), float(p)) for v, p in params["support"]]
    if family == "two_point":
        return [(params["a"], 1 - params["p"]), (params["b"], params["p"])]
    if family == "binomial":
        n, q = params["n"], params["p"]
        return [(float(k), math.comb(n, k) * q**k * (1 - q) ** (n - k)) for k in range(n + 1)]
    raise ValueError(f"{family} has unbounded support; enumeration needs finite laws")


def enumerate_exact(path, n: int, statistic: str, B=None) -> ExactDistribution:
    """Exact law of a generation-``n`` statistic under a fixed state path.

    ``path`` is a sequence of ``(offspring_law, displacement_law)`` pairs, one
    per generation (or an object with ``.state(k)`` such as a realization).
    ``statistic`` is one of ``"Z"`` (needs ``B``: list of closed intervals),
    ``"W"``, ``"N1"``, ``"N2"``.
    """
    if not 1 <= n <= 3:
        raise ValueError("enumeration limited to n <= 3")
    if statistic not in ("Z", "W", "N1", "N2"):
        raise ValueError(f"unknown statistic {statistic!r}")
    if statistic == "Z" and B is None:
        raise ValueError("statistic Z needs a set B")
    steps = []
    for k in range(n):
        if hasattr(path, "state"):
            st = path.state(k)
            pair = (st.offspring, st.displacement)
        else:
            pair = path[k]
        off = [(int(v), p) for v, p in _finite_pairs(pair[0], True) if p > 0]
        disp = [(v, p) for v, p in _finite_pairs(pair[1], False) if p > 0]
        steps.append((off, disp))

    # law of the population (multiset of positions) generation by generation
    pops = {(0.0,): 1.0}
    work = 0
    for off, disp in steps:
        new = {}
        for pop, prob in pops.items():
            for counts in itertools.product(off, repeat=len(pop)):
                p_counts = math.prod(p for _, p in counts)
                total = sum(c for c, _ in counts)
                parents = [x for x, (c, _) in zip(pop, counts) for _ in range(c)]
                for moves in itertools.product(disp, repeat=total):
                    work += 1
                    if work > MAX_OUTCOMES:
                        raise OverflowError("enumeration exceeds the outcome guard")
                    p = prob * p_counts * math.prod(q for _, q in moves)
                    child = tuple(sorted(x + d for x, (d, _) in zip(parents, moves)))
                    new[child] = new.get(child, 0.0) + p
        pops = new

    means = [math.fsum(v * p for v, p in off) for off, _ in steps]
    drifts = [math.fsum(v * p for v, p in disp) for _, disp in steps]
    variances = [math.fsum(p * (v - l) ** 2 for v, p in disp) for (_, disp), l in zip(steps, drifts)]
    pi_n = math.prod(means)
    ell_n = math.fsum(drifts)
    s2_n = math.fsum(variances)

    out = {}
    for pop, prob in pops.items():
        if statistic == "Z":
            val = float(sum(1 for x in pop if any(a <= x <= b for a, b in B)))
        elif statistic == "W":
            val = len(pop) / pi_n
        elif statistic == "N1":
            val = math.fsum(x - ell_n for x in pop) / pi_n
        else:
            val = s2_n * len(pop) / pi_n - math.fsum((x - ell_n) ** 2 for x in pop) / pi_n
        key = round(val, _ROUND) + 0.0
        out[key] = out.get(key, 0.0) + prob
    items = sorted(out.items())
    return ExactDistribution(tuple(v for v, _ in items), tuple(p for _, p in items))


def irwin_hall_cdf(n: int, x: float) -> float:
    """CDF at ``x`` of the sum of ``n`` independent Uniform(0, 1) variables.

    Evaluates sum_k (-1)^k C(n, k) (x - k)^n / n! in exact rational
    arithmetic, so there is no cancellation error.
    """
    if not 1 <= n <= 30:
        raise ValueError("n must lie in 1..30")
    if x <= 0:
        return 0.0
    if x >= n:
        return 1.0
    if x > n / 2:
        return 1.0 - irwin_hall_cdf(n, n - x)
    fx = Fraction(x)
    total = Fraction(0)
    for k in range(int(math.floor(x)) + 1):
        total += (-1) ** k * math.comb(n, k) * (fx - k) ** n
    return float(total / math.factorial(n))


def irwin_hall_standardized_cdf(n: int, z: float) -> float:
    """CDF of the standardised sum of ``n`` centred uniforms."""
    return irwin_hall_cdf(n, n / 2 + z * math.sqrt(n / 12))


def gamma_sum_cdf(n: int, x: float) -> float:
    """CDF at ``x`` of Gamma(n, 1) - n, the sum of ``n`` centred unit exponentials."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if x <= -n:
        return 0.0
    return float(_sp.gammainc(n, x + n))


def gamma_sum_standardized_cdf(n: int, z: float) -> float:
    return gamma_sum_cdf(n, z * math.sqrt(n))


def _density(law):
    p = law.params
    f = law.family
    if f == "gaussian":
        mu, sd = p["mean"], math.sqrt(p["var"])
        return (lambda x: math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))), \
            -math.inf, math.inf, [mu]
    if f == "uniform":
        return (lambda x: 1.0 / (p["b"] - p["a"])), p["a"], p["b"], []
    if f == "laplace":
        mu, b = p["mean"], p["scale"]
        return (lambda x: math.exp(-abs(x - mu) / b) / (2 * b)), -math.inf, math.inf, [mu]
    if f == "shifted_exponential":
        r, c = p["rate"], p["shift"]
        return (lambda x: r * math.exp(-r * (x - c))), c, math.inf, []
    raise ValueError(f"no density for {f}")


def _quad(g, lo, hi, pts):
    cuts = sorted({lo, hi, *[q for q in pts if lo < q < hi]})
    total = 0.0
    with warnings.catch_warnings():
        # odd moments of symmetric laws are zero up to rounding; quad complains
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(g, a, b, epsabs=1e-15, epsrel=1e-13, limit=500)
            total += val
    return total


def numeric_central_moments(law) -> tuple[float, ...]:
    """Central moments of orders 2..6 by quadrature (or exact sums for discrete laws)."""
    if law.family in ("two_point", "finite_lattice"):
        pairs = _finite_pairs(law, False)
        mean = math.fsum(v * p for v, p in pairs)
        return tuple(math.fsum(p * (v - mean) ** k for v, p in pairs) for k in range(2, 7))
    if law.family == "gaussian" and law.params["var"] == 0:
        return (0.0,) * 5
    dens, lo, hi, pts = _density(law)
    mean = _quad(lambda x: x * dens(x), lo, hi, pts)
    return tuple(_quad(lambda x, k=k: (x - mean) ** k * dens(x), lo, hi, pts + [mean])
                 for k in range(2, 7))
