"""Random environments in time: laws, exact moments, sampling and standing conditions.

An environment is a finite mixture of *states*. Each state carries an
offspring law and a displacement law drawn from a closed set of families,
so every per-step moment used downstream is computed in closed form.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "ConfigError",
    "OffspringLaw",
    "DisplacementLaw",
    "EnvState",
    "EnvironmentSpec",
    "StepMoments",
    "EnvironmentRealization",
    "MomentProfile",
    "ExpectedMoments",
    "ConditionReport",
    "parse_spec",
    "load_spec",
    "spec_to_dict",
    "step_moments",
    "sample_environment",
    "cumulative_profile",
    "expected_moments",
    "check_conditions",
    "as_seed_sequence",
    "poisson",
    "geometric",
    "binomial",
    "finite",
    "fixed_offspring",
    "gaussian",
    "uniform",
    "laplace",
    "shifted_exponential",
    "two_point",
    "finite_lattice",
    "fixed_displacement",
]

OFFSPRING_FAMILIES = {
    "poisson": ("mean",),
    "geometric": ("mean",),
    "binomial": ("n", "p"),
    "finite": ("support",),
}
DISPLACEMENT_FAMILIES = {
    "gaussian": ("mean", "var"),
    "uniform": ("a", "b"),
    "laplace": ("mean", "scale"),
    "shifted_exponential": ("rate", "shift"),
    "two_point": ("a", "b", "p"),
    "finite_lattice": ("support",),
}
# families whose characteristic function satisfies Cramer's condition
_CONTINUOUS = {"gaussian", "uniform", "laplace", "shifted_exponential"}

_TOL = 1e-12
_LOG_OVERFLOW = 700.0

CONFIG_KEYS = {
    "states", "seed", "horizon",
    # experiment keys consumed by the harness
    "n_schedule", "replicates", "t_grid", "A", "beta", "lambda", "eta", "delta",
    "cap", "threads", "orders", "conditional_seeds",
}


class ConfigError(ValueError):
    """Raised for malformed or out-of-range environment configurations."""


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int, ``None`` or ``SeedSequence`` into a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _check_support(support, integer: bool, name: str) -> tuple[tuple[float, float], ...]:
    try:
        pairs = tuple((float(v), float(p)) for v, p in support)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: support must be a list of (value, prob) pairs") from exc
    if not pairs:
        raise ConfigError(f"{name}: empty support")
    values = [v for v, _ in pairs]
    if len(set(values)) != len(values):
        raise ConfigError(f"{name}: repeated support values")
    for v, p in pairs:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name}: probability {p} outside [0, 1]")
        if integer and (v < 0 or v != int(v)):
            raise ConfigError(f"{name}: offspring values must be nonnegative integers, got {v}")
        if not math.isfinite(v):
            raise ConfigError(f"{name}: non-finite support value")
    total = math.fsum(p for _, p in pairs)
    if abs(total - 1.0) > _TOL:
        raise ConfigError(f"{name}: probabilities sum to {total!r}, not 1")
    return pairs


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution on {0, 1, 2, ...}.

    ``params`` holds the family parameters by name: ``poisson(mean)``,
    ``geometric(mean)`` (support starting at 0), ``binomial(n, p)`` and
    ``finite(support)`` with ``support`` a tuple of ``(value, prob)``.
    """

    family: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in OFFSPRING_FAMILIES:
            raise ConfigError(f"unknown offspring family {self.family!r}")
        p = dict(self.params)
        missing = set(OFFSPRING_FAMILIES[self.family]) - set(p)
        if missing:
            raise ConfigError(f"offspring {self.family}: missing parameters {sorted(missing)}")
        if self.family in ("poisson", "geometric"):
            p["mean"] = float(p["mean"])
            if not p["mean"] > 0 or not math.isfinite(p["mean"]):
                raise ConfigError(f"offspring {self.family}: mean must be positive")
        elif self.family == "binomial":
            n = p["n"]
            if int(n) != n or n < 1:
                raise ConfigError("offspring binomial: n must be a positive integer")
            p["n"] = int(n)
            p["p"] = float(p["p"])
            if not 0.0 < p["p"] <= 1.0:
                raise ConfigError("offspring binomial: p must lie in (0, 1]")
        else:
            p["support"] = _check_support(p["support"], True, "offspring finite")
        object.__setattr__(self, "params", p)
        if not self.mean >= 0:
            raise ConfigError("offspring law must have nonnegative mean")

    @property
    def mean(self) -> float:
        p = self.params
        if self.family in ("poisson", "geometric"):
            return p["mean"]
        if self.family == "binomial":
            return p["n"] * p["p"]
        return math.fsum(v * q for v, q in p["support"])

    def pmf_table(self, tail: float = 1e-18) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(k, pmf)`` over the support, truncated where the tail is below ``tail``."""
        from scipy import stats

        p = self.params
        if self.family == "finite":
            k = np.array([v for v, _ in p["support"]])
            return k, np.array([q for _, q in p["support"]])
        if self.family == "poisson":
            dist = stats.poisson(p["mean"])
        elif self.family == "geometric":
            # scipy's geom starts at 1
            dist = stats.geom(1.0 / (1.0 + p["mean"]), loc=-1)
        else:
            dist = stats.binom(p["n"], p["p"])
        # isf loses precision this far out, so walk the log-survival function instead
        kmax = max(8, int(2 * self.mean) + 8)
        while dist.logsf(kmax) > math.log(tail):
            kmax *= 2
        k = np.arange(0, kmax + 1)
        return k.astype(float), dist.pmf(k)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p = self.params
        if self.family == "poisson":
            return rng.poisson(p["mean"], size)
        if self.family == "geometric":
            return rng.geometric(1.0 / (1.0 + p["mean"]), size) - 1
        if self.family == "binomial":
            return rng.binomial(p["n"], p["p"], size)
        return _sample_finite(p["support"], rng, size).astype(np.int64)


@dataclass(frozen=True)
class DisplacementLaw:
    """Displacement distribution on the real line.

    Families: ``gaussian(mean, var)``, ``uniform(a, b)``,
    ``laplace(mean, scale)``, ``shifted_exponential(rate, shift)`` (the law
    of ``shift + Exp(rate)``), ``two_point(a, b, p)`` with ``P(L = b) = p``,
    and ``finite_lattice(support)``.
    """

    family: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in DISPLACEMENT_FAMILIES:
            raise ConfigError(f"unknown displacement family {self.family!r}")
        p = dict(self.params)
        missing = set(DISPLACEMENT_FAMILIES[self.family]) - set(p)
        if missing:
            raise ConfigError(f"displacement {self.family}: missing parameters {sorted(missing)}")
        if self.family == "finite_lattice":
            p["support"] = _check_support(p["support"], False, "displacement finite_lattice")
        else:
            for k in DISPLACEMENT_FAMILIES[self.family]:
                p[k] = float(p[k])
                if not math.isfinite(p[k]):
                    raise ConfigError(f"displacement {self.family}: non-finite {k}")
        f = self.family
        if f == "gaussian" and p["var"] < 0:
            raise ConfigError("displacement gaussian: negative variance")
        if f == "uniform" and not p["a"] < p["b"]:
            raise ConfigError("displacement uniform: need a < b")
        if f == "laplace" and not p["scale"] > 0:
            raise ConfigError("displacement laplace: scale must be positive")
        if f == "shifted_exponential" and not p["rate"] > 0:
            raise ConfigError("displacement shifted_exponential: rate must be positive")
        if f == "two_point":
            if not 0.0 <= p["p"] <= 1.0:
                raise ConfigError("displacement two_point: p outside [0, 1]")
            if p["a"] == p["b"]:
                raise ConfigError("displacement two_point: a and b must differ")
        object.__setattr__(self, "params", p)

    @property
    def cramer_ok(self) -> bool:
        if self.family == "gaussian":
            return self.params["var"] > 0
        return self.family in _CONTINUOUS

    def mean_and_central(self) -> tuple[float, tuple[float, ...]]:
        """Mean and exact central moments of orders 2..6."""
        p = self.params
        f = self.family
        if f == "gaussian":
            v = p["var"]
            return p["mean"], (v, 0.0, 3 * v**2, 0.0, 15 * v**3)
        if f == "uniform":
            h = (p["b"] - p["a"]) / 2
            return (p["a"] + p["b"]) / 2, (h**2 / 3, 0.0, h**4 / 5, 0.0, h**6 / 7)
        if f == "laplace":
            b = p["scale"]
            return p["mean"], (2 * b**2, 0.0, 24 * b**4, 0.0, 720 * b**6)
        if f == "shifted_exponential":
            # central moments of Exp(1) are the derangement numbers !k
            r = p["rate"]
            return p["shift"] + 1 / r, (1 / r**2, 2 / r**3, 9 / r**4, 44 / r**5, 265 / r**6)
        if f == "two_point":
            pairs = ((p["a"], 1 - p["p"]), (p["b"], p["p"]))
        else:
            pairs = p["support"]
        mean = math.fsum(v * q for v, q in pairs)
        central = tuple(math.fsum(q * (v - mean) ** k for v, q in pairs) for k in range(2, 7))
        return mean, central

    def abs_moment(self, eta: float) -> float:
        """E|L|^eta, by quadrature for continuous families and exact sums otherwise."""
        p = self.params
        f = self.family
        if f == "two_point":
            return (1 - p["p"]) * abs(p["a"]) ** eta + p["p"] * abs(p["b"]) ** eta
        if f == "finite_lattice":
            return math.fsum(q * abs(v) ** eta for v, q in p["support"])
        if f == "gaussian" and p["var"] == 0:
            return abs(p["mean"]) ** eta
        if f == "gaussian":
            mu, sd = p["mean"], math.sqrt(p["var"])
            dens = lambda x: math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            lo, hi = -math.inf, math.inf
            pts = [mu]
        elif f == "uniform":
            dens = lambda x: 1.0 / (p["b"] - p["a"])
            lo, hi = p["a"], p["b"]
            pts = [0.0] if lo < 0 < hi else []
        elif f == "laplace":
            mu, b = p["mean"], p["scale"]
            dens = lambda x: math.exp(-abs(x - mu) / b) / (2 * b)
            lo, hi = -math.inf, math.inf
            pts = [mu]
        else:
            r, c = p["rate"], p["shift"]
            dens = lambda x: r * math.exp(-r * (x - c))
            lo, hi = c, math.inf
            pts = [0.0] if c < 0 else []
        g = lambda x: abs(x) ** eta * dens(x)
        # split at the kinks so quad sees smooth pieces
        cuts = sorted({lo, hi, *pts})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-10, limit=200)
            total += val
        return total

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p = self.params
        f = self.family
        if f == "gaussian":
            return rng.normal(p["mean"], math.sqrt(p["var"]), size)
        if f == "uniform":
            return rng.uniform(p["a"], p["b"], size)
        if f == "laplace":
            return rng.laplace(p["mean"], p["scale"], size)
        if f == "shifted_exponential":
            return rng.exponential(1.0 / p["rate"], size) + p["shift"]
        if f == "two_point":
            return np.where(rng.random(size) < p["p"], p["b"], p["a"])
        return _sample_finite(p["support"], rng, size)


def _sample_finite(support, rng: np.random.Generator, size: int) -> np.ndarray:
    values = np.array([v for v, _ in support])
    if len(values) == 1:
        return np.full(size, values[0])
    cum = np.cumsum([q for _, q in support])
    idx = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
    return values[np.minimum(idx, len(values) - 1)]


@dataclass(frozen=True)
class EnvState:
    weight: float
    offspring: OffspringLaw
    displacement: DisplacementLaw


@dataclass(frozen=True)
class EnvironmentSpec:
    """A finite i.i.d. mixture of environment states."""

    states: tuple[EnvState, ...]
    seed: int | None = None
    horizon: int | None = None
    extras: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.states:
            raise ConfigError("environment needs at least one state")
        for s in self.states:
            if not 0.0 <= s.weight <= 1.0:
                raise ConfigError(f"state weight {s.weight} outside [0, 1]")
        total = math.fsum(s.weight for s in self.states)
        if abs(total - 1.0) > _TOL:
            raise ConfigError(f"weights sum ≠ 1 (got {total!r})")

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.states])

    @classmethod
    def single(cls, offspring: OffspringLaw, displacement: DisplacementLaw) -> "EnvironmentSpec":
        return cls((EnvState(1.0, offspring, displacement),))


def _law_from_dict(d: Mapping[str, Any], kind: str):
    if not isinstance(d, Mapping) or "family" not in d:
        raise ConfigError(f"{kind} must be an object with a 'family' key")
    params = {k: v for k, v in d.items() if k != "family"}
    cls = OffspringLaw if kind == "offspring" else DisplacementLaw
    allowed = (OFFSPRING_FAMILIES if kind == "offspring" else DISPLACEMENT_FAMILIES).get(d["family"])
    if allowed is not None and set(params) - set(allowed):
        raise ConfigError(f"{kind} {d['family']}: unknown parameters {sorted(set(params) - set(allowed))}")
    try:
        return cls(d["family"], params)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"{kind}: bad parameters ({exc})") from exc


def parse_spec(document: str | Mapping[str, Any]) -> EnvironmentSpec:
    """Parse a JSON config document (text or already-decoded mapping).

    Top-level keys are ``states`` (required), ``seed`` and ``horizon``; the
    experiment keys in ``CONFIG_KEYS`` are kept in ``spec.extras``.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed document: {exc}") from exc
    if not isinstance(document, Mapping):
        raise ConfigError("malformed document: top level must be an object")
    unknown = set(document) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"malformed document: unknown keys {sorted(unknown)}")
    raw_states = document.get("states")
    if not isinstance(raw_states, list) or not raw_states:
        raise ConfigError("malformed document: 'states' must be a non-empty array")
    states = []
    for i, st in enumerate(raw_states):
        if not isinstance(st, Mapping) or set(st) != {"weight", "offspring", "displacement"}:
            raise ConfigError(f"state {i}: need exactly weight, offspring, displacement")
        try:
            weight = float(st["weight"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"state {i}: weight must be a number") from exc
        states.append(EnvState(weight, _law_from_dict(st["offspring"], "offspring"),
                               _law_from_dict(st["displacement"], "displacement")))
    seed = document.get("seed")
    horizon = document.get("horizon")
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    if horizon is not None and (not isinstance(horizon, int) or horizon < 1):
        raise ConfigError("horizon must be a positive integer")
    extras = {k: v for k, v in document.items() if k not in ("states", "seed", "horizon")}
    return EnvironmentSpec(tuple(states), seed, horizon, extras)


def load_spec(path) -> EnvironmentSpec:
    with open(path) as fh:
        return parse_spec(fh.read())


def _law_to_dict(law) -> dict:
    d = {"family": law.family}
    for k, v in law.params.items():
        d[k] = [list(pair) for pair in v] if k == "support" else v
    return d


def spec_to_dict(spec: EnvironmentSpec) -> dict:
    d = {
        "states": [
            {"weight": s.weight, "offspring": _law_to_dict(s.offspring),
             "displacement": _law_to_dict(s.displacement)}
            for s in spec.states
        ]
    }
    if spec.seed is not None:
        d["seed"] = spec.seed
    if spec.horizon is not None:
        d["horizon"] = spec.horizon
    d.update(spec.extras)
    return d


@dataclass(frozen=True)
class StepMoments:
    """Exact one-generation moments: offspring mean and displacement moments."""

    m: float
    ln_m: float
    l: float
    sigma: tuple[float, float, float, float, float]  # central moments of orders 2..6

    def central(self, order: int) -> float:
        return self.sigma[order - 2]

    @property
    def sigma2(self) -> float:
        return self.sigma[0]

    @property
    def sigma3(self) -> float:
        return self.sigma[1]

    @property
    def kurtosis_excess(self) -> float:
        """Fourth cumulant, sigma4 - 3 sigma2^2."""
        return self.sigma[2] - 3 * self.sigma[0] ** 2

    @property
    def fifth_cumulant(self) -> float:
        return self.sigma[3] - 10 * self.sigma[1] * self.sigma[0]


def step_moments(offspring: OffspringLaw, displacement: DisplacementLaw) -> StepMoments:
    m = offspring.mean
    l, sigma = displacement.mean_and_central()
    # m = 0 (certain extinction) is allowed; it fails the supercriticality check
    return StepMoments(m, math.log(m) if m > 0 else -math.inf, l, sigma)


@dataclass(frozen=True)
class EnvironmentRealization:
    spec: EnvironmentSpec
    state_indices: np.ndarray
    per_step: tuple[StepMoments, ...]

    def __len__(self):
        return len(self.state_indices)

    def state(self, k: int) -> EnvState:
        return self.spec.states[int(self.state_indices[k])]

    @classmethod
    def from_indices(cls, spec: EnvironmentSpec, indices: Sequence[int]) -> "EnvironmentRealization":
        """Fix the state path by hand (used for deterministic environments)."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1 or len(idx) == 0:
            raise ValueError("indices must be a non-empty 1-d sequence")
        if idx.min() < 0 or idx.max() >= len(spec.states):
            raise ValueError("state index out of range")
        table = [step_moments(s.offspring, s.displacement) for s in spec.states]
        idx.setflags(write=False)
        return cls(spec, idx, tuple(table[i] for i in idx))


def sample_environment(spec: EnvironmentSpec, n: int, seed) -> EnvironmentRealization:
    """Draw ``n`` i.i.d. environment states. Pure in ``(spec, n, seed)``."""
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    if len(spec.states) == 1:
        indices = np.zeros(n, dtype=np.int64)
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(as_seed_sequence(seed))
        indices = rng.choice(len(spec.states), size=n, p=spec.weights).astype(np.int64)
    return EnvironmentRealization.from_indices(spec, indices)


@dataclass(frozen=True)
class MomentProfile:
    """Cumulative sums and products of per-step moments, indexed 0..n.

    ``Pi[n]`` is the product of the first ``n`` offspring means; it is also
    kept as ``log_Pi``. ``Pi`` entries whose log exceeds 700 are NaN and
    flagged in ``Pi_overflow``. ``s_nu[nu - 2]`` is the partial sum of the
    order-``nu`` central moments; ``c4`` and ``c5`` are partial sums of the
    fourth and fifth cumulants.
    """

    log_Pi: np.ndarray
    Pi: np.ndarray
    Pi_overflow: np.ndarray
    ell: np.ndarray
    s_nu: np.ndarray
    s: np.ndarray
    c4: np.ndarray
    c5: np.ndarray

    @property
    def n(self) -> int:
        return len(self.log_Pi) - 1

    def s2(self, n: int) -> float:
        return float(self.s_nu[0, n])

    def inv_Pi(self, n: int) -> float:
        """1 / Pi_n, from the running product when finite (exact for integer means)."""
        pi = self.Pi[n]
        return 1.0 / pi if math.isfinite(pi) and pi > 0 else math.exp(-self.log_Pi[n])

    def truncate(self, n: int) -> "MomentProfile":
        k = n + 1
        return MomentProfile(self.log_Pi[:k], self.Pi[:k], self.Pi_overflow[:k], self.ell[:k],
                             self.s_nu[:, :k], self.s[:k], self.c4[:k], self.c5[:k])

    def extend(self, step: StepMoments) -> "MomentProfile":
        """Profile with one more generation appended."""
        def app(a, v):
            return np.append(a, a[-1] + v)

        log_pi = app(self.log_Pi, step.ln_m)
        over = log_pi > _LOG_OVERFLOW
        s_nu = np.hstack([self.s_nu, (self.s_nu[:, -1] + np.array(step.sigma))[:, None]])
        return MomentProfile(
            log_pi, np.where(over, np.nan, np.exp(np.minimum(log_pi, _LOG_OVERFLOW))), over,
            app(self.ell, step.l), s_nu, np.sqrt(np.maximum(s_nu[0], 0.0)),
            app(self.c4, step.kurtosis_excess), app(self.c5, step.fifth_cumulant),
        )


def _partial_sums(values) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.asarray(values, dtype=float))])


def cumulative_profile(realization: EnvironmentRealization, n: int | None = None) -> MomentProfile:
    if n is None:
        n = len(realization)
    if n > len(realization):
        raise ValueError(f"realization has length {len(realization)} < {n}")
    steps = realization.per_step[:n]
    log_pi = _partial_sums([s.ln_m for s in steps])
    over = log_pi > _LOG_OVERFLOW
    # linear form as a running product, matching Pi_{k+1} = Pi_k m_k
    with np.errstate(over="ignore"):
        lin = np.concatenate([[1.0], np.cumprod([s.m for s in steps])]) if n else np.ones(1)
    lin = np.where(over, np.nan, lin)
    s_nu = np.vstack([_partial_sums([s.sigma[j] for s in steps]) for j in range(5)])
    return MomentProfile(
        log_pi, lin, over,
        _partial_sums([s.l for s in steps]),
        s_nu,
        np.sqrt(np.maximum(s_nu[0], 0.0)),
        _partial_sums([s.kurtosis_excess for s in steps]),
        _partial_sums([s.fifth_cumulant for s in steps]),
    )


@dataclass(frozen=True)
class ExpectedMoments:
    """Environment expectations consumed by the limit rate functions."""

    e_ln_m: float
    e_sigma2: float
    e_sigma3: float
    e_sigma4_excess: float
    e_sigma5_cumulant: float
    e_l: float


def expected_moments(spec: EnvironmentSpec) -> ExpectedMoments:
    rows = [(s.weight, step_moments(s.offspring, s.displacement)) for s in spec.states]

    def avg(f):
        if len(rows) == 1:
            return f(rows[0][1])
        return math.fsum(w * f(sm) for w, sm in rows)

    return ExpectedMoments(
        e_ln_m=avg(lambda s: s.ln_m),
        e_sigma2=avg(lambda s: s.sigma2),
        e_sigma3=avg(lambda s: s.sigma3),
        e_sigma4_excess=avg(lambda s: s.kurtosis_excess),
        e_sigma5_cumulant=avg(lambda s: s.fifth_cumulant),
        e_l=avg(lambda s: s.l),
    )


@dataclass(frozen=True)
class ConditionReport:
    e_ln_m0: float
    branching_moment: float
    displacement_moment: float
    negative_moment: float
    cramer_ok: tuple[bool, ...]
    e_sigma2: float
    lambda_: float
    eta: float
    delta: float
    warnings: tuple[str, ...] = ()

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "supercritical": self.e_ln_m0 > 0,
            "branching_moment_finite": math.isfinite(self.branching_moment),
            "displacement_moment_finite": math.isfinite(self.displacement_moment),
            "negative_moment_finite": math.isfinite(self.negative_moment),
            "cramer": any(self.cramer_ok),
            "nondegenerate": self.e_sigma2 > 0,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def theorem_hypotheses(self, theorem_id: int) -> bool:
        """Standing conditions plus the theorem's thresholds on lambda and eta."""
        lam_min, eta_min = {1: (8, 12), 2: (16, 16)}[theorem_id]
        return self.ok and self.lambda_ > lam_min and self.eta > eta_min and self.delta > 0

    def to_dict(self) -> dict:
        return {
            "e_ln_m0": self.e_ln_m0,
            "branching_moment": self.branching_moment,
            "displacement_moment": self.displacement_moment,
            "negative_moment": self.negative_moment,
            "cramer_ok": list(self.cramer_ok),
            "e_sigma2": self.e_sigma2,
            "lambda": self.lambda_,
            "eta": self.eta,
            "delta": self.delta,
            "checks": self.checks,
            "ok": self.ok,
            "warnings": list(self.warnings),
        }


def _branching_moment(law: OffspringLaw, lam: float) -> float:
    if law.mean == 0:
        return 0.0
    k, pmf = law.pmf_table()
    with np.errstate(divide="ignore"):
        lnp = np.where(k > 1, np.log(np.maximum(k, 1.0)), 0.0)
    return float(np.sum(pmf * k / law.mean * lnp ** (1 + lam)))


def check_conditions(spec: EnvironmentSpec, lambda_: float, eta: float, delta: float) -> ConditionReport:
    """Evaluate the standing hypotheses numerically. Failures are reported, not raised."""
    if not (lambda_ > 0 and eta > 0 and delta > 0):
        raise ValueError("lambda, eta and delta must be positive")
    exp = expected_moments(spec)
    notes = []
    bm = dm = nm = 0.0
    cramer = []
    for i, s in enumerate(spec.states):
        bm += s.weight * _branching_moment(s.offspring, lambda_)
        dm += s.weight * s.displacement.abs_moment(eta)
        m = s.offspring.mean
        nm += s.weight * (m ** (-delta) if m > 0 else math.inf)
        ok = s.displacement.cramer_ok
        cramer.append(ok)
        if not ok:
            msg = (f"state {i}: displacement {s.displacement.family} is lattice or degenerate; "
                   "Cramer's condition fails (lattice case, outside the non-lattice theorems)")
            notes.append(msg)
    if not exp.e_ln_m > 0:
        notes.append(f"E ln m_0 = {exp.e_ln_m:.6g} <= 0: not supercritical")
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    return ConditionReport(exp.e_ln_m, bm, dm, nm, tuple(cramer), exp.e_sigma2,
                           float(lambda_), float(eta), float(delta), tuple(notes))


# shorthand constructors

def poisson(mean: float) -> OffspringLaw:
    return OffspringLaw("poisson", {"mean": mean})


def geometric(mean: float) -> OffspringLaw:
    return OffspringLaw("geometric", {"mean": mean})


def binomial(n: int, p: float) -> OffspringLaw:
    return OffspringLaw("binomial", {"n": n, "p": p})


def finite(support) -> OffspringLaw:
    return OffspringLaw("finite", {"support": support})


def fixed_offspring(k: int) -> OffspringLaw:
    """Every particle has exactly ``k`` children."""
    return finite([(k, 1.0)])


def gaussian(mean: float = 0.0, var: float = 1.0) -> DisplacementLaw:
    return DisplacementLaw("gaussian", {"mean": mean, "var": var})


def uniform(a: float, b: float) -> DisplacementLaw:
    return DisplacementLaw("uniform", {"a": a, "b": b})


def laplace(mean: float, scale: float) -> DisplacementLaw:
    return DisplacementLaw("laplace", {"mean": mean, "scale": scale})


def shifted_exponential(rate: float, shift: float) -> DisplacementLaw:
    return DisplacementLaw("shifted_exponential", {"rate": rate, "shift": shift})


def two_point(a: float, b: float, p: float) -> DisplacementLaw:
    return DisplacementLaw("two_point", {"a": a, "b": b, "p": p})


def finite_lattice(support) -> DisplacementLaw:
    return DisplacementLaw("finite_lattice", {"support": support})


def fixed_displacement(x: float) -> DisplacementLaw:
    return finite_lattice([(x, 1.0)])
