"""Seeded, replicate-parallel experiments and report output.

Every replicate draws from its own stream, derived from ``(master seed,
experiment tag, replicate index)`` only, so results do not depend on the
number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import oracle
from .edgeworth import HypothesisError, choose_k, expansion_cdf, build_terms, iid_cumulants, validate_beta
from .env import (
    ConfigError,
    EnvironmentSpec,
    check_conditions,
    expected_moments,
    sample_environment,
    step_moments,
)
from .limits import IntervalSet, RateInputs, gaussian_window_integral, mu_rate, v_rate
from .martingales import batch_values, conditional_martingale_test, limits_at_end
from .popsim import CapPolicy, normalized_cdf_count, simulate, simulate_batch
from .special import Phi

__all__ = [
    "AllCapped",
    "ExperimentConfig",
    "Report",
    "replicate_seed",
    "run_clt",
    "run_llt",
    "run_martingale_suite",
    "run_edgeworth_validation",
    "trend_ok",
    "emit",
    "render",
]

PROXY_NOTE = ("W, V1, V2 are estimated by end-of-path martingale values at n_max; "
              "no convergence rate is available for the V1, V2 proxies")

_TAGS = {"clt": 1, "llt": 2, "population": 3, "conditional": 4, "regrow": 5}
_POP_CHUNK = 2000


class AllCapped(RuntimeError):
    """Every replicate hit the particle cap."""


@dataclass(frozen=True)
class ExperimentConfig:
    spec: EnvironmentSpec
    n_schedule: tuple[int, ...] = (6, 10, 14, 18)
    n_max: int | None = None
    replicates: int = 200
    t_grid: tuple[float, ...] = (0.0, 1.0)
    A: IntervalSet | None = None
    beta: float = 0.24
    lambda_: float = 17.0
    eta: float = 17.0
    delta: float = 1.0
    seed: int = 0
    cap: int = 10**7
    threads: int = 1
    orders: tuple[int, ...] = (0, 1, 2, 3)
    conditional_seeds: int = 100

    def __post_init__(self):
        sched = tuple(int(n) for n in self.n_schedule)
        object.__setattr__(self, "n_schedule", sched)
        if list(sched) != sorted(set(sched)):
            raise ConfigError("n_schedule must be strictly increasing")
        n_max = self.n_max if self.n_max is not None else (max(sched) if sched else None)
        if n_max is None or n_max < 1:
            raise ConfigError("n_max must be >= 1 (or implied by a non-empty schedule)")
        object.__setattr__(self, "n_max", int(n_max))
        if sched and not (sched[0] >= 1 and sched[-1] <= n_max):
            raise ConfigError("n_schedule must lie within [1, n_max]")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.cap < 1:
            raise ConfigError("cap must be >= 1")
        if not (self.lambda_ > 0 and self.eta > 0 and self.delta > 0):
            raise ConfigError("lambda, eta, delta must be positive")
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))

    @classmethod
    def from_spec(cls, spec: EnvironmentSpec, **overrides) -> "ExperimentConfig":
        """Build from a parsed config document; keyword overrides win."""
        x = dict(spec.extras)
        kw: dict[str, Any] = {}
        for key, name in (("n_schedule", "n_schedule"), ("t_grid", "t_grid"), ("orders", "orders")):
            if key in x:
                kw[name] = tuple(x[key])
        for key, name in (("replicates", "replicates"), ("beta", "beta"), ("lambda", "lambda_"),
                          ("eta", "eta"), ("delta", "delta"), ("cap", "cap"), ("threads", "threads"),
                          ("conditional_seeds", "conditional_seeds")):
            if key in x:
                kw[name] = x[key]
        if "A" in x:
            kw["A"] = _parse_set(x["A"])
        if spec.horizon is not None:
            kw["n_max"] = spec.horizon
        if spec.seed is not None:
            kw["seed"] = spec.seed
        kw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(spec, **kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def _parse_set(value) -> IntervalSet:
    try:
        if isinstance(value, str):
            return IntervalSet.parse(value)
        return IntervalSet(tuple(tuple(p) for p in value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad interval set {value!r}: {exc}") from exc


def replicate_seed(master: int, tag: str, *index: int) -> np.random.SeedSequence:
    """Stream for one replicate: a pure function of (master seed, tag, index)."""
    return np.random.SeedSequence(master, spawn_key=(_TAGS[tag], *index))


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


@dataclass
class Report:
    """Tabular result plus metadata. ``rows`` follow ``columns`` for CSV output."""

    kind: str
    columns: tuple[str, ...]
    rows: list[dict]
    meta: dict = field(default_factory=dict)
    replicates: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "columns": list(self.columns), "rows": self.rows,
                "meta": self.meta, "replicates": self.replicates}

    def column(self, name: str, **where) -> list:
        return [r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())]


def _require(spec: EnvironmentSpec, cfg: ExperimentConfig, theorem_id: int | None):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cond = check_conditions(spec, cfg.lambda_, cfg.eta, cfg.delta)
    if not cond.checks["supercritical"]:
        raise HypothesisError(f"E ln m_0 = {cond.e_ln_m0:.6g} <= 0: process is not supercritical")
    if theorem_id is not None:
        failed = [k for k, ok in cond.checks.items() if not ok]
        if failed:
            raise HypothesisError(f"standing conditions fail: {', '.join(failed)}")
        validate_beta(cfg.lambda_, cfg.eta, theorem_id, cfg.beta)
    return cond


# ---------------------------------------------------------------- CLT / LLT

def _theorem_replicate(args) -> dict:
    kind, cfg, r = args
    spec = cfg.spec
    traj = simulate(spec, cfg.n_max, replicate_seed(cfg.seed, kind, r), CapPolicy(cfg.cap))
    if traj.cap_hit:
        return {"replicate": r, "capped": True}
    est = limits_at_end(traj)
    mom = expected_moments(spec)
    inputs = RateInputs.from_moments(mom, est.W_hat, est.V1_hat, est.V2_hat)
    out = {"replicate": r, "capped": False, "extinct": traj.extinct_at is not None,
           "W_hat": est.W_hat, "V1_hat": est.V1_hat, "V2_hat": est.V2_hat}
    prof = traj.profile
    res = []
    if kind == "clt":
        for n in cfg.n_schedule:
            for t in cfg.t_grid:
                d = math.sqrt(n) * (normalized_cdf_count(traj, n, t) - Phi(t) * est.W_hat)
                res.append(d - v_rate(t, inputs))
        out["rate"] = [float(v_rate(t, inputs)) for t in cfg.t_grid]
    else:
        A = cfg.A
        mu = mu_rate(A, inputs)
        for n in cfg.n_schedule:
            s_n = prof.s[n]
            z = A.shift(prof.ell[n]).count(traj.generations[n].positions)
            lam = n * (math.sqrt(2 * math.pi) * s_n * z * prof.inv_Pi(n)
                       - est.W_hat * gaussian_window_integral(A, s_n))
            res.append(lam - mu)
        out["rate"] = [mu]
    out["residuals"] = [float(v) for v in res]
    return out


def _aggregate(kind: str, cfg: ExperimentConfig, reps: list[dict], keys: list) -> Report:
    used = [r for r in reps if not r["capped"]]
    capped = len(reps) - len(used)
    if reps and not used:
        raise AllCapped(f"all {len(reps)} replicates hit the cap of {cfg.cap} particles")
    extinct = sum(1 for r in used if r["extinct"])
    rows = []
    for j, key in enumerate(keys):
        vals = np.array([r["residuals"][j] for r in used])
        R = len(vals)
        mean = float(vals.mean())
        std = float(vals.std(ddof=1)) if R > 1 else 0.0
        half = 1.96 * std / math.sqrt(R)
        row = dict(key)
        row.update(replicates_used=R, mean_residual=mean, median_residual=float(np.median(vals)),
                   std_residual=std, ci_lo=mean - half, ci_hi=mean + half,
                   extinct=extinct, capped=capped,
                   median_abs_residual=float(np.median(np.abs(vals))),
                   k_n=choose_k(row["n"], cfg.beta) if row["n"] >= 2 else 0)
        rows.append(row)
    first = ["n", "t"] if kind == "clt" else ["n", "A"]
    columns = tuple(first + ["replicates_used", "mean_residual", "median_residual", "std_residual",
                             "ci_lo", "ci_hi", "extinct", "capped"])
    meta = {"master_seed": cfg.seed, "replicates": cfg.replicates, "n_max": cfg.n_max,
            "beta": cfg.beta, "note": PROXY_NOTE}
    per_rep = [{k: r[k] for k in ("replicate", "capped", "extinct", "W_hat", "V1_hat", "V2_hat") if k in r}
               for r in reps]
    return Report(kind, columns, rows, meta, per_rep)


def run_clt(config: ExperimentConfig) -> Report:
    """Residuals sqrt(n)[Z_n(ell_n + s_n t)/Pi_n - Phi(t) W] - V(t), per path.

    Each replicate uses its own end-of-path (W, V1) in the rate function.
    """
    _require(config.spec, config, 1)
    if not config.t_grid:
        raise ConfigError("t_grid is empty")
    reps = _pmap(_theorem_replicate, [("clt", config, r) for r in range(config.replicates)], config.threads)
    keys = [{"n": n, "t": t} for n in config.n_schedule for t in config.t_grid]
    return _aggregate("clt", config, reps, keys)


def run_llt(config: ExperimentConfig) -> Report:
    """Residuals n[sqrt(2 pi) s_n Z_n(A + ell_n)/Pi_n - W int_A exp(-x^2/2s_n^2)] - mu(A)."""
    if config.A is None:
        raise ConfigError("run_llt needs an interval set A")
    _require(config.spec, config, 2)
    reps = _pmap(_theorem_replicate, [("llt", config, r) for r in range(config.replicates)], config.threads)
    keys = [{"n": n, "A": str(config.A)} for n in config.n_schedule]
    return _aggregate("llt", config, reps, keys)


def trend_ok(report: Report, **where) -> bool:
    """Median |residual| strictly decreasing along the schedule and final < first / 2."""
    med = report.column("median_abs_residual", **where)
    if len(med) < 2:
        return False
    return all(b < a for a, b in zip(med[:-1], med[1:])) and med[-1] < med[0] / 2


# ---------------------------------------------------------------- martingales

def _population_chunk(args):
    cfg, chunk, size = args
    ss = replicate_seed(cfg.seed, "population", chunk)
    env_ss, sim_ss = ss.spawn(2)
    real = sample_environment(cfg.spec, cfg.n_max, env_ss)
    batch = simulate_batch(real, cfg.n_max, size, sim_ss, CapPolicy(cfg.cap))
    keep = ~batch.capped
    return {n: [v[keep] for v in batch_values(batch, n)] for n in cfg.n_schedule}, int((~keep).sum())


def _conditional_run(args):
    cfg, n, j = args
    ss = replicate_seed(cfg.seed, "conditional", n, j)
    env_ss, sim_ss = ss.spawn(2)
    real = sample_environment(cfg.spec, n + 1, env_ss)
    traj = simulate(real, n, sim_ss, CapPolicy(cfg.cap))
    rep = conditional_martingale_test(traj, n, cfg.replicates, replicate_seed(cfg.seed, "regrow", n, j))
    return {"n": n, "seed_index": j, "z": list(rep.z), "passed": rep.passed}


def _z(mean: float, se: float, target: float) -> float:
    if se == 0.0:
        return 0.0 if abs(mean - target) <= 1e-9 else math.copysign(math.inf, mean - target)
    return (mean - target) / se


def run_martingale_suite(config: ExperimentConfig, conditional: bool = True) -> Report:
    """Population tests E W_n = 1, E N1 = E N2 = 0 and one-step conditional tests.

    Population tests use ``config.replicates`` paths per n in the schedule.
    Conditional tests regrow one generation ``config.replicates`` times from
    ``config.conditional_seeds`` independently grown populations per n; a
    run passes when all three |z| < 3.
    """
    _require(config.spec, config, None)
    R = config.replicates
    sizes = [min(_POP_CHUNK, R - c) for c in range(0, R, _POP_CHUNK)]
    parts = _pmap(_population_chunk, [(config, i, s) for i, s in enumerate(sizes)], config.threads)
    capped = sum(c for _, c in parts)
    rows = []
    for n in config.n_schedule:
        for idx, (name, target) in enumerate((("W", 1.0), ("N1", 0.0), ("N2", 0.0))):
            vals = np.concatenate([p[n][idx] for p, _ in parts])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            z = _z(mean, se, target)
            rows.append({"test": "population", "n": n, "statistic": name, "mean": mean, "se": se,
                         "z": z, "runs": len(vals), "pass_rate": float(abs(z) < 3), "passed": abs(z) < 3})
    cond = []
    if conditional and config.conditional_seeds > 0:
        jobs = [(config, n, j) for n in config.n_schedule for j in range(config.conditional_seeds)]
        cond = _pmap(_conditional_run, jobs, config.threads)
        for n in config.n_schedule:
            runs = [c for c in cond if c["n"] == n]
            zmax = float(max(max(abs(z) for z in c["z"]) for c in runs))
            rate = sum(c["passed"] for c in runs) / len(runs)
            rows.append({"test": "conditional", "n": n, "statistic": "W,N1,N2", "mean": math.nan,
                         "se": math.nan, "z": zmax, "runs": len(runs), "pass_rate": rate,
                         "passed": rate >= 0.99})
    pooled = (sum(c["passed"] for c in cond) / len(cond)) if cond else math.nan
    meta = {"master_seed": config.seed, "replicates": R, "capped": capped,
            "conditional_pass_rate": pooled}
    columns = ("test", "n", "statistic", "mean", "se", "z", "runs", "pass_rate", "passed")
    return Report("martingales", columns, rows, meta, cond)


# ---------------------------------------------------------------- edgeworth

def _oracle_for(law) -> Callable[[int, float], float]:
    if law.family == "gaussian":
        return lambda n, z: Phi(z)
    if law.family == "uniform":
        return oracle.irwin_hall_standardized_cdf
    if law.family == "shifted_exponential":
        return oracle.gamma_sum_standardized_cdf
    raise ConfigError(f"no exact oracle for displacement family {law.family!r}")


def run_edgeworth_validation(config: ExperimentConfig, grid: np.ndarray | None = None) -> Report:
    """Sup-norm error over x in [-5, 5] (step 0.01) of the order-k expansion vs the exact CDF."""
    if len(config.spec.states) != 1:
        raise ConfigError("edgeworth validation needs a single-state (i.i.d.) spec")
    law = config.spec.states[0].displacement
    ref = _oracle_for(law)
    mu = step_moments(config.spec.states[0].offspring, law).sigma
    xs = np.round(np.arange(-500, 501) * 0.01, 10) if grid is None else np.asarray(grid)
    rows = []
    for n in config.n_schedule:
        exact = np.array([ref(n, float(x)) for x in xs])
        terms = build_terms(iid_cumulants(mu, n), order=3)
        for order in config.orders:
            approx = expansion_cdf(terms, xs, order)
            rows.append({"n": n, "order": order, "sup_error": float(np.max(np.abs(exact - approx)))})
    return Report("edgeworth", ("n", "order", "sup_error"), rows,
                  {"family": law.family, "grid": [float(xs[0]), float(xs[-1]), len(xs)]})


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(report: Report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_fmt(row[c]) for c in report.columns])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(_jsonable(report.to_dict()), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def emit(report: Report, fmt: str, path) -> None:
    text = render(report, fmt)
    with open(path, "w", newline="") as fh:
        fh.write(text)
