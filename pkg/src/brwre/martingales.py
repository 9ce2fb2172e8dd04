"""The natural martingale W_n and the position martingales N_{1,n}, N_{2,n}.

With Pi_n the product of mean offspring counts, ell_n the summed drift and
s_n^2 the summed displacement variance,

    W_n    = Z_n(R) / Pi_n
    N_{1,n} = Pi_n^{-1} sum_{|u|=n} (S_u - ell_n)
    N_{2,n} = s_n^2 W_n - Pi_n^{-1} sum_{|u|=n} (S_u - ell_n)^2
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .env import EnvState, MomentProfile, step_moments
from .popsim import Batch, Trajectory, make_rng

__all__ = [
    "MartingaleTrack",
    "LimitEstimates",
    "ConditionalTestReport",
    "track",
    "estimate_limits",
    "limits_at_end",
    "batch_values",
    "increments_from_particles",
    "conditional_martingale_test",
    "export_track",
]


@dataclass(frozen=True)
class MartingaleTrack:
    W: np.ndarray
    N1: np.ndarray
    N2: np.ndarray

    @property
    def I1(self) -> np.ndarray:
        return np.diff(self.N1)

    @property
    def I2(self) -> np.ndarray:
        return np.diff(self.N2)

    @property
    def n(self) -> int:
        return len(self.W) - 1


@dataclass(frozen=True)
class LimitEstimates:
    """End-of-path values standing in for (W, V1, V2); the proxy error is not quantified."""

    W_hat: float
    V1_hat: float
    V2_hat: float
    at_generation: int


def _values(positions: np.ndarray, prof: MomentProfile, n: int) -> tuple[float, float, float]:
    inv_pi = prof.inv_Pi(n)
    centred = positions - prof.ell[n]
    w = len(positions) * inv_pi
    n1 = math.fsum(centred) * inv_pi
    n2 = prof.s2(n) * w - math.fsum(centred * centred) * inv_pi
    return w, n1, n2


def track(traj: Trajectory) -> MartingaleTrack:
    vals = np.array([_values(g.positions, traj.profile, g.index) for g in traj.generations])
    return MartingaleTrack(vals[:, 0].copy(), vals[:, 1].copy(), vals[:, 2].copy())


def estimate_limits(trackdata: MartingaleTrack, n: int | None = None) -> LimitEstimates:
    if n is None:
        n = trackdata.n
    if n != trackdata.n:
        raise ValueError("limits are read at the final generation of the track")
    return LimitEstimates(float(trackdata.W[n]), float(trackdata.N1[n]), float(trackdata.N2[n]), n)


def limits_at_end(traj: Trajectory) -> LimitEstimates:
    """End-of-path estimates without building the whole track."""
    n = traj.n
    return LimitEstimates(*_values(traj.generations[n].positions, traj.profile, n), n)


def batch_values(batch: Batch, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-replicate (W_n, N_{1,n}, N_{2,n}) for a simulated batch."""
    prof = batch.profile
    pos, lab = batch.at(n)
    inv_pi = prof.inv_Pi(n)
    centred = pos - prof.ell[n]
    R = batch.replicates
    w = np.bincount(lab, minlength=R) * inv_pi
    n1 = np.bincount(lab, weights=centred, minlength=R) * inv_pi
    n2 = prof.s2(n) * w - np.bincount(lab, weights=centred * centred, minlength=R) * inv_pi
    return w, n1, n2


def increments_from_particles(traj: Trajectory, n: int) -> tuple[float, float]:
    """Increments N_{.,n+1} - N_{.,n} rebuilt from per-particle offspring data.

    Uses, for each particle u of generation n with centred position
    y_u = S_u - ell_n, offspring count N_u and centred child steps
    d_ui = L_ui - l_n,

        X1_u = y_u (N_u / m_n - 1) + sum_i d_ui / m_n
        X2_u = (y_u^2 - s_n^2)(1 - N_u / m_n)
               + sum_i (sigma_n - d_ui^2) / m_n - 2 y_u sum_i d_ui / m_n

    and returns ``Pi_n^{-1} sum_u X_u`` for both. Needs ancestry tracked at n.
    """
    if traj.ancestry_k != n or n + 1 > traj.n:
        raise ValueError("trajectory must track ancestry at generation n and reach n + 1")
    step = traj.realization.per_step[n]
    prof = traj.profile
    parents = traj.generations[n].positions
    child_gen = traj.generations[n + 1]
    anc = child_gen.ancestor_at_k
    y = parents - prof.ell[n]
    N = np.bincount(anc, minlength=len(parents)).astype(float)
    d = child_gen.positions - parents[anc] - step.l
    sum_d = np.bincount(anc, weights=d, minlength=len(parents))
    sum_d2 = np.bincount(anc, weights=d * d, minlength=len(parents))
    m = step.m
    x1 = y * (N / m - 1) + sum_d / m
    x2 = (y * y - prof.s2(n)) * (1 - N / m) + (N * step.sigma2 - sum_d2) / m - 2 * y * sum_d / m
    inv_pi = prof.inv_Pi(n)
    return math.fsum(x1) * inv_pi, math.fsum(x2) * inv_pi


@dataclass(frozen=True)
class ConditionalTestReport:
    """One-step regrowth test of the martingale property at generation ``n``."""

    n: int
    replicates: int
    frozen: tuple[float, float, float]
    means: tuple[float, float, float]
    std_errors: tuple[float, float, float]
    z: tuple[float, float, float]

    @property
    def passed(self) -> bool:
        return all(abs(z) < 3 for z in self.z)


def conditional_martingale_test(traj: Trajectory, n: int, replicates: int, rng,
                                state: EnvState | None = None) -> ConditionalTestReport:
    """Regrow generation n+1 from the frozen generation-n population ``replicates`` times.

    Reports sample means of (W, N1, N2) at n+1, their standard errors, and
    z-scores against the frozen generation-n values. ``state`` defaults to
    the trajectory's own environment state at generation n.
    """
    if n > traj.n:
        raise ValueError("trajectory too short")
    if state is None:
        state = traj.realization.state(n)
    rng = make_rng(rng)
    prof = traj.profile
    frozen = _values(traj.generations[n].positions, prof, n)
    nxt = prof.truncate(n).extend(step_moments(state.offspring, state.displacement))
    parents = traj.generations[n].positions
    P = len(parents)
    R = replicates
    if P == 0:
        samples = np.zeros((3, R))
    else:
        counts = state.offspring.sample(rng, P * R)
        lab = np.repeat(np.arange(R), P)
        children = np.repeat(np.tile(parents, R), counts) + state.displacement.sample(rng, int(counts.sum()))
        clab = np.repeat(lab, counts)
        inv_pi = nxt.inv_Pi(n + 1)
        centred = children - nxt.ell[n + 1]
        w = np.bincount(clab, minlength=R) * inv_pi
        n1 = np.bincount(clab, weights=centred, minlength=R) * inv_pi
        n2 = nxt.s2(n + 1) * w - np.bincount(clab, weights=centred * centred, minlength=R) * inv_pi
        samples = np.vstack([w, n1, n2])
    means = samples.mean(axis=1)
    ses = samples.std(axis=1, ddof=1) / math.sqrt(R)
    z = []
    for mean, se, f in zip(means, ses, frozen):
        diff = mean - f
        # degenerate laws give zero spread; differences are then pure rounding
        if se <= 1e-12 * max(1.0, abs(f)):
            z.append(0.0 if abs(diff) <= 1e-9 * max(1.0, abs(f)) else math.copysign(math.inf, diff))
        else:
            z.append(diff / se)
    return ConditionalTestReport(n, R, tuple(frozen), tuple(map(float, means)),
                                 tuple(map(float, ses)), tuple(z))


def export_track(trackdata: MartingaleTrack, path) -> None:
    """CSV columns n, W, N1, N2, I1, I2 (increments blank on the last row)."""
    i1, i2 = trackdata.I1, trackdata.I2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "W", "N1", "N2", "I1", "I2"])
        for k in range(trackdata.n + 1):
            row = [k] + [format(float(a[k]), ".17g") for a in (trackdata.W, trackdata.N1, trackdata.N2)]
            row += [format(float(i1[k]), ".17g"), format(float(i2[k]), ".17g")] if k < trackdata.n else ["", ""]
            w.writerow(row)
