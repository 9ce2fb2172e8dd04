"""Generation-by-generation simulation of the branching random walk.

Particles are stored as one flat position array per generation; the tree is
never materialised. Within a generation all offspring counts are drawn
first (particle order), then all displacements (particle order, then child
order), so runs are reproducible given the generator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .env import (
    EnvironmentRealization,
    EnvironmentSpec,
    EnvState,
    MomentProfile,
    as_seed_sequence,
    cumulative_profile,
    sample_environment,
)
from .limits import IntervalSet

__all__ = [
    "CapPolicy",
    "CapExceeded",
    "Generation",
    "Trajectory",
    "Batch",
    "advance",
    "simulate",
    "simulate_batch",
    "count_in",
    "normalized_cdf_count",
    "decomposition_check",
    "dump_csv",
    "make_rng",
]

DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class CapPolicy:
    max_particles: int = DEFAULT_CAP

    def __post_init__(self):
        if self.max_particles < 1:
            raise ValueError("max_particles must be >= 1")


class CapExceeded(RuntimeError):
    """Signal from :func:`advance` that the next generation would exceed the cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"generation of {size} particles exceeds cap {cap}")
        self.size = size


@dataclass(frozen=True)
class Generation:
    index: int
    positions: np.ndarray
    ancestor_at_k: np.ndarray | None = None

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class Trajectory:
    realization: EnvironmentRealization
    generations: tuple[Generation, ...]
    profile: MomentProfile
    counts: np.ndarray
    extinct_at: int | None
    cap_hit: bool
    ancestry_k: int | None = None

    @property
    def n(self) -> int:
        """Last simulated generation."""
        return len(self.generations) - 1


def make_rng(seed) -> np.random.Generator:
    """Generator for a replicate; ``seed`` may be an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(as_seed_sequence(seed)))


def advance(gen: Generation, state: EnvState, rng: np.random.Generator,
            cap: CapPolicy | None = None) -> Generation:
    """Replace every particle of ``gen`` by its children under ``state``."""
    size = len(gen.positions)
    if size == 0:
        anc = None if gen.ancestor_at_k is None else gen.ancestor_at_k[:0]
        return Generation(gen.index + 1, gen.positions[:0], anc)
    counts = state.offspring.sample(rng, size)
    total = int(counts.sum())
    if cap is not None and total > cap.max_particles:
        raise CapExceeded(total, cap.max_particles)
    children = np.repeat(gen.positions, counts) + state.displacement.sample(rng, total)
    anc = None if gen.ancestor_at_k is None else np.repeat(gen.ancestor_at_k, counts)
    return Generation(gen.index + 1, children, anc)


def _split_seed(seed):
    """Independent streams for the environment and the branching mechanism."""
    env_ss, branch_ss = as_seed_sequence(seed).spawn(2)
    return env_ss, branch_ss


def simulate(source: EnvironmentSpec | EnvironmentRealization, n: int, seed,
             cap: CapPolicy | None = None, track_ancestry_at: int | None = None) -> Trajectory:
    """Simulate generations 0..n. A pure function of its arguments.

    When ``source`` is a spec the environment is sampled from a stream
    spawned off ``seed``; a realization is used as given.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = cap or CapPolicy()
    if track_ancestry_at is not None and not 0 <= track_ancestry_at <= n:
        raise ValueError("ancestry generation must lie in 0..n")
    env_ss, branch_ss = _split_seed(seed)
    if isinstance(source, EnvironmentSpec):
        realization = sample_environment(source, n, env_ss)
    else:
        realization = source
        if len(realization) < n:
            raise ValueError("realization shorter than n")
    rng = make_rng(branch_ss)

    gen = Generation(0, np.zeros(1))
    if track_ancestry_at == 0:
        gen = Generation(0, gen.positions, np.zeros(1, dtype=np.int64))
    gens = [gen]
    cap_hit = False
    extinct_at = None
    for k in range(n):
        try:
            gen = advance(gen, realization.state(k), rng, cap)
        except CapExceeded:
            cap_hit = True
            break
        if track_ancestry_at is not None and gen.index == track_ancestry_at:
            gen = Generation(gen.index, gen.positions, np.arange(len(gen.positions)))
        gens.append(gen)
        if extinct_at is None and len(gen.positions) == 0:
            extinct_at = gen.index
    counts = np.array([len(g.positions) for g in gens], dtype=np.int64)
    profile = cumulative_profile(realization, len(gens) - 1)
    return Trajectory(realization, tuple(gens), profile, counts, extinct_at, cap_hit, track_ancestry_at)


def count_in(gen: Generation, B: IntervalSet) -> int:
    return B.count(gen.positions)


def normalized_cdf_count(traj: Trajectory, n: int, t: float) -> float:
    """Z_n(ell_n + s_n t) / Pi_n."""
    if n > traj.n:
        raise ValueError(f"trajectory only reaches generation {traj.n}")
    prof = traj.profile
    s_n = prof.s[n]
    if not s_n > 0:
        raise ValueError("zero variance window")
    x = prof.ell[n] + s_n * t
    z = IntervalSet.half_line(x).count(traj.generations[n].positions)
    return z * prof.inv_Pi(n)


def decomposition_check(traj: Trajectory, n: int, B: IntervalSet) -> tuple[int, int]:
    """Return ``(Z_n(B), sum_u Z_{n-k}(u, B - S_u))`` with ``k`` the tracked generation.

    The right side groups generation-``n`` particles by their generation-``k``
    ancestor ``u`` and counts each group's displacement relative to ``S_u``
    inside the shifted set ``B - S_u``.
    """
    k = traj.ancestry_k
    if k is None or traj.generations[n].ancestor_at_k is None:
        raise ValueError("ancestry missing: simulate with track_ancestry_at")
    if not k < n <= traj.n:
        raise ValueError("need k < n <= trajectory length")
    lhs = count_in(traj.generations[n], B)
    gen_k = traj.generations[k].positions
    gen_n = traj.generations[n]
    anc = gen_n.ancestor_at_k
    if len(anc) == 0:
        return lhs, 0
    order = np.argsort(anc, kind="stable")
    anc_sorted = anc[order]
    rel = gen_n.positions[order] - gen_k[anc_sorted]
    bounds = np.searchsorted(anc_sorted, np.arange(len(gen_k) + 1))
    rhs = 0
    for u in np.unique(anc_sorted):
        subtree = rel[bounds[u]:bounds[u + 1]]
        rhs += B.shift(-gen_k[u]).count(subtree)
    return lhs, rhs


def dump_csv(traj: Trajectory, path) -> None:
    """Columns: generation, particle_index, position, ancestor_at_k (blank if untracked)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "particle_index", "position", "ancestor_at_k"])
        for g in traj.generations:
            anc = g.ancestor_at_k
            for i, x in enumerate(g.positions):
                w.writerow([g.index, i, format(float(x), ".17g"), "" if anc is None else int(anc[i])])


@dataclass(frozen=True)
class Batch:
    """Many independent replicates simulated together on flat arrays.

    ``positions[j]`` holds every particle of generation ``start_generation + j``
    across replicates and ``labels[j]`` its replicate index (nondecreasing).
    ``counts`` has shape ``(replicates, n + 1 - start_generation)``.
    """

    realization: EnvironmentRealization
    profile: MomentProfile
    positions: tuple[np.ndarray, ...]
    labels: tuple[np.ndarray, ...]
    counts: np.ndarray
    replicates: int
    capped: np.ndarray
    start_generation: int = 0

    @property
    def n(self) -> int:
        return self.start_generation + len(self.positions) - 1

    def at(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Positions and replicate labels of generation ``k``."""
        j = k - self.start_generation
        if not 0 <= j < len(self.positions):
            raise IndexError(f"generation {k} not in batch")
        return self.positions[j], self.labels[j]

    def per_replicate_sum(self, k: int, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.at(k)[1], weights=values, minlength=self.replicates)

    def count_in(self, k: int, B: IntervalSet) -> np.ndarray:
        pos, lab = self.at(k)
        return np.bincount(lab[B.contains(pos)], minlength=self.replicates)


def simulate_batch(realization: EnvironmentRealization, n: int, replicates: int, seed,
                   cap: CapPolicy | None = None,
                   start: np.ndarray | None = None, start_generation: int = 0) -> Batch:
    """Simulate ``replicates`` independent copies under one fixed environment.

    All replicates share one stream, so a batch reproduces only when rerun
    with the same ``replicates``. ``start`` (positions of a frozen population
    at ``start_generation``) replaces the single root particle. Replicates
    whose own population exceeds the cap are flagged in ``capped`` and
    emptied from the next generation on.
    """
    if n <= start_generation:
        raise ValueError("n must exceed the start generation")
    if len(realization) < n:
        raise ValueError("realization shorter than n")
    cap = cap or CapPolicy()
    rng = make_rng(seed)
    start = np.zeros(1) if start is None else np.asarray(start, dtype=float)
    pos = np.tile(start, replicates)
    lab = np.repeat(np.arange(replicates), len(start))
    positions, labels = [pos], [lab]
    capped = np.zeros(replicates, dtype=bool)
    for k in range(start_generation, n):
        state = realization.state(k)
        counts = state.offspring.sample(rng, len(pos))
        per_rep = np.bincount(lab, weights=counts, minlength=replicates)
        over = per_rep > cap.max_particles
        if over.any():
            capped |= over
            counts = np.where(over[lab], 0, counts)
        total = int(counts.sum())
        pos = np.repeat(pos, counts) + state.displacement.sample(rng, total)
        lab = np.repeat(lab, counts)
        positions.append(pos)
        labels.append(lab)
    count_mat = np.stack([np.bincount(l, minlength=replicates) for l in labels], axis=1)
    profile = cumulative_profile(realization, n)
    return Batch(realization, profile, tuple(positions), tuple(labels), count_mat, replicates, capped,
                 start_generation)
