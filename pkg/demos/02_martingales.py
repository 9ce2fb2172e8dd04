"""The three martingales along one path, and their means over many paths."""

import numpy as np

from brwre.env import EnvironmentSpec, poisson, sample_environment, shifted_exponential
from brwre.martingales import batch_values, conditional_martingale_test, track
from brwre.popsim import simulate, simulate_batch

spec = EnvironmentSpec.single(poisson(2.0), shifted_exponential(1.0, -1.0))

# %% one path: W_n settles quickly, N1 and N2 wander more
traj = simulate(spec, 14, seed=3)
tr = track(traj)
print(" n      Z_n        W_n       N1_n       N2_n")
for n in range(0, traj.n + 1, 2):
    print(f"{n:2d} {traj.counts[n]:8d} {tr.W[n]:10.4f} {tr.N1[n]:10.4f} {tr.N2[n]:10.4f}")

# %% means over 20 000 independent paths at n = 8
real = sample_environment(spec, 8, 0)
w, n1, n2 = batch_values(simulate_batch(real, 8, 20_000, seed=5), 8)
for name, v, target in (("W", w, 1.0), ("N1", n1, 0.0), ("N2", n2, 0.0)):
    se = v.std(ddof=1) / np.sqrt(len(v))
    print(f"E {name:2s} = {v.mean():+.4f} +- {se:.4f}   (z = {(v.mean() - target) / se:+.2f})")

# %% freeze generation 6 and regrow generation 7 many times
rep = conditional_martingale_test(traj, 6, 5000, rng=11)
print("frozen:", np.round(rep.frozen, 4), " regrown means:", np.round(rep.means, 4), " z:", np.round(rep.z, 2))
