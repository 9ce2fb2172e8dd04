"""Desk-scale look at the second-order CLT and local limit rates.

Uses fewer replicates than the acceptance suite so it finishes in a few seconds.
"""

from brwre.env import EnvironmentSpec, fixed_offspring, gaussian
from brwre.harness import ExperimentConfig, run_clt, run_llt, trend_ok
from brwre.limits import IntervalSet

spec = EnvironmentSpec.single(fixed_offspring(2), gaussian(0.0, 1.0))
cfg = ExperimentConfig(spec, n_schedule=(6, 10, 14, 18), replicates=60, t_grid=(0.0, 1.0),
                       A=IntervalSet.of((-1.0, 1.0)), seed=0)

# %% residual of the sqrt(n)-scaled CDF error after subtracting the rate
clt = run_clt(cfg)
for t in cfg.t_grid:
    med = clt.column("median_abs_residual", t=t)
    print(f"t = {t:g}: median |rho_n| =", [f"{v:.4f}" for v in med], " trend ok:", trend_ok(clt, t=t))

# %% residual of the n-scaled local error on A = [-1, 1]
llt = run_llt(cfg)
med = llt.column("median_abs_residual")
print("A = [-1, 1]: median |Lambda_n - mu| =", [f"{v:.4f}" for v in med], " trend ok:", trend_ok(llt))
print("\nnote:", clt.meta["note"])
