"""A random environment: two generation types, drawn independently each step.

Run with ``python3 demos/01_environment.py``.
"""

import warnings

from brwre.env import (
    EnvironmentSpec,
    EnvState,
    check_conditions,
    cumulative_profile,
    expected_moments,
    geometric,
    poisson,
    sample_environment,
    shifted_exponential,
    two_point,
    uniform,
)

# %% a "calm" generation and a "busy", skewed one
spec = EnvironmentSpec((
    EnvState(0.6, poisson(1.4), uniform(-1.0, 1.0)),
    EnvState(0.4, geometric(3.0), shifted_exponential(1.0, -1.0)),
))
e = expected_moments(spec)
print(f"E ln m_0      = {e.e_ln_m:.4f}  (> 0: supercritical)")
print(f"E sigma2      = {e.e_sigma2:.4f}")
print(f"E sigma3      = {e.e_sigma3:.4f}")
print(f"E 4th cumul.  = {e.e_sigma4_excess:.4f}")

# %% standing conditions, evaluated numerically
rep = check_conditions(spec, lambda_=17, eta=17, delta=1)
for name, ok in rep.checks.items():
    print(f"  {name:28s} {'ok' if ok else 'FAILS'}")

# %% one environment path and its cumulative profile
real = sample_environment(spec, 12, seed=1)
prof = cumulative_profile(real)
print("states:", real.state_indices.tolist())
print("ln Pi_n:", [round(float(v), 3) for v in prof.log_Pi])
print("s_n    :", [round(float(v), 3) for v in prof.s])

# %% a lattice displacement law is flagged, not silently accepted
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    check_conditions(EnvironmentSpec.single(poisson(2.0), two_point(-1, 1, 0.5)), 17, 17, 1)
print("warning:", caught[0].message)
