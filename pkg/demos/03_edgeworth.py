"""How much each Edgeworth term buys, measured against exact sum distributions."""

import numpy as np

from brwre import oracle
from brwre.edgeworth import build_terms, expansion_cdf, iid_cumulants
from brwre.env import shifted_exponential, uniform

xs = np.round(np.arange(-500, 501) * 0.01, 10)
cases = (
    ("uniform", uniform(-0.5, 0.5), oracle.irwin_hall_standardized_cdf, (6, 12, 24)),
    ("exponential", shifted_exponential(1.0, -1.0), oracle.gamma_sum_standardized_cdf, (8, 16, 32)),
)

# %% sup-norm error on [-5, 5] by order
for name, law, exact_cdf, ns in cases:
    _, mu = law.mean_and_central()
    print(f"\n{name}")
    print("   n    order0    order1    order2    order3")
    for n in ns:
        exact = np.array([exact_cdf(n, x) for x in xs])
        terms = build_terms(iid_cumulants(mu, n), order=3)
        errs = [np.max(np.abs(exact - expansion_cdf(terms, xs, k))) for k in range(4)]
        print(f"{n:4d}  " + "  ".join(f"{e:.2e}" for e in errs))
