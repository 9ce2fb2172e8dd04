import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brwre.env import (
    EnvironmentSpec,
    EnvState,
    finite,
    fixed_displacement,
    fixed_offspring,
    gaussian,
    poisson,
    sample_environment,
    shifted_exponential,
    two_point,
    uniform,
)
from brwre.martingales import (
    batch_values,
    conditional_martingale_test,
    estimate_limits,
    export_track,
    increments_from_particles,
    limits_at_end,
    track,
)
from brwre.popsim import simulate, simulate_batch


def test_binary_w_is_one():
    for disp in (gaussian(), uniform(-1, 2), two_point(0, 3, 0.2)):
        tr = track(simulate(EnvironmentSpec.single(fixed_offspring(2), disp), 8, 1))
        assert np.allclose(tr.W, 1.0, rtol=0, atol=1e-15)


def test_n1_one_step_law():
    spec = EnvironmentSpec.single(fixed_offspring(2), two_point(-1, 1, 0.5))
    batch = simulate_batch(sample_environment(spec, 1, 0), 1, 40_000, 3)
    _, n1, n2 = batch_values(batch, 1)
    assert set(np.unique(n1)) <= {-1.0, 0.0, 1.0}
    for v, p in ((-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)):
        assert abs(np.mean(n1 == v) - p) < 4 * math.sqrt(p * (1 - p) / len(n1))
    assert np.all(n2 == 0.0)


def test_extinct_path():
    spec = EnvironmentSpec.single(finite([(0, 0.5), (3, 0.5)]), gaussian())
    traj = next(t for t in (simulate(spec, 6, s) for s in range(100)) if t.extinct_at is not None)
    est = limits_at_end(traj)
    assert (est.W_hat, est.V1_hat, est.V2_hat) == (0.0, 0.0, 0.0)


def test_static_cloud():
    spec = EnvironmentSpec.single(fixed_offspring(2), fixed_displacement(0.0))
    tr = track(simulate(spec, 6, 0))
    assert tr.W.tolist() == [1.0] * 7
    assert tr.N1.tolist() == [0.0] * 7 and tr.N2.tolist() == [0.0] * 7


def test_limits_agree_with_track(poisson_gaussian):
    traj = simulate(poisson_gaussian, 7, 5)
    a, b = estimate_limits(track(traj)), limits_at_end(traj)
    assert (a.W_hat, a.V1_hat, a.V2_hat) == (b.W_hat, b.V1_hat, b.V2_hat)
    with pytest.raises(ValueError):
        estimate_limits(track(traj), 3)


def test_v1_hat_centred():
    # E N_{1,n} = 0; batches of independent paths at n = 12
    spec = EnvironmentSpec.single(poisson(2.0), gaussian())
    vals = []
    for chunk in range(5):
        b = simulate_batch(sample_environment(spec, 12, 0), 12, 2000, chunk)
        vals.append(batch_values(b, 12)[1])
    v = np.concatenate(vals)
    assert abs(v.mean()) < 3 * v.std(ddof=1) / math.sqrt(len(v))


@given(st.integers(0, 2**32), st.integers(1, 4))
def test_increment_identities(seed, n):
    spec = EnvironmentSpec((EnvState(0.5, poisson(1.8), shifted_exponential(2.0, -0.3)),
                            EnvState(0.5, finite([(1, 0.5), (3, 0.5)]), uniform(-1, 2))))
    traj = simulate(spec, n + 1, seed, track_ancestry_at=n)
    tr = track(traj)
    i1, i2 = increments_from_particles(traj, n)
    scale = 1 + abs(tr.N2[n + 1]) + abs(tr.N2[n])
    assert i1 == pytest.approx(tr.I1[n], abs=1e-9 * scale)
    assert i2 == pytest.approx(tr.I2[n], abs=1e-9 * scale)


class TestConditional:
    def test_degenerate_gives_zero(self):
        spec = EnvironmentSpec.single(fixed_offspring(2), fixed_displacement(0.0))
        rep = conditional_martingale_test(simulate(spec, 4, 0), 4, 200, 1, state=spec.states[0])
        assert rep.z == (0.0, 0.0, 0.0) and rep.passed

    @pytest.mark.parametrize("disp", [gaussian(), shifted_exponential(1.0, -1.0)])
    def test_frozen_population(self, disp):
        spec = EnvironmentSpec.single(poisson(2.0), disp)
        passed = 0
        for seed in range(20):
            traj = simulate(spec, 5, seed)
            rep = conditional_martingale_test(traj, 5, 2000, 1000 + seed, state=spec.states[0])
            passed += rep.passed
        # each run fails with probability about 0.8%; 3 or more failures in 20 is ~5e-4
        assert passed >= 18


def test_export_track(tmp_path, poisson_gaussian):
    tr = track(simulate(poisson_gaussian, 4, 0))
    path = tmp_path / "t.csv"
    export_track(tr, path)
    rows = list(csv.DictReader(open(path)))
    assert [r["n"] for r in rows] == ["0", "1", "2", "3", "4"]
    assert float(rows[2]["W"]) == tr.W[2]
    assert rows[-1]["I1"] == ""
    assert float(rows[0]["I2"]) == pytest.approx(tr.N2[1] - tr.N2[0])
