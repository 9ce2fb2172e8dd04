import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brwre import oracle
from brwre.env import (
    ConfigError,
    EnvironmentRealization,
    EnvironmentSpec,
    EnvState,
    binomial,
    check_conditions,
    cumulative_profile,
    expected_moments,
    finite,
    finite_lattice,
    fixed_displacement,
    fixed_offspring,
    gaussian,
    geometric,
    laplace,
    parse_spec,
    poisson,
    sample_environment,
    shifted_exponential,
    spec_to_dict,
    step_moments,
    two_point,
    uniform,
)

TWO_STATE = {
    "states": [
        {"weight": 0.3, "offspring": {"family": "poisson", "mean": 2.0},
         "displacement": {"family": "gaussian", "mean": 0.0, "var": 0.5}},
        {"weight": 0.7, "offspring": {"family": "binomial", "n": 4, "p": 0.5},
         "displacement": {"family": "uniform", "a": -1.0, "b": 2.0}},
    ],
    "seed": 11,
}


class TestParse:
    def test_single_state(self):
        doc = {"states": [{"weight": 1.0, "offspring": {"family": "poisson", "mean": 2},
                           "displacement": {"family": "gaussian", "mean": 0, "var": 1}}]}
        spec = parse_spec(doc)
        assert len(spec.states) == 1 and spec.states[0].weight == 1.0

    def test_order_and_weights_preserved(self):
        spec = parse_spec(json.dumps(TWO_STATE))
        assert [s.weight for s in spec.states] == [0.3, 0.7]
        assert spec.states[1].offspring.family == "binomial"
        assert spec.seed == 11

    def test_round_trip(self):
        spec = parse_spec(TWO_STATE)
        again = parse_spec(json.dumps(spec_to_dict(spec)))
        assert again == spec

    def test_weights_must_sum_to_one(self):
        doc = json.loads(json.dumps(TWO_STATE))
        doc["states"][0]["weight"] = 0.5
        doc["states"][1]["weight"] = 0.6
        with pytest.raises(ConfigError, match="weights sum ≠ 1"):
            parse_spec(doc)

    @pytest.mark.parametrize("bad", [
        "{not json",
        "[]",
        {"states": []},
        {"states": [{"weight": 1.0}]},
        {"states": TWO_STATE["states"], "colour": 3},
        {"states": [{"weight": 1.0, "offspring": {"family": "zipf"},
                     "displacement": {"family": "gaussian", "mean": 0, "var": 1}}]},
        {"states": [{"weight": 1.0, "offspring": {"family": "poisson", "mean": 2, "rate": 1},
                     "displacement": {"family": "gaussian", "mean": 0, "var": 1}}]},
        {"states": [{"weight": 1.0, "offspring": {"family": "poisson", "mean": -1},
                     "displacement": {"family": "gaussian", "mean": 0, "var": 1}}]},
        {"states": [{"weight": 1.0, "offspring": {"family": "poisson", "mean": 2},
                     "displacement": {"family": "uniform", "a": 1, "b": 0}}]},
    ])
    def test_malformed(self, bad):
        with pytest.raises(ConfigError):
            parse_spec(bad)

    def test_experiment_keys_kept(self):
        doc = dict(TWO_STATE, n_schedule=[3, 5], replicates=7)
        spec = parse_spec(doc)
        assert spec.extras["n_schedule"] == [3, 5]
        assert spec.extras["replicates"] == 7


class TestStepMoments:
    def test_gaussian(self):
        s = step_moments(poisson(2), gaussian(0, 1))
        assert s.l == 0.0
        assert s.sigma == (1.0, 0.0, 3.0, 0.0, 15.0)
        assert s.ln_m == math.log(2)

    def test_shifted_exponential(self):
        s = step_moments(poisson(2), shifted_exponential(1.0, -1.0))
        assert s.l == 0.0
        assert s.sigma[:3] == pytest.approx((1.0, 2.0, 9.0), abs=1e-14)

    def test_uniform_exact(self):
        s = step_moments(poisson(2), uniform(-0.5, 0.5))
        assert s.sigma2 == pytest.approx(float(Fraction(1, 12)), rel=1e-15)
        assert s.sigma3 == 0.0
        assert s.central(4) == pytest.approx(float(Fraction(1, 80)), rel=1e-15)

    @pytest.mark.parametrize("law", [
        gaussian(0.3, 2.0), uniform(-1.0, 3.0), laplace(0.5, 0.7),
        shifted_exponential(2.0, -0.5), two_point(-1.0, 2.0, 0.3),
        finite_lattice([(-1, 0.2), (0, 0.5), (3, 0.3)]),
    ])
    def test_closed_form_matches_quadrature(self, law):
        _, closed = law.mean_and_central()
        numeric = oracle.numeric_central_moments(law)
        for a, b in zip(closed, numeric):
            assert a == pytest.approx(b, rel=1e-9, abs=1e-12)

    def test_offspring_means(self):
        assert geometric(2.0).mean == 2.0
        assert binomial(5, 0.4).mean == pytest.approx(2.0)
        assert finite([(1, 0.5), (2, 0.5)]).mean == 1.5

    @pytest.mark.parametrize("law", [poisson(2.0), geometric(1.5), binomial(6, 0.3),
                                     finite([(0, 0.2), (3, 0.8)])])
    def test_sampling_mean(self, law):
        rng = np.random.default_rng(5)
        x = law.sample(rng, 200_000)
        assert x.dtype.kind == "i"
        se = x.std() / math.sqrt(len(x))
        assert abs(x.mean() - law.mean) < 4 * se + 1e-12

    def test_pmf_table_sums_to_one(self):
        for law in (poisson(2.0), geometric(2.0), binomial(5, 0.4), poisson(0.8)):
            k, p = law.pmf_table()
            assert abs(p.sum() - 1.0) < 1e-12
            assert k[0] == 0


class TestSampling:
    def test_single_state_constant(self, poisson_gaussian):
        real = sample_environment(poisson_gaussian, 50, 3)
        assert np.all(real.state_indices == 0)

    def test_equal_weights_frequency(self):
        spec = EnvironmentSpec((EnvState(0.5, poisson(2), gaussian()),
                                EnvState(0.5, poisson(3), gaussian())))
        n = 10**5
        real = sample_environment(spec, n, 17)
        freq = float(np.mean(real.state_indices == 0))
        assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / n)

    @given(st.integers(0, 2**32), st.integers(1, 40))
    def test_deterministic(self, seed, n):
        spec = parse_spec(TWO_STATE)
        a = sample_environment(spec, n, seed)
        b = sample_environment(spec, n, seed)
        assert np.array_equal(a.state_indices, b.state_indices)


class TestProfile:
    def test_constant_environment(self):
        spec = EnvironmentSpec.single(fixed_offspring(2), gaussian())
        prof = cumulative_profile(sample_environment(spec, 25, 0))
        assert prof.Pi[10] == 1024.0
        assert math.exp(prof.log_Pi[10]) == pytest.approx(1024.0, rel=1e-14)
        assert prof.s[25] == 5.0

    def test_alternating_variances(self):
        spec = EnvironmentSpec((EnvState(0.5, poisson(2), gaussian(0, 0.5)),
                                EnvState(0.5, poisson(2), gaussian(0, 1.5))))
        real = EnvironmentRealization.from_indices(spec, [0, 1, 0, 1])
        prof = cumulative_profile(real)
        assert prof.s2(4) == math.fsum([0.5, 1.5, 0.5, 1.5]) == 4.0

    def test_overflow_flagged(self):
        spec = EnvironmentSpec.single(fixed_offspring(10**6), gaussian())
        prof = cumulative_profile(sample_environment(spec, 60, 0))
        assert prof.Pi_overflow[-1] and math.isnan(prof.Pi[-1])
        assert math.isfinite(prof.log_Pi[-1])

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=30))
    def test_extend_matches_rebuild(self, idx):
        spec = parse_spec(TWO_STATE)
        real = EnvironmentRealization.from_indices(spec, idx)
        full = cumulative_profile(real)
        grown = cumulative_profile(real, len(idx) - 1).extend(real.per_step[-1])
        np.testing.assert_allclose(grown.log_Pi, full.log_Pi, rtol=1e-14)
        np.testing.assert_allclose(grown.s_nu, full.s_nu, rtol=1e-13, atol=1e-14)
        np.testing.assert_allclose(grown.c4, full.c4, rtol=1e-13, atol=1e-14)


class TestExpectations:
    def test_gaussian_reductions(self, poisson_gaussian):
        e = expected_moments(poisson_gaussian)
        assert (e.e_sigma2, e.e_sigma3, e.e_sigma4_excess) == (1.0, 0.0, 0.0)
        assert e.e_ln_m == math.log(2)

    def test_mixture_average(self):
        spec = EnvironmentSpec((EnvState(0.5, poisson(2), gaussian(0, 0.5)),
                                EnvState(0.5, poisson(2), gaussian(0, 1.5))))
        assert expected_moments(spec).e_sigma2 == 1.0


class TestConditions:
    def test_all_pass(self, poisson_gaussian):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rep = check_conditions(poisson_gaussian, 9, 13, 0.5)
        assert rep.ok and rep.cramer_ok == (True,)
        # E|N(0,1)|^13 = 2^6.5 Gamma(7) / sqrt(pi)
        assert rep.displacement_moment == pytest.approx(2**6.5 * math.gamma(7) / math.sqrt(math.pi), rel=1e-8)
        assert rep.negative_moment == pytest.approx(2**-0.5)
        assert rep.theorem_hypotheses(1)
        assert not rep.theorem_hypotheses(2)

    def test_subcritical(self, quiet):
        rep = check_conditions(EnvironmentSpec.single(poisson(0.8), gaussian()), 9, 13, 0.5)
        assert not rep.checks["supercritical"]
        assert rep.e_ln_m0 == pytest.approx(math.log(0.8))
        assert not rep.ok

    def test_lattice_warning(self):
        spec = EnvironmentSpec.single(poisson(2), two_point(-1, 1, 0.5))
        with pytest.warns(UserWarning, match="lattice"):
            rep = check_conditions(spec, 9, 13, 0.5)
        assert rep.cramer_ok == (False,)
        assert any("lattice" in w for w in rep.warnings)

    def test_degenerate_displacement(self, quiet):
        rep = check_conditions(EnvironmentSpec.single(fixed_offspring(2), fixed_displacement(0.0)), 9, 13, 1)
        assert not rep.checks["cramer"] and not rep.checks["nondegenerate"]

    def test_rejects_nonpositive_parameters(self, poisson_gaussian):
        with pytest.raises(ValueError):
            check_conditions(poisson_gaussian, 0, 13, 0.5)
