import math
from fractions import Fraction

import pytest
from scipy import integrate, stats

from brwre import oracle
from brwre.env import finite, fixed_displacement, fixed_offspring, gaussian, two_point, uniform


class TestEnumeration:
    def test_w_normalisation(self):
        path = [(finite([(1, 0.5), (2, 0.5)]), fixed_displacement(0.0))]
        d = oracle.enumerate_exact(path, 1, "W")
        assert d.values == pytest.approx((1 / 1.5, 2 / 1.5))
        assert d.probs == pytest.approx((0.5, 0.5))
        assert d.mean() == pytest.approx(1.0, abs=1e-15)

    def test_n1_two_point(self):
        path = [(fixed_offspring(2), two_point(-1, 1, 0.5))]
        d = oracle.enumerate_exact(path, 1, "N1")
        assert d.as_dict() == {-1.0: 0.25, 0.0: 0.5, 1.0: 0.25}

    def test_n2_two_point_constant(self):
        path = [(fixed_offspring(2), two_point(-1, 1, 0.5))]
        assert oracle.enumerate_exact(path, 1, "N2").as_dict() == {0.0: 1.0}

    def test_z_counts(self):
        path = [(fixed_offspring(2), fixed_displacement(0.0))] * 3
        d = oracle.enumerate_exact(path, 3, "Z", B=[(-0.5, 0.5)])
        assert d.as_dict() == {8.0: 1.0}

    @pytest.mark.parametrize("stat", ["W", "N1", "N2"])
    def test_martingale_means(self, stat):
        path = [(finite([(0, 0.25), (1, 0.25), (2, 0.5)]), two_point(-1, 2, 0.4)),
                (finite([(1, 0.5), (2, 0.5)]), two_point(0, 1, 0.5))]
        d = oracle.enumerate_exact(path, 2, stat)
        assert d.mean() == pytest.approx(1.0 if stat == "W" else 0.0, abs=1e-12)

    def test_guards(self):
        path = [(fixed_offspring(2), two_point(-1, 1, 0.5))] * 4
        with pytest.raises(ValueError):
            oracle.enumerate_exact(path, 4, "W")
        with pytest.raises(ValueError):
            oracle.enumerate_exact(path, 1, "Z")
        with pytest.raises(ValueError):
            oracle.enumerate_exact([(fixed_offspring(2), gaussian())], 1, "W")


class TestSums:
    def test_irwin_hall(self):
        assert oracle.irwin_hall_cdf(1, 0.3) == pytest.approx(0.3, abs=1e-16)
        assert oracle.irwin_hall_cdf(2, 1.0) == 0.5
        assert oracle.irwin_hall_cdf(3, 1.0) == pytest.approx(1 / 6, abs=1e-16)
        assert oracle.irwin_hall_cdf(4, -1.0) == 0.0
        assert oracle.irwin_hall_cdf(4, 5.0) == 1.0

    def test_irwin_hall_matches_exact_rational(self):
        n, x = 24, 7.25
        total = sum((-1) ** k * math.comb(n, k) * (Fraction(x) - k) ** n for k in range(8))
        assert oracle.irwin_hall_cdf(n, x) == pytest.approx(float(total / math.factorial(n)), rel=1e-15)

    def test_irwin_hall_density_integrates(self):
        # compare against scipy's independent convolution-free reference at n = 3
        ref, _ = integrate.quad(lambda t: t * t / 2, 0, 0.8)
        assert oracle.irwin_hall_cdf(3, 0.8) == pytest.approx(ref, rel=1e-12)

    def test_irwin_hall_standardised_centre(self):
        for n in (6, 12, 24):
            assert oracle.irwin_hall_standardized_cdf(n, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_gamma_sum(self):
        assert oracle.gamma_sum_cdf(1, 0.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
        assert oracle.gamma_sum_cdf(2, 0.0) == pytest.approx(1 - 3 * math.exp(-2), abs=1e-15)
        assert oracle.gamma_sum_cdf(5, -5.0) == 0.0
        assert oracle.gamma_sum_cdf(8, 1.3) == pytest.approx(stats.gamma(8).cdf(9.3), rel=1e-12)


class TestMoments:
    def test_gaussian(self):
        assert oracle.numeric_central_moments(gaussian(0, 1)) == pytest.approx((1, 0, 3, 0, 15), abs=1e-10)

    def test_uniform(self):
        got = oracle.numeric_central_moments(uniform(-0.5, 0.5))
        assert got == pytest.approx((1 / 12, 0, 1 / 80, 0, 1 / 448), abs=1e-14)

    def test_two_point(self):
        assert oracle.numeric_central_moments(two_point(-1, 1, 0.5)) == pytest.approx((1, 0, 1, 0, 1))
