import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brwre.special import (
    HERMITE_TABLE,
    Phi,
    derivative_identity_check,
    fd_weights,
    hermite,
    hermite_coefficients,
    hermite_recurrence,
    phi,
)

GRID = np.round(np.arange(-60, 61) * 0.1, 10)


def test_listed_values():
    assert hermite(2, 0.0) == -1.0
    assert hermite(4, 1.0) == -2.0
    assert hermite(8, 1.0) == -132.0


def test_table_closed_form_recurrence_agree():
    for m in range(9):
        table = hermite(m, GRID)
        closed = np.polyval(hermite_coefficients(m), GRID)
        assert hermite_coefficients(m) == HERMITE_TABLE[m]
        rec = hermite_recurrence(m, GRID)
        scale = np.maximum(1.0, np.abs(table))
        assert np.max(np.abs(table - closed) / scale) < 1e-10
        assert np.max(np.abs(table - rec) / scale) < 1e-10


def test_coefficients_are_integers_with_leading_one():
    for m in range(15):
        c = hermite_coefficients(m)
        assert c[0] == 1
        assert all(isinstance(v, int) for v in c)


def test_high_order_uses_recurrence():
    x = 0.37
    assert hermite(25, x) == pytest.approx(hermite_recurrence(25, x), rel=1e-12)


def test_normal_values():
    assert Phi(0.0) == 0.5
    assert phi(0.0) == pytest.approx(0.3989422804014327, abs=1e-16)
    assert Phi(1.96) == pytest.approx(0.9750021048517795, abs=1e-15)


@given(st.floats(-40, 40))
def test_phi_symmetry(x):
    assert abs(Phi(x) + Phi(-x) - 1.0) <= 1e-12


def test_phi_tail_accuracy():
    # erfc keeps relative precision deep in the lower tail
    assert Phi(-30.0) == pytest.approx(4.906713927148187e-198, rel=1e-12)


@pytest.mark.parametrize("m, x, h, bound", [
    (0, 0.3, 1e-3, 1e-8),
    (1, 1.0, 1e-3, 1e-6),
    (3, 0.5, 1e-2, 1e-4),
])
def test_derivative_identity(m, x, h, bound):
    assert derivative_identity_check(m, x, h) <= bound


def test_derivative_identity_rejects_bad_step():
    with pytest.raises(ValueError):
        derivative_identity_check(1, 0.0, 1.0)
    with pytest.raises(ValueError):
        derivative_identity_check(9, 0.0, 1e-3)


def test_fd_weights_reproduce_polynomials():
    offsets = np.arange(-3, 4, dtype=float)
    w = fd_weights(2, offsets)
    # second derivative of x^4 at 0.5 with unit spacing is exact on 7 points
    f = (0.5 + offsets) ** 4
    assert float(w @ f) == pytest.approx(12 * 0.25, rel=1e-12)
    assert math.isclose(float(w.sum()), 0.0, abs_tol=1e-12)
