"""Chebyshev-Hermite polynomials and the standard normal density and CDF."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "HERMITE_TABLE",
    "hermite_coefficients",
    "hermite",
    "hermite_recurrence",
    "phi",
    "Phi",
    "fd_weights",
    "derivative_identity_check",
]

_MAX_EXACT_DEGREE = 20
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Coefficients (highest power first, every other power) of H_0 .. H_8.
HERMITE_TABLE = {
    0: (1,),
    1: (1, 0),
    2: (1, 0, -1),
    3: (1, 0, -3, 0),
    4: (1, 0, -6, 0, 3),
    5: (1, 0, -10, 0, 15, 0),
    6: (1, 0, -15, 0, 45, 0, -15),
    7: (1, 0, -21, 0, 105, 0, -105, 0),
    8: (1, 0, -28, 0, 210, 0, -420, 0, 105),
}


def hermite_coefficients(m: int) -> tuple[int, ...]:
    """Integer coefficients of H_m, highest power first.

    ``H_m(x) = m! sum_k (-1)^k x^(m-2k) / (k! (m-2k)! 2^k)``; every term is an
    integer, computed exactly.
    """
    if m < 0 or int(m) != m:
        raise ValueError("degree must be a nonnegative integer")
    m = int(m)
    coeffs = [0] * (m + 1)
    for k in range(m // 2 + 1):
        c = math.factorial(m) // (math.factorial(k) * math.factorial(m - 2 * k) * 2**k)
        coeffs[2 * k] = (-1) ** k * c
    return tuple(coeffs)


def hermite(m: int, x):
    """Chebyshev-Hermite (probabilists') polynomial H_m evaluated at ``x``."""
    if m < 0 or int(m) != m:
        raise ValueError("degree must be a nonnegative integer")
    m = int(m)
    if m <= 8:
        coeffs = HERMITE_TABLE[m]
    elif m <= _MAX_EXACT_DEGREE:
        coeffs = hermite_coefficients(m)
    else:
        return hermite_recurrence(m, x)
    x = np.asarray(x, dtype=float)
    out = np.polyval(np.array(coeffs, dtype=float), x)
    return float(out) if out.ndim == 0 else out


def hermite_recurrence(m: int, x):
    """H_m via H_{k+1} = x H_k - k H_{k-1}; independent of the closed form."""
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x.copy()
    if m == 0:
        h = h_prev
    for k in range(1, m):
        h_prev, h = h, x * h - k * h_prev
    return float(h) if h.ndim == 0 else h


def phi(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def Phi(x):
    """Standard normal CDF through erfc, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * _sp.erfc(-x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def fd_weights(order: int, offsets) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0 (Fornberg)."""
    z = np.asarray(offsets, dtype=float)
    n = len(z)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, z[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative_identity_check(m: int, x: float, h: float) -> float:
    """|numerical d^(m+1)/dx^(m+1) Phi(x) - (-1)^m phi(x) H_m(x)|.

    The derivative uses a central stencil of fourth-order accuracy applied
    to ``Phi`` alone.
    """
    if not 0 <= m <= 6:
        raise ValueError("m must lie in 0..6")
    if not 1e-4 <= h <= 1e-2:
        raise ValueError("h must lie in [1e-4, 1e-2]")
    d = m + 1
    half = (d + 1) // 2 + 1
    offsets = np.arange(-half, half + 1)
    w = fd_weights(d, offsets)
    values = np.array([Phi(x + k * h) for k in offsets])
    numeric = math.fsum(w * values) / h**d
    exact = (-1) ** m * phi(x) * hermite(m, x)
    return abs(numeric - exact)
