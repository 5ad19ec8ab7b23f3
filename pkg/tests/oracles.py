"""Independent reference implementations used only by the tests.

These deliberately avoid the package's vectorised kernels: plain loops,
exact rational arithmetic for the polynomial fits, and textbook formulas.
"""

from fractions import Fraction
from math import lgamma, gamma, sqrt

import numpy as np


def solve_exact(a, b):
    """Gauss-Jordan elimination over Fractions."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def poly_residuals_exact(values, order):
    """Residuals of the least-squares polynomial in k = 1..n, via exact normal equations."""
    ys = [Fraction(float(v)) for v in values]
    n = len(ys)
    ks = [Fraction(k) for k in range(1, n + 1)]
    p = order + 1
    ata = [[sum(k ** (i + j) for k in ks) for j in range(p)] for i in range(p)]
    aty = [sum(k**i * y for k, y in zip(ks, ys)) for i in range(p)]
    coef = solve_exact(ata, aty)
    return [y - sum(c * k**i for i, c in enumerate(coef)) for k, y in zip(ks, ys)]


def profile_loop(z):
    mean = sum(z) / len(z)
    out, acc = [], 0.0
    for v in z:
        acc += v - mean
        out.append(acc)
    return out


def dcca_loop(za, zb, n, order=2):
    """F^2_ab(n) straight from the window definitions (1-based indices)."""
    N = len(za)
    nn = N // n
    total = Fraction(0)
    for j in range(1, 2 * nn + 1):
        if j <= nn:
            idx = [(j - 1) * n + k for k in range(1, n + 1)]
        else:
            idx = [N - (j - nn) * n + k for k in range(1, n + 1)]
        ra = poly_residuals_exact([za[i - 1] for i in idx], order)
        rb = poly_residuals_exact([zb[i - 1] for i in idx], order)
        total += sum(x * y for x, y in zip(ra, rb)) / n
    return float(total / (2 * nn))


def partial_closed_form(r12, r13, r23):
    return (r12 - r13 * r23) / sqrt((1 - r13**2) * (1 - r23**2))


def arfima_weight_gamma(n, d):
    """Gamma(n - d) / (Gamma(-d) Gamma(n + 1)) with explicit sign handling."""
    if n == 0:
        return 1.0
    sign = np.sign(gamma(n - d)) * np.sign(gamma(-d))
    return float(sign * np.exp(lgamma(n - d) - lgamma(-d) - lgamma(n + 1)))


def ols_lstsq(y, x1, x2):
    design = np.column_stack([np.ones_like(x1), x1, x2])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef
