"""Adaptive Simpson quadrature used by the menu-cost integrals.

The cost formulas integrate smooth one-dimensional integrands whose error
must sit well below the incentive-compatibility margin, so the default
absolute tolerance is 1e-10.
"""

from __future__ import annotations

from typing import Callable

_MAX_DEPTH = 48


def _simpson(f_a: float, f_m: float, f_b: float, h: float) -> float:
    return h / 6.0 * (f_a + 4.0 * f_m + f_b)


def _recurse(f, a, b, f_a, f_m, f_b, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    f_lm = f(lm)
    f_rm = f(rm)
    left = _simpson(f_a, f_lm, f_m, m - a)
    right = _simpson(f_m, f_rm, f_b, b - m)
    err = left + right - whole
    if depth >= _MAX_DEPTH or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    half = 0.5 * tol
    return _recurse(f, a, m, f_a, f_lm, f_m, left, half, depth + 1) + _recurse(
        f, m, b, f_m, f_rm, f_b, right, half, depth + 1
    )


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Signed: ``a > b`` returns the negated integral over ``[b, a]``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0
    f_a = f(a)
    f_b = f(b)
    m = 0.5 * (a + b)
    f_m = f(m)
    whole = _simpson(f_a, f_m, f_b, b - a)
    return sign * _recurse(f, a, b, f_a, f_m, f_b, whole, tol, 0)
