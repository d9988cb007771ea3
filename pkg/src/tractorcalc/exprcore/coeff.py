"""Exact scalar coefficients: rational functions in the parameters n, w, w'.

Coefficients are kept as sympy expressions restricted to the fraction field
Q(n, w, wp).  Every public helper normalises with :func:`sympy.cancel`, so a
coefficient is zero iff its normal form is the zero expression; no floating
point is ever introduced.
"""

from __future__ import annotations

from fractions import Fraction

import sympy

#: The commuting formal parameters available to coefficients.
n = sympy.Symbol("n")
w = sympy.Symbol("w")
wp = sympy.Symbol("wp")

PARAMS = (n, w, wp)

_ALLOWED = set(PARAMS)

Coefficient = sympy.Expr


def ensure(value) -> Coefficient:
    """Coerce ints/Fractions/strings/sympy expressions into a normalised coefficient."""
    if isinstance(value, Fraction):
        expr = sympy.Rational(value.numerator, value.denominator)
    elif isinstance(value, str):
        expr = sympy.sympify(value, locals={"n": n, "w": w, "wp": wp}, rational=True)
    else:
        expr = sympy.sympify(value, rational=True)
    bad = expr.free_symbols - _ALLOWED
    if bad:
        raise ValueError(f"coefficient uses unknown symbols: {sorted(map(str, bad))}")
    if expr.has(sympy.Float):
        raise ValueError("floating point is not allowed in coefficients")
    return normalise(expr)


def normalise(expr: Coefficient) -> Coefficient:
    """gcd-reduced numerator/denominator normal form."""
    return sympy.cancel(sympy.together(expr))


def add(a: Coefficient, b: Coefficient) -> Coefficient:
    return normalise(a + b)


def mul(a: Coefficient, b: Coefficient) -> Coefficient:
    return normalise(a * b)


def div(a: Coefficient, b: Coefficient) -> Coefficient:
    if is_zero(b):
        raise ZeroDivisionError("division by the zero coefficient")
    return normalise(a / b)


def is_zero(expr: Coefficient) -> bool:
    num, _ = sympy.fraction(normalise(expr))
    return sympy.expand(num) == 0


def subs_params(expr: Coefficient, **values) -> Coefficient:
    """Substitute integer/rational values for any of n, w, wp."""
    mapping = {}
    for key, val in values.items():
        if key not in ("n", "w", "wp"):
            raise ValueError(f"unknown parameter {key!r}")
        mapping[{"n": n, "w": w, "wp": wp}[key]] = sympy.sympify(val, rational=True)
    return normalise(expr.subs(mapping))
