"""Exact exponents as rational functions of the tie rewards."""

from __future__ import annotations

from functools import lru_cache

import sympy as sp

EX, EY = sp.symbols("eps_x eps_y", real=True)
HALF = sp.Rational(1, 2)


def S(v) -> sp.Expr:
    """Sympify with integers kept exact."""
    return sp.nsimplify(v) if isinstance(v, float) else sp.sympify(v)


def simplify(e) -> sp.Expr:
    return sp.factor(sp.cancel(sp.together(e)))


def is_zero(e) -> bool:
    return sp.cancel(sp.together(e)) == 0


@lru_cache(maxsize=None)
def _compiled(expr: sp.Expr):
    return sp.lambdify((EX, EY), expr, modules="math")


def evaluate(expr, p) -> float:
    """Value of ``expr`` at ``p = (eps_x, eps_y)``."""
    expr = sp.sympify(expr)
    if expr.is_number:
        return float(expr)
    return float(_compiled(expr)(float(p[0]), float(p[1])))


def evaluate_matrix(m, p):
    import numpy as np

    return np.array([[evaluate(e, p) for e in row] for row in m.tolist()], dtype=float)


def swap_eps(e) -> sp.Expr:
    return sp.sympify(e).xreplace({EX: EY, EY: EX})


def negate_eps(e) -> sp.Expr:
    return sp.sympify(e).xreplace({EX: -EX, EY: -EY})


@lru_cache(maxsize=None)
def _compiled_complex(expr: sp.Expr):
    return sp.lambdify((EX, EY), expr, modules="cmath")


def evaluate_complex(expr, p) -> complex:
    expr = sp.sympify(expr)
    if expr.is_number:
        return complex(expr)
    return complex(_compiled_complex(expr)(float(p[0]), float(p[1])))
