"""Independent reference computations used by the tests.

Nothing here imports the package's field or Jacobian code: the replicator
system is rebuilt from the payoff definition and differentiated by sympy.
"""

from functools import lru_cache

import numpy as np
import sympy as sp

_ex, _ey = sp.symbols("ex ey")
_x = sp.symbols("x1:4")
_y = sp.symbols("y1:4")


def _tie(e):
    d, w, l = 2 * e / 3, 1 - e / 3, -1 - e / 3
    return sp.Matrix([[d, w, l], [l, d, w], [w, l, d]])


@lru_cache(maxsize=None)
def _reduced_system():
    x = sp.Matrix(_x)
    y = sp.Matrix(_y)
    A, B = _tie(_ex), _tie(_ey)
    fx = [x[i] * ((A * y)[i] - (x.T * A * y)[0]) for i in range(3)]
    fy = [y[i] * ((B * x)[i] - (y.T * B * x)[0]) for i in range(3)]
    # reduced chart: (x1, x2, y1, y2) with x3 = 1 - x1 - x2, y3 = 1 - y1 - y2
    r = sp.symbols("r1:5")
    sub = {_x[0]: r[0], _x[1]: r[1], _x[2]: 1 - r[0] - r[1], _y[0]: r[2], _y[1]: r[3], _y[2]: 1 - r[2] - r[3]}
    f = sp.Matrix([fx[0], fx[1], fy[0], fy[1]]).subs(sub)
    J = f.jacobian(sp.Matrix(r))
    return sp.lambdify((_ex, _ey) + r, f, "numpy"), sp.lambdify((_ex, _ey) + r, J, "numpy")


def field_reduced(p, r) -> np.ndarray:
    f, _ = _reduced_system()
    return np.array(f(p[0], p[1], *r), dtype=float).ravel()


def jacobian_reduced(p, r) -> np.ndarray:
    _, J = _reduced_system()
    return np.array(J(p[0], p[1], *r), dtype=float)


VERTEX_REDUCED = {  # pure strategies R, S, P as (first, second) barycentric weights
    a + b: np.array([*{"R": (1, 0), "S": (0, 1), "P": (0, 0)}[a], *{"R": (1, 0), "S": (0, 1), "P": (0, 0)}[b]], float)
    for a in "RSP" for b in "RSP"
}


def spectrum(M) -> np.ndarray:
    w = np.linalg.eigvals(M)
    return w[np.lexsort((w.imag.round(9), w.real.round(9)))]


def match_multiset(a, b) -> float:
    """Max distance in the best greedy matching of two eigenvalue lists."""
    a, b = list(np.asarray(a, complex)), list(np.asarray(b, complex))
    worst = 0.0
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b[k]))
        b.pop(k)
    return worst


def linear_passage(lam, z, k, s, h):
    """Exact passage of the linear flow dz_i = lam_i z_i until s z_k = h."""
    lam, z = np.asarray(lam, float), np.asarray(z, float)
    T = np.log(h / (s * z[k])) / lam[k]
    out = z * np.exp(lam * T)
    out[k] = s * h
    return out, T
