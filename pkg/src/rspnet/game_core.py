"""Parameters, coordinate systems and the replicator vector fields.

Three charts are used throughout the package:

* simplex chart: the 6-vector ``(x1, x2, x3, y1, y2, y3)``
* reduced chart: the 4-vector ``(x1, x2, y1, y2)`` with ``x3 = 1 - x1 - x2``
  and ``y3 = 1 - y1 - y2``
* log chart: ``(u1, u2, v1, v2)`` with ``u_i = ln(x_{i+1}/x1)`` and
  ``v_i = ln(y_{i+1}/y1)``; it covers the interior only.

Every field function accepts arrays with arbitrary leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TOL_SIMPLEX = 1e-12
LOG_FLOOR = 1e-300
NASH_V = 2.0 * np.log(1.0 / 3.0)


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


@dataclass(frozen=True)
class Params:
    """Tie rewards of the two players, each strictly inside (-1, 1)."""

    eps_x: float
    eps_y: float

    def __post_init__(self):
        for name in ("eps_x", "eps_y"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or not -1.0 < v < 1.0:
                raise DomainError(f"{name}={v!r} must lie strictly inside (-1, 1)")
            object.__setattr__(self, name, v)

    @property
    def zero_sum(self) -> bool:
        return self.eps_x + self.eps_y == 0.0

    @property
    def symmetric(self) -> bool:
        return self.eps_x == self.eps_y

    def swapped(self) -> "Params":
        return Params(self.eps_y, self.eps_x)

    def negated(self) -> "Params":
        return Params(-self.eps_x, -self.eps_y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.eps_x, self.eps_y)


def as_params(p) -> Params:
    if isinstance(p, Params):
        return p
    ex, ey = p
    return Params(ex, ey)


@dataclass(frozen=True)
class SimplexState:
    """Mixed strategies of both players."""

    x: tuple[float, float, float]
    y: tuple[float, float, float]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if len(x) != 3 or len(y) != 3:
            raise DomainError("x and y must have three components each")
        for block in (x, y):
            if min(block) < 0.0 or abs(sum(block) - 1.0) > TOL_SIMPLEX:
                raise DomainError(f"{block} is not a probability vector")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_vector(cls, v) -> "SimplexState":
        v = np.asarray(v, dtype=float)
        return cls(tuple(v[:3]), tuple(v[3:]))

    @classmethod
    def nash(cls) -> "SimplexState":
        t = (1 / 3, 1 / 3, 1 / 3)
        return cls(t, t)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.x + self.y)

    @property
    def interior(self) -> bool:
        return min(self.x + self.y) > 0.0


@dataclass(frozen=True)
class ReducedState:
    x1: float
    x2: float
    y1: float
    y2: float

    def __post_init__(self):
        x1, x2, y1, y2 = (float(v) for v in (self.x1, self.x2, self.y1, self.y2))
        tol = TOL_SIMPLEX
        if min(x1, x2, y1, y2) < -tol or x1 + x2 > 1 + tol or y1 + y2 > 1 + tol:
            raise DomainError(f"({x1}, {x2}, {y1}, {y2}) is outside the reduced simplex")

    @classmethod
    def from_vector(cls, v) -> "ReducedState":
        return cls(*np.asarray(v, dtype=float))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.y1, self.y2])


@dataclass(frozen=True)
class LogState:
    u1: float
    u2: float
    v1: float
    v2: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector)):
            raise DomainError("log-chart coordinates must be finite")

    @classmethod
    def from_vector(cls, v) -> "LogState":
        return cls(*np.asarray(v, dtype=float))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.v1, self.v2], dtype=float)


def _vec(s) -> np.ndarray:
    v = getattr(s, "vector", s)
    return np.asarray(v, dtype=float)


def tie_matrix(eps: float) -> np.ndarray:
    """Normalized Rock-Scissors-Paper payoff matrix with tie reward ``eps``."""
    d, w, l = 2 * eps / 3, 1 - eps / 3, -1 - eps / 3
    return np.array([[d, w, l], [l, d, w], [w, l, d]])


@lru_cache(maxsize=256)
def _matrices(eps_x: float, eps_y: float) -> tuple[np.ndarray, np.ndarray]:
    A, B = tie_matrix(eps_x), tie_matrix(eps_y)
    assert np.all(np.abs(A.sum(axis=1)) <= 1e-15)
    assert np.all(np.abs(B.sum(axis=1)) <= 1e-15)
    A.flags.writeable = False
    B.flags.writeable = False
    return A, B


def payoff_matrices(p) -> tuple[np.ndarray, np.ndarray]:
    p = as_params(p)
    A, B = _matrices(p.eps_x, p.eps_y)
    return A.copy(), B.copy()


def field_simplex(p, s) -> np.ndarray:
    """Replicator field in the simplex chart."""
    p = as_params(p)
    A, B = _matrices(p.eps_x, p.eps_y)
    s = _vec(s)
    x, y = s[..., :3], s[..., 3:]
    Ay = y @ A.T
    Bx = x @ B.T
    dx = x * (Ay - np.sum(x * Ay, axis=-1, keepdims=True))
    dy = y * (Bx - np.sum(y * Bx, axis=-1, keepdims=True))
    return np.concatenate([dx, dy], axis=-1)


def embed(r) -> np.ndarray:
    """Reduced chart -> simplex chart."""
    r = _vec(r)
    x1, x2, y1, y2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    return np.stack([x1, x2, 1 - x1 - x2, y1, y2, 1 - y1 - y2], axis=-1)


def reduce(s) -> np.ndarray:
    """Simplex chart -> reduced chart."""
    s = _vec(s)
    return s[..., [0, 1, 3, 4]]


def field_reduced(p, r) -> np.ndarray:
    return reduce(field_simplex(p, embed(r)))


def jacobian_simplex(p, s) -> np.ndarray:
    """Analytic 6x6 Jacobian of the simplex-chart field (single state)."""
    A, B = payoff_matrices(p)
    s = _vec(s)
    x, y = s[:3], s[3:]
    Ay, Bx = A @ y, B @ x
    xAy, yBx = x @ Ay, y @ Bx
    J = np.zeros((6, 6))
    J[:3, :3] = np.diag(Ay - xAy) - np.outer(x, Ay)
    J[:3, 3:] = x[:, None] * (A - (x @ A)[None, :])
    J[3:, 3:] = np.diag(Bx - yBx) - np.outer(y, Bx)
    J[3:, :3] = y[:, None] * (B - (y @ B)[None, :])
    return J


_EMBED_LINEAR = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [-1, -1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [0, 0, -1, -1],
    ],
    dtype=float,
)


def jacobian_reduced(p, r) -> np.ndarray:
    """Analytic 4x4 Jacobian of the reduced field."""
    J = jacobian_simplex(p, embed(r))
    return J[[0, 1, 3, 4], :] @ _EMBED_LINEAR


def _log_block(eps, w1, w2):
    # rates of the opponent-ratio coordinates, written with softmax weights so
    # that huge |w| does not overflow
    m = np.maximum(0.0, np.maximum(w1, w2))
    a0, a1, a2 = np.exp(-m), np.exp(w1 - m), np.exp(w2 - m)
    d = a0 + a1 + a2
    r1 = (-(1 + eps) * a0 - (1 - eps) * a1 + 2 * a2) / d
    r2 = ((1 - eps) * a0 - 2 * a1 + (1 + eps) * a2) / d
    return r1, r2


def field_log(p, l) -> np.ndarray:
    """Replicator field in the log chart.

    The u-rates depend on v only and the v-rates on u only.
    """
    p = as_params(p)
    l = _vec(l)
    du1, du2 = _log_block(p.eps_x, l[..., 2], l[..., 3])
    dv1, dv2 = _log_block(p.eps_y, l[..., 0], l[..., 1])
    return np.stack([du1, du2, dv1, dv2], axis=-1)


def _log_block_jac(eps, w1, w2):
    m = np.maximum(0.0, np.maximum(w1, w2))
    a = np.array([np.exp(-m), np.exp(w1 - m), np.exp(w2 - m)])
    q = a / a.sum()
    c1 = np.array([-(1 + eps), -(1 - eps), 2.0])
    c2 = np.array([1 - eps, -2.0, 1 + eps])
    # d/dw_k of sum_j c_j q_j = q_k (c_k - sum_j c_j q_j)
    g1 = q[1:] * (c1[1:] - c1 @ q)
    g2 = q[1:] * (c2[1:] - c2 @ q)
    return np.array([g1, g2])


def jacobian_log(p, l) -> np.ndarray:
    """Analytic Jacobian of :func:`field_log` (single state)."""
    p = as_params(p)
    l = _vec(l)
    J = np.zeros((4, 4))
    J[:2, 2:] = _log_block_jac(p.eps_x, l[2], l[3])
    J[2:, :2] = _log_block_jac(p.eps_y, l[0], l[1])
    return J


def to_log(s) -> np.ndarray:
    s = _vec(s)
    if np.any(s < LOG_FLOOR):
        raise DomainError("the log chart covers only strictly interior states")
    x, y = s[..., :3], s[..., 3:]
    return np.stack(
        [
            np.log(x[..., 1] / x[..., 0]),
            np.log(x[..., 2] / x[..., 0]),
            np.log(y[..., 1] / y[..., 0]),
            np.log(y[..., 2] / y[..., 0]),
        ],
        axis=-1,
    )


def _softmax3(w1, w2):
    m = np.maximum(0.0, np.maximum(w1, w2))
    a = np.stack([np.exp(-m), np.exp(w1 - m), np.exp(w2 - m)], axis=-1)
    return a / a.sum(axis=-1, keepdims=True)


def from_log(l) -> np.ndarray:
    l = _vec(l)
    if not np.all(np.isfinite(l)):
        raise DomainError("log-chart coordinates must be finite")
    x = _softmax3(l[..., 0], l[..., 1])
    y = _softmax3(l[..., 2], l[..., 3])
    s = np.concatenate([x, y], axis=-1)
    if np.any(s < LOG_FLOOR):
        raise DomainError("log state is too close to the boundary to represent")
    return s


def log_chart_jacobian(s) -> np.ndarray:
    """Derivative of ``to_log`` with respect to the reduced coordinates."""
    s = _vec(s)
    x1, x2, x3, y1, y2, y3 = s
    J = np.zeros((4, 4))
    J[0, :2] = [-1 / x1, 1 / x2]
    J[1, :2] = [-1 / x1 - 1 / x3, -1 / x3]
    J[2, 2:] = [-1 / y1, 1 / y2]
    J[3, 2:] = [-1 / y1 - 1 / y3, -1 / y3]
    return J


_SIGMA_PERM = np.array([1, 2, 0, 4, 5, 3])
_SIGMA_INV_PERM = np.argsort(_SIGMA_PERM)


def sigma(s) -> np.ndarray:
    """Cyclic relabelling (x1,x2,x3,y1,y2,y3) -> (x2,x3,x1,y2,y3,y1)."""
    return _vec(s)[..., _SIGMA_PERM]


def sigma_inv(s) -> np.ndarray:
    return _vec(s)[..., _SIGMA_INV_PERM]


# sigma acting on the reduced chart is affine: r -> L r + b
SIGMA_REDUCED_LINEAR = np.array(
    [[0, 1, 0, 0], [-1, -1, 0, 0], [0, 0, 0, 1], [0, 0, -1, -1]], dtype=int
)
SIGMA_REDUCED_OFFSET = np.array([0, 1, 0, 1], dtype=int)


def sigma_reduced(r) -> np.ndarray:
    return reduce(sigma(embed(r)))


def hamiltonian_v(s) -> float:
    """``V = (1/3) sum log x_i + (1/3) sum log y_i``; at most ``2 log(1/3)``."""
    s = _vec(s)
    if np.any(s <= 0.0):
        raise DomainError("V is defined on interior states only")
    v = np.sum(np.log(s), axis=-1) / 3.0
    assert np.all(v <= NASH_V + 1e-12)
    return v
