"""Equilibria: the nine corners, the six boundary centres and the Nash point.

Corner eigen-charts ("Mac" frames) put a corner at the origin with the
eigenvectors as coordinate axes; ``z = Mac^{-1} (r - corner)`` in the reduced
chart. Eigenvalues are listed in chart order, i.e. the i-th eigenvalue belongs
to the i-th chart axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.spatial import cKDTree

from . import game_core as gc
from .integrator import IntegratorConfig, integrate
from .symbolic import EX, EY, evaluate, evaluate_complex

VERTICES = ("RR", "RS", "RP", "SR", "SS", "SP", "PR", "PS", "PP")
_PURE = {"R": (1, 0), "S": (0, 1), "P": (0, 0)}
_SIGMA_LETTER = {"R": "P", "S": "R", "P": "S"}
_SIGMA_INV_LETTER = {v: k for k, v in _SIGMA_LETTER.items()}

QUOTIENT_CLASSES = {
    "Tie": ("PP", "SS", "RR"),
    "WinLoss": ("SP", "RS", "PR"),
    "LossWin": ("PS", "SR", "RP"),
}


def _check_vertex(v: str) -> str:
    if v not in VERTICES:
        raise gc.DomainError(f"unknown vertex {v!r}")
    return v


def vertex_location(v: str) -> np.ndarray:
    """Reduced-chart coordinates of a corner."""
    _check_vertex(v)
    return np.array(_PURE[v[0]] + _PURE[v[1]], dtype=float)


def sigma_vertex(v: str, power: int = 1) -> str:
    _check_vertex(v)
    table = _SIGMA_LETTER if power >= 0 else _SIGMA_INV_LETTER
    for _ in range(abs(power) % 3):
        v = table[v[0]] + table[v[1]]
    return v


def quotient_class(v: str) -> str:
    _check_vertex(v)
    return next(k for k, members in QUOTIENT_CLASSES.items() if v in members)


# --- corner eigen-charts ----------------------------------------------------

_E = np.eye(4, dtype=int)
_MAC_COLUMNS = {
    "RR": (_E[0], _E[1] - _E[0], _E[2], _E[3] - _E[2]),
    "RS": (_E[0], _E[1] - _E[0], _E[2] - _E[3], _E[3]),
    "RP": (_E[0], _E[1] - _E[0], _E[2], _E[3]),
    "SR": (_E[0] - _E[1], _E[1], _E[2], _E[3] - _E[2]),
    "SS": (_E[0] - _E[1], _E[1], _E[2] - _E[3], _E[3]),
    "SP": (_E[0] - _E[1], _E[1], _E[2], _E[3]),
    "PR": (_E[0], _E[1], _E[2], _E[3] - _E[2]),
    "PS": (_E[0], _E[1], _E[2] - _E[3], _E[3]),
    "PP": (_E[0], _E[1], _E[2], _E[3]),
}


@lru_cache(maxsize=None)
def _mac(v: str) -> tuple[np.ndarray, np.ndarray]:
    M = np.column_stack(_MAC_COLUMNS[v]).astype(int)
    Minv = np.array(sp.Matrix(M).inv(), dtype=int)
    assert (M @ Minv == np.eye(4, dtype=int)).all()
    return M, Minv


def mac_matrix(v: str) -> tuple[np.ndarray, np.ndarray]:
    """Integer eigenframe of corner ``v`` and its exact integer inverse."""
    M, Minv = _mac(_check_vertex(v))
    return M.copy(), Minv.copy()


def to_vertex_coords(v: str, r) -> np.ndarray:
    M, Minv = _mac(_check_vertex(v))
    return (gc._vec(r) - vertex_location(v)) @ Minv.T.astype(float)


def from_vertex_coords(v: str, z) -> np.ndarray:
    M, _ = _mac(_check_vertex(v))
    return gc._vec(z) @ M.T.astype(float) + vertex_location(v)


@lru_cache(maxsize=None)
def chart_sigma(v: str) -> np.ndarray:
    """Signed permutation S with ``z_{sigma(v)}(sigma r) = S z_v(r)``."""
    w = sigma_vertex(v)
    L = gc.SIGMA_REDUCED_LINEAR
    S = _mac(w)[1] @ L @ _mac(v)[0]
    assert (np.abs(S).sum(axis=0) == 1).all() and (np.abs(S).sum(axis=1) == 1).all()
    return S


def _signed_perm(S: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """``S e_i = sign[i] * e_{target[i]}``."""
    target = tuple(int(np.flatnonzero(S[:, i])[0]) for i in range(4))
    sign = tuple(int(S[target[i], i]) for i in range(4))
    return target, sign


_LISTED_EIGENVALUES = {
    "PP": (-1 - EX, 1 - EX, -1 - EY, 1 - EY),
    "SP": (sp.Integer(-2), -1 + EX, sp.Integer(2), 1 + EY),
    "PS": (sp.Integer(2), 1 + EX, sp.Integer(-2), -1 + EY),
}


@lru_cache(maxsize=None)
def corner_eigenvalues_symbolic(v: str) -> tuple[sp.Expr, ...]:
    """Chart-order eigenvalues, transported from the listed corners by sigma."""
    _check_vertex(v)
    if v in _LISTED_EIGENVALUES:
        return _LISTED_EIGENVALUES[v]
    u = sigma_vertex(v, -1)
    src = corner_eigenvalues_symbolic(u)
    target, _ = _signed_perm(chart_sigma(u))
    out = [None] * 4
    for i in range(4):
        out[target[i]] = src[i]
    return tuple(out)


def corner_eigenvalues(p, v: str) -> np.ndarray:
    p = gc.as_params(p)
    return np.array([evaluate(e, p.as_tuple()) for e in corner_eigenvalues_symbolic(v)])


# --- equilibrium records ----------------------------------------------------


def _normalize(vec: np.ndarray) -> np.ndarray:
    """Scale so that the largest-magnitude component equals +1."""
    vec = np.asarray(vec, dtype=complex)
    k = int(np.argmax(np.abs(vec).round(12)))
    out = vec / vec[k]
    out[k] = 1.0
    return out


def _null_vector(J: np.ndarray, lam: complex) -> np.ndarray:
    _, _, vh = np.linalg.svd(J - lam * np.eye(J.shape[0]))
    return vh[-1].conj()


@dataclass(frozen=True)
class EquilibriumInfo:
    label: str
    kind: str
    location: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def sorted(self) -> "EquilibriumInfo":
        """Copy with eigenpairs ordered by (real part, imaginary part)."""
        ev = self.eigenvalues
        idx = np.lexsort((ev.imag.round(12), ev.real.round(12)))
        return replace(self, eigenvalues=ev[idx], eigenvectors=self.eigenvectors[:, idx])

    def residual(self, p) -> float:
        J = gc.jacobian_reduced(p, self.location)
        R = J @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.abs(R).max())

    @property
    def signature(self) -> tuple[int, int, int]:
        """(#negative real part, #zero real part, #positive real part)."""
        re = self.eigenvalues.real
        tol = 1e-12
        return (int((re < -tol).sum()), int((abs(re) <= tol).sum()), int((re > tol).sum()))


def corner_info(p, v: str) -> EquilibriumInfo:
    M, _ = _mac(_check_vertex(v))
    vecs = np.column_stack([_normalize(M[:, i]) for i in range(4)])
    return EquilibriumInfo(v, "CornerSaddle", vertex_location(v), corner_eigenvalues(p, v).astype(complex), vecs)


def nash_eigenvalues(p) -> np.ndarray:
    """(l1, l2, l3, l4) with Re l1, Re l3 <= 0 <= Re l2, Re l4 and l3 = conj(l1)."""
    p = gc.as_params(p)
    ex, ey = p.eps_x, p.eps_y
    root = np.sqrt(3.0) * np.sqrt(complex(-((ex + ey) ** 2)))
    z1 = complex(-3 + ex * ey) - root
    z2 = complex(-3 + ex * ey) + root
    r1, r2 = np.sqrt(z1) / 3, np.sqrt(z2) / 3
    return np.array([-r1, r1, -r2, r2])


NASH_REDUCED = np.full(4, 1.0 / 3.0)


def nash_info(p) -> EquilibriumInfo:
    lam = nash_eigenvalues(p)
    J = gc.jacobian_reduced(p, NASH_REDUCED)
    if abs(gc.as_params(p).eps_x + gc.as_params(p).eps_y) > 1e-9:
        L1, L2 = _null_vector(J, lam[0]), _null_vector(J, lam[1])
        vecs = [L1, L2, L1.conj(), L2.conj()]
    else:
        # degenerate (double) pairs: take an eigenbasis and match it up
        w, V = np.linalg.eig(J)
        vecs, used = [], set()
        for l in lam:
            k = min((i for i in range(4) if i not in used), key=lambda i: abs(w[i] - l))
            used.add(k)
            vecs.append(V[:, k])
    vecs = np.column_stack([_normalize(v) for v in vecs])
    return EquilibriumInfo("Nash", "Nash", NASH_REDUCED.copy(), lam, vecs)


def _gram_schmidt(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = a / np.linalg.norm(a)
    b = b - (a @ b) * a
    return a, b / np.linalg.norm(b)


def nash_tangent_frames(p) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Real frames ``w1 = L1+L3, w2 = i(L1-L3), w3 = L2+L4, w4 = i(L2-L4)``.

    ``(w1, w2)`` spans the stable plane and ``(w3, w4)`` the unstable plane;
    each pair is orthonormalized.
    """
    p = gc.as_params(p)
    if abs(p.eps_x + p.eps_y) <= 1e-12:
        raise gc.DomainError("center case: no stable/unstable splitting")
    info = nash_info(p)
    L1, L2, L3, L4 = info.eigenvectors.T
    w = [L1 + L3, 1j * (L1 - L3), L2 + L4, 1j * (L2 - L4)]
    for v in w:
        assert np.abs(v.imag).max() < 1e-10
    w = [v.real for v in w]
    w1, w2 = _gram_schmidt(w[0], w[1])
    w3, w4 = _gram_schmidt(w[2], w[3])
    return w1, w2, w3, w4


def invariance_residual(J: np.ndarray, frame: tuple[np.ndarray, ...]) -> float:
    """Norm of the part of ``J F`` outside span(F), for orthonormal F."""
    F = np.column_stack(frame)
    JF = J @ F
    return float(np.linalg.norm(JF - F @ (F.T @ JF)))


# --- boundary centres -------------------------------------------------------

Z_LABELS = ("a", "b", "c", "d", "e", "f")

_Z_LOCATION = {
    "a": (0, 2 / (3 - EY), (1 + EX) / (3 + EX), 2 / (3 + EX)),
    "b": (0, (1 + EY) / (3 + EY), (1 - EX) / (3 - EX), 0),
    "c": ((1 - EY) / (3 - EY), 0, 0, (1 + EX) / (3 + EX)),
    "d": (2 / (3 + EY), 0, 2 / (3 - EX), (1 - EX) / (3 - EX)),
    "e": ((1 + EY) / (3 + EY), 2 / (3 + EY), 0, 2 / (3 - EX)),
    "f": (2 / (3 - EY), (1 - EY) / (3 - EY), 2 / (3 + EX), 0),
}

# planes are written (i, j) for {x_i = 0, y_j = 0}, 1-based
Z_PLANE = {"a": (1, 3), "b": (1, 2), "c": (2, 1), "d": (2, 3), "e": (3, 1), "f": (3, 2)}
# faces containing the one-dimensional manifolds: ("x", i) means {x_i = 0}
Z_STABLE_FACE = {"a": ("x", 1), "b": ("y", 2), "c": ("x", 2), "d": ("y", 3), "e": ("y", 1), "f": ("x", 3)}
Z_UNSTABLE_FACE = {"a": ("y", 3), "b": ("x", 1), "c": ("y", 1), "d": ("x", 2), "e": ("x", 3), "f": ("y", 2)}
# where the manifolds accumulate: alpha-limit of W^s and omega-limit of W^u
ALPHA_STABLE_PLANE = {"a": (1, 2), "b": (3, 2), "c": (2, 3), "d": (1, 3), "e": (2, 1), "f": (3, 1)}
OMEGA_UNSTABLE_PLANE = {"a": (2, 3), "b": (1, 3), "c": (3, 1), "d": (2, 1), "e": (3, 2), "f": (1, 2)}

_ZA_EIGEN = (
    (3 + EX**2) / (3 + EX),
    -2 * sp.I * sp.sqrt((1 + EX) / (3 + EX)) * sp.sqrt((1 - EY) / (3 - EY)),
    2 * sp.I * sp.sqrt((1 + EX) / (3 + EX)) * sp.sqrt((1 - EY) / (3 - EY)),
    -(3 + EY**2) / (3 - EY),
)
# b, d, e carry the spectrum of a with (eps_x, eps_y) -> (-eps_x, -eps_y), negated
_ZB_EIGEN = tuple(-e.xreplace({EX: -EX, EY: -EY}) for e in _ZA_EIGEN)
Z_EIGENVALUES = {z: (_ZA_EIGEN if z in "acf" else _ZB_EIGEN) for z in Z_LABELS}

# stable-eigenvector components (0, v2, v3, 1) of Z^a, in closed form
ZA_STABLE_VECTOR = (
    sp.Integer(0),
    (-1 + EX) * (3 + EX) ** 2 * (-1 + EY) * (3 + EY**2)
    / (
        (3 - EY)
        * (
            -3 * (-5 + EX) * (3 + 2 * EX)
            + 8 * (3 - EX) * (1 + EX) * EY
            + 2 * (-12 + (-5 + EX) * EX) * EY**2
            + (3 + EX) * EY**4
        )
    ),
    -(1 + EX) * (3 * (3 + EY**2) ** 2 + EX * (33 + EY * (-32 + 14 * EY + EY**3)))
    / (
        6 * (-5 + EX) * (3 + 2 * EX)
        - 16 * (-3 + EX) * (1 + EX) * EY
        + 4 * (-12 + (-5 + EX) * EX) * EY**2
        - 2 * (3 + EX) * EY**4
    ),
    sp.Integer(1),
)


def z_location(p, z: str) -> np.ndarray:
    p = gc.as_params(p).as_tuple()
    loc = np.array([evaluate(e, p) for e in _Z_LOCATION[z]])
    # make the vanishing third coordinate exact
    i, j = Z_PLANE[z]
    if i == 3:
        loc[1] = 1.0 - loc[0]
    if j == 3:
        loc[3] = 1.0 - loc[2]
    return loc


def _zero_coordinate(face: tuple[str, int]) -> int:
    """Simplex-chart index of the coordinate that vanishes on a face."""
    block, i = face
    return (0 if block == "x" else 3) + i - 1


def z_equilibria(p) -> dict[str, EquilibriumInfo]:
    p = gc.as_params(p)
    out = {}
    for z in Z_LABELS:
        loc = z_location(p, z)
        lam = np.array([evaluate_complex(e, p.as_tuple()) for e in Z_EIGENVALUES[z]])
        J = gc.jacobian_reduced(p, loc)
        vecs = [_null_vector(J, l) for l in lam]
        vecs[1] = vecs[2].conj()
        out[z] = EquilibriumInfo(
            f"Z{z}", "CenterZ", loc, lam, np.column_stack([_normalize(v) for v in vecs])
        )
    return out


def v_a_value(p, x2: float, y1: float) -> tuple[float, float]:
    """Conserved quantity of Z^a inside {x1 = 0, y3 = 0} and its time derivative."""
    p = gc.as_params(p)
    if not (0.0 < x2 < 1.0 and 0.0 < y1 < 1.0):
        raise gc.DomainError("x2 and y1 must lie in (0, 1)")
    ex, ey = p.eps_x, p.eps_y
    val = (1 - ey) * np.log1p(-x2) + 2 * np.log(x2) + (1 + ex) * np.log(y1) + 2 * np.log1p(-y1)
    f = gc.field_simplex(p, np.array([0.0, x2, 1 - x2, y1, 1 - y1, 0.0]))
    grad = (-(1 - ey) / (1 - x2) + 2 / x2, (1 + ex) / y1 - 2 / (1 - y1))
    return float(val), float(grad[0] * f[1] + grad[1] * f[3])


def v_a_gradient(p, x2: float, y1: float) -> np.ndarray:
    p = gc.as_params(p)
    return np.array([-(1 - p.eps_y) / (1 - x2) + 2 / x2, (1 + p.eps_x) / y1 - 2 / (1 - y1)])


# --- manifolds of the boundary centres ---------------------------------------

SEED_OFFSET = 1e-6


def manifold_seed(p, z: str, stable: bool, offset: float = SEED_OFFSET) -> np.ndarray:
    """Simplex-chart point ``offset`` away from Z along its real eigenvector.

    The sign is chosen so the point stays in the simplex; the coordinate that
    vanishes on the manifold's face is set to exactly zero.
    """
    info = z_equilibria(p)[z]
    re = info.eigenvalues.real
    k = int(np.argmin(re)) if stable else int(np.argmax(re))
    v = info.eigenvectors[:, k].real
    v = v / np.linalg.norm(v)
    face = Z_STABLE_FACE[z] if stable else Z_UNSTABLE_FACE[z]
    i, j = Z_PLANE[z]
    on_plane = [i - 1, 3 + j - 1]
    for sign in (1.0, -1.0):
        s = gc.embed(info.location + sign * offset * v)
        s[_zero_coordinate(face)] = 0.0
        off_plane = [k for k in on_plane if k != _zero_coordinate(face)]
        rest = [k for k in range(6) if k not in on_plane]
        if np.all(s[off_plane] > 0) and np.all(s[rest] > 0):
            s[:3] /= s[:3].sum()
            s[3:] /= s[3:].sum()
            return s
    raise gc.DomainError(f"no admissible seed direction for Z{z}")


def trace_manifold(p, z: str, stable: bool, t_max: float, n_points: int, cfg: IntegratorConfig | None = None):
    """Sampled branch of W^s (traced backward) or W^u (traced forward)."""
    cfg = cfg or IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14, max_step=1.0)
    s0 = manifold_seed(p, z, stable)
    sgn = -1.0 if stable else 1.0
    t_eval = sgn * np.linspace(0.0, t_max, n_points)
    return integrate(p, s0, sgn * t_max, cfg, chart="simplex", t_eval=t_eval)


def plane_distance(states: np.ndarray, plane: tuple[int, int]) -> np.ndarray:
    i, j = plane
    return np.hypot(states[..., i - 1], states[..., 3 + j - 1])


ALL_PLANES = tuple((i, j) for i in (1, 2, 3) for j in (1, 2, 3))


@dataclass(frozen=True)
class LimitCheck:
    which: str
    plane: tuple[int, int] | None
    min_distance: float
    decreasing: bool
    distances: dict

    @property
    def plane_label(self) -> str:
        if self.plane is None:
            return "Unknown"
        return f"x{self.plane[0]}=0,y{self.plane[1]}=0"


def boundary_limit_check(p, which: str, t_max: float = 400.0, n_points: int = 40001) -> LimitCheck:
    """Plane {x_i = 0, y_j = 0} approached by a manifold branch of a centre.

    ``which`` is ``"Z<l>_forward"`` (unstable branch, omega-limit) or
    ``"Z<l>_backward"`` (stable branch, alpha-limit).
    """
    try:
        head, direction = which.split("_")
        z = head[1:]
        assert head[0] == "Z" and z in Z_LABELS and direction in ("forward", "backward")
    except (ValueError, AssertionError):
        raise gc.DomainError(f"bad selector {which!r}") from None
    tr = trace_manifold(p, z, direction == "backward", t_max, n_points)
    S = tr.states if direction == "forward" else tr.states[::-1]
    tail = S[int(0.8 * len(S)):]
    half = len(tail) // 2
    dist, best = {}, None
    for plane in ALL_PLANES:
        d = plane_distance(tail, plane)
        dist[plane] = float(d.min())
        dec = d[half:].min() <= d[:half].min()
        if dist[plane] < 1e-3 and dec and (best is None or dist[plane] < dist[best[0]]):
            best = (plane, dec)
    if best is None or not tr.complete:
        m = min(dist.values())
        return LimitCheck(which, None, m, False, dist)
    return LimitCheck(which, best[0], dist[best[0]], best[1], dist)


def _segment_distances(p0, p1, q0, q1) -> np.ndarray:
    """Row-wise distance between segments [p0, p1] and [q0, q1]."""
    u, v, w = p1 - p0, q1 - q0, p0 - q0
    a = np.einsum("ij,ij->i", u, u)
    b = np.einsum("ij,ij->i", u, v)
    c = np.einsum("ij,ij->i", v, v)
    d = np.einsum("ij,ij->i", u, w)
    e = np.einsum("ij,ij->i", v, w)
    den = a * c - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(den > 1e-300, np.clip((b * e - c * d) / den, 0, 1), 0.0)
        t = np.where(c > 0, np.clip((b * s + e) / c, 0, 1), 0.0)
        s = np.where(a > 0, np.clip((b * t - d) / a, 0, 1), 0.0)
    diff = w + s[:, None] * u - t[:, None] * v
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _polyline_gap(A: np.ndarray, B: np.ndarray, k: int = 8) -> float:
    """Minimum distance between two polylines, refined from nearest vertices."""
    k = min(k, len(B))
    _, idx = cKDTree(B).query(A, k=k)
    idx = idx.reshape(len(A), k)
    ia = np.repeat(np.arange(len(A)), k)
    ib = idx.ravel()
    best = np.inf
    for da in (-1, 0):
        a0 = np.clip(ia + da, 0, len(A) - 1)
        a1 = np.clip(ia + da + 1, 0, len(A) - 1)
        for db in (-1, 0):
            b0 = np.clip(ib + db, 0, len(B) - 1)
            b1 = np.clip(ib + db + 1, 0, len(B) - 1)
            best = min(best, float(_segment_distances(A[a0], A[a1], B[b0], B[b1]).min()))
    return best


def heteroclinic_gap(p, t_max: float = 60.0, n_points: int = 10_000) -> float:
    """Smallest distance between the traced branches W^u(Z^b) and W^s(Z^a).

    Both lie in the face {x1 = 0}; distances are Euclidean in (x2, y1, y2).
    """
    if n_points < 10_000:
        raise gc.DomainError("at least 1e4 points per curve are required")
    wu = trace_manifold(p, "b", False, t_max, n_points)
    ws = trace_manifold(p, "a", True, t_max, n_points)
    A = gc.reduce(wu.states)[:, 1:]
    B = gc.reduce(ws.states)[:, 1:]
    return _polyline_gap(A, B)


# --- completeness of the equilibrium list ------------------------------------


def all_equilibria(p) -> list[EquilibriumInfo]:
    p = gc.as_params(p)
    return [nash_info(p)] + [corner_info(p, v) for v in VERTICES] + list(z_equilibria(p).values())


def newton_equilibria(p, n_grid: int = 20, tol: float = 1e-12, iters: int = 60) -> np.ndarray:
    """Equilibria of the reduced field reached by Newton from a grid of starts.

    Returns the distinct limits that lie in the closed reduced simplex.
    """
    p = gc.as_params(p)
    g = (np.arange(n_grid) + 0.5) / n_grid
    X = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    X = X[(X[:, 0] + X[:, 1] <= 1) & (X[:, 2] + X[:, 3] <= 1)]
    h = 1e-7
    for _ in range(iters):
        F = gc.field_reduced(p, X)
        J = np.empty(X.shape + (4,))
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            J[:, :, k] = (gc.field_reduced(p, X + e) - gc.field_reduced(p, X - e)) / (2 * h)
        ok = np.abs(np.linalg.det(J)) > 1e-14
        step = np.zeros_like(X)
        step[ok] = np.linalg.solve(J[ok], F[ok][..., None])[..., 0]
        X = X - step
        X = X[np.all(np.isfinite(X), axis=1) & (np.abs(X).max(axis=1) < 10)]
    F = np.abs(gc.field_reduced(p, X)).max(axis=1)
    X = X[F < tol]
    inside = (X.min(axis=1) > -1e-9) & (X[:, 0] + X[:, 1] < 1 + 1e-9) & (X[:, 2] + X[:, 3] < 1 + 1e-9)
    X = X[inside]
    distinct: list[np.ndarray] = []
    for x in X:
        if not any(np.abs(x - d).max() < 1e-8 for d in distinct):
            distinct.append(x)
    return np.array(distinct)
