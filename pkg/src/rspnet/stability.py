"""Cycle matrices in logarithmic coordinates and what they imply.

Near a cycle the return map is, to leading order, linear in ``w = -ln s``:
``w -> A w``. The spectra of ``A_C0`` and ``A_C2`` (``A_C1`` is ``A_C2`` with
the tie rewards swapped) decide which cycles attract, and the eigenvalue
comparisons partition the parameter square into coloured regions.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from . import equilibria as eq
from . import game_core as gc
from . import hetnet as hn
from . import integrator as it
from .symbolic import EX, EY, evaluate_matrix, swap_eps

CYCLES = ("C0", "C1", "C2")
TOL_REGION = 1e-9
DIVERGENCE_LEVEL = 1e10


@lru_cache(maxsize=None)
def cycle_matrix_symbolic(cycle: str) -> sp.Matrix:
    if cycle == "C0":
        return sp.Matrix([
            [-(1 + EX) / 2, 0, (3 + EX**2) / 4],
            [1, 0, (1 - EX) / 2],
            [(1 - EY) / 2, 1, -(1 + EY) / 2 + (1 - EX) * (1 - EY) / 4],
        ])
    if cycle == "C2":
        return sp.Matrix([
            [0, 2 / (1 - EY), (1 + EX) / (1 - EY)],
            [1, -2 / (1 + EX) - 2 * (1 - EX) / ((1 + EX) * (1 - EY)), -(1 - EX) / (1 - EY)],
            [0, (1 - EY) / (1 + EX) + 2 * (1 + EY) / ((1 + EX) * (1 - EY)), (1 + EY) / (1 - EY)],
        ])
    if cycle == "C1":
        return cycle_matrix_symbolic("C2").applyfunc(swap_eps)
    raise gc.DomainError(f"unknown cycle {cycle!r}")


@dataclass(frozen=True)
class CycleMatrix:
    cycle: str
    matrix: np.ndarray
    params: gc.Params


def cycle_matrix(cycle: str, p) -> CycleMatrix:
    p = gc.as_params(p)
    return CycleMatrix(cycle, evaluate_matrix(cycle_matrix_symbolic(cycle), p.as_tuple()), p)


def segment_matrix(cycle: str, p=None):
    """The same matrix read off the leading-order composition of section maps.

    C1 is taken with the player swap applied, matching the closed-form
    convention ``A_C1(a, b) = A_C2(b, a)``.
    """
    E = hn.return_map(cycle).segment_exponents()
    if cycle == "C1":
        # free axes (z1, z3, z4) of the C1 section correspond to (z3, z4, z1) of C2's
        E = E.extract([1, 2, 0], [1, 2, 0])
    if p is None:
        return E
    return evaluate_matrix(E, gc.as_params(p).as_tuple())


@dataclass(frozen=True)
class CycleEigen:
    cycle: str
    eigenvalues: np.ndarray  # (3,) complex; lambda_1 real positive
    eigenvectors: np.ndarray  # columns, third component 1

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)


def _order(w: np.ndarray) -> np.ndarray:
    real = np.abs(w.imag) <= 1e-12 * np.maximum(1.0, np.abs(w))
    pos = np.flatnonzero(real & (w.real > 0))
    if len(pos) == 0:
        raise gc.DomainError("no positive real eigenvalue")
    i1 = pos[np.argmax(w.real[pos])]
    rest = [i for i in range(3) if i != i1]
    if np.all(real[rest]):
        rest.sort(key=lambda i: -w.real[i])
    else:
        rest.sort(key=lambda i: w.imag[i])  # Im < 0 first
    return np.array([i1] + rest)


def cycle_eigen(cycle: str, p) -> CycleEigen:
    A = cycle_matrix(cycle, p).matrix
    w, V = np.linalg.eig(A)
    idx = _order(w)
    w, V = w[idx], V[:, idx]
    real = np.abs(w.imag) <= 1e-12 * np.maximum(1.0, np.abs(w))
    w = np.where(real, w.real, w)
    if np.any(np.abs(V[2]) < 1e-12):
        raise gc.DomainError(f"eigenvector with vanishing third component for {cycle} at {p}")
    V = V / V[2]
    V[:, real] = V[:, real].real
    return CycleEigen(cycle, w.astype(complex), V)


# --- regions --------------------------------------------------------------------


class RegionLabel(str, enum.Enum):
    Yellow = "Yellow"
    Green = "Green"
    White = "White"
    Red = "Red"
    LightRed = "LightRed"
    Line_EqualEps = "Line_EqualEps"
    Line_ZeroSum = "Line_ZeroSum"
    BetaCurve = "BetaCurve"
    Boundary = "Boundary"

    def __str__(self) -> str:
        return self.value


EIGEN_REGIONS = (RegionLabel.Yellow, RegionLabel.Green, RegionLabel.White, RegionLabel.Red, RegionLabel.LightRed)


def beta_curve(eps_y: float) -> float:
    """``eps_x`` on the curve where the switching is of subshift type."""
    ex = (1 + 3 * eps_y) / (1 - eps_y)
    if not -1.0 < ex < 1.0:
        raise gc.DomainError(f"beta curve leaves the parameter square at eps_y={eps_y}")
    return ex


def _eigen_region(p: gc.Params, tol: float = TOL_REGION) -> RegionLabel:
    """Region from the C2 spectrum (C1 spectrum with the mirrored colour below the diagonal)."""
    mirrored = p.eps_x < p.eps_y
    e = cycle_eigen("C1" if mirrored else "C2", p)
    l1 = e.eigenvalues[0].real
    m2, m3 = e.moduli[1], e.moduli[2]
    for gap in (l1 - m2, l1 - 1.0, l1 - m3):
        if abs(gap) <= tol:
            return RegionLabel.Boundary
    if l1 < m2:
        return RegionLabel.LightRed
    if l1 < 1.0:
        return RegionLabel.Red
    if l1 < m3:
        return RegionLabel.White
    return RegionLabel.Green if mirrored else RegionLabel.Yellow


def classify_region(p, tol: float = TOL_REGION) -> RegionLabel:
    p = gc.as_params(p)
    ex, ey = p.eps_x, p.eps_y
    if abs(ex - ey) <= tol:
        return RegionLabel.Line_EqualEps
    if abs(ex + ey) <= tol:
        return RegionLabel.Line_ZeroSum
    for a, b in ((ex, ey), (ey, ex)):
        if abs(a * (1 - b) - (1 + 3 * b)) <= tol * (1 - b):
            return RegionLabel.BetaCurve
    return _eigen_region(p, tol)


def beta_tau(tol: float = 1e-12) -> float:
    """``beta = (1 + eps_x)/2`` where the beta curve leaves the yellow region."""

    def yellow(ey: float) -> bool:
        return _eigen_region(gc.Params(beta_curve(ey), ey), 0.0) == RegionLabel.Yellow

    ys = np.linspace(-0.999, -1e-6, 400)
    flags = [yellow(y) for y in ys]
    switches = [i for i in range(len(ys) - 1) if flags[i] != flags[i + 1]]
    if len(switches) != 1:
        raise gc.DomainError(f"expected one crossing of the yellow boundary, found {len(switches)}")
    a, b = ys[switches[0]], ys[switches[0] + 1]
    fa = flags[switches[0]]
    while b - a > tol:
        m = 0.5 * (a + b)
        if yellow(m) == fa:
            a = m
        else:
            b = m
    return (1 + beta_curve(0.5 * (a + b))) / 2


# --- projective dynamics ------------------------------------------------------------


def ph_project(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    s = u.sum()
    if abs(s) <= 1e-300:
        raise gc.DomainError("PH is undefined where u1 + u2 + u3 = 0")
    return u / s


def in_h_plus(x, tol: float = 0.0) -> bool:
    return bool(np.all(np.asarray(x) > -tol))


@dataclass(frozen=True)
class ProjectiveOrbit:
    points: np.ndarray  # PH of each iterate (rows); NaN once undefined
    iterates: np.ndarray
    diverges_plus: int | None  # first index with all coordinates above DIVERGENCE_LEVEL
    diverges_minus: int | None
    first_exit: int | None  # first index with PH outside H+


def projective_orbit(cycle: str, p, u0, n: int, direction: str = "forward") -> ProjectiveOrbit:
    A = cycle_matrix(cycle, p).matrix
    if direction == "backward":
        A = np.linalg.inv(A)
    elif direction != "forward":
        raise gc.DomainError("direction must be 'forward' or 'backward'")
    u = np.asarray(u0, dtype=float)
    its, pts = [u], []
    for _ in range(n):
        its.append(A @ its[-1])
    its = np.array(its)
    plus = minus = exit_ = None
    for k, v in enumerate(its):
        try:
            pt = ph_project(v)
        except gc.DomainError:
            pt = np.full(3, np.nan)
        pts.append(pt)
        if exit_ is None and not in_h_plus(pt):
            exit_ = k
        if plus is None and np.all(v > DIVERGENCE_LEVEL):
            plus = k
        if minus is None and np.all(v < -DIVERGENCE_LEVEL):
            minus = k
    return ProjectiveOrbit(np.array(pts), its, plus, minus, exit_)


# --- manifold dimensions -------------------------------------------------------------

_DIMS_UPPER = {
    RegionLabel.Yellow: {"W^s(C2)": 4, "W^u(C0)": 4},
    RegionLabel.White: {"W^s(C2)": 3, "W^u(C0)": 4},
    RegionLabel.Red: {"W^u(C2)": 3, "W^s(C0)": 4},
    RegionLabel.LightRed: {"W^u(C2)": 4, "W^s(C0)": 4},
}


def manifold_dims(p) -> dict[str, int | None]:
    """Stable/unstable manifold dimensions; ``None`` marks an absent manifold."""
    p = gc.as_params(p)
    label = classify_region(p)
    if label == RegionLabel.BetaCurve:
        label = _eigen_region(p)
    if label not in EIGEN_REGIONS:
        raise gc.DomainError(f"{p} is on bifurcation set ({label})")
    mirrored = p.eps_x < p.eps_y
    base = RegionLabel.Yellow if label == RegionLabel.Green else label
    dims = dict(_DIMS_UPPER[base])
    if mirrored:
        dims = {k.replace("C2", "C1"): v for k, v in dims.items()}
        dims.update({"W^s(C2)": None, "W^u(C2)": None})
    else:
        dims.update({"W^s(C1)": None, "W^u(C1)": None})
    return dims


# --- basin estimate ----------------------------------------------------------------------


def cycle_segments(cycle: str) -> np.ndarray:
    """(6, 2, 4) endpoints of the cycle's edges in reduced coordinates."""
    return np.array([[eq.vertex_location(e.src), eq.vertex_location(e.dst)] for e in hn.cycle_edges(cycle)], float)


def distance_to_cycle(cycle: str, r) -> np.ndarray:
    """Min over the cycle's edges of point-to-segment distance (reduced chart)."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    best = np.full(len(r), np.inf)
    for a, b in cycle_segments(cycle):
        d = b - a
        t = np.clip((r - a) @ d / (d @ d), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(r - a - t[:, None] * d, axis=1))
    return best


def _inside(r: np.ndarray) -> np.ndarray:
    return (np.all(r > 0, axis=1) & (r[:, 0] + r[:, 1] < 1) & (r[:, 2] + r[:, 3] < 1))


def sample_ball(center, radius: float, n: int, seed: int) -> np.ndarray:
    """``n`` uniform points of the 4-ball intersected with the open simplex product.

    Point ``i`` depends only on ``(seed, i)``.
    """
    out = np.empty((n, 4))
    children = np.random.SeedSequence(seed).spawn(n)
    for i, ss in enumerate(children):
        rng = np.random.Generator(np.random.Philox(ss))
        while True:
            g = rng.standard_normal(4)
            x = center + radius * rng.random() ** 0.25 * g / np.linalg.norm(g)
            if _inside(x[None])[0]:
                out[i] = x
                break
    return out


@dataclass(frozen=True)
class BasinEstimate:
    fraction: float
    half_width: float
    n_samples: int
    n_inside: int
    center: np.ndarray = field(repr=False)


_CHUNK = 32


def _log_to_reduced(l: np.ndarray) -> np.ndarray:
    # no floor check: coordinates may underflow to 0, which is fine for distances
    x = gc._softmax3(l[..., 0], l[..., 1])
    y = gc._softmax3(l[..., 2], l[..., 3])
    return np.stack([x[..., 0], x[..., 1], y[..., 0], y[..., 1]], axis=-1)


def _follow_chunk(args) -> np.ndarray:
    p, cycle, states, delta, t_max, dt = args
    logs = gc.to_log(gc.embed(states) if states.ndim == 2 else states)
    t_eval = np.arange(dt, t_max + dt / 2, dt)
    cfg = it.IntegratorConfig(rel_tol=1e-9, abs_tol=1e-11, max_step=1.0)
    try:
        path = it.integrate_batch(p, logs, t_max, cfg, chart="log", t_eval=t_eval)
    except it.IntegrationError:
        return np.zeros(len(states), dtype=bool)
    n, m = path.shape[1], path.shape[0]
    reduced = _log_to_reduced(path)
    d = distance_to_cycle(cycle, reduced.reshape(-1, 4)).reshape(m, n)
    d0 = distance_to_cycle(cycle, states)
    stays = np.all(d < delta, axis=0)
    approaches = d[-1] < 0.5 * d0
    return stays & approaches & np.all(np.isfinite(path), axis=(0, 2))


def basin_fraction(
    p,
    cycle: str,
    eps_ball: float,
    delta_tube: float,
    n_samples: int,
    seed: int = 0,
    edge_index: int = 0,
    t_max: float = 400.0,
    workers: int = 1,
) -> BasinEstimate:
    """Monte Carlo share of a ball at an edge midpoint that stays near the cycle and approaches it."""
    if n_samples <= 0:
        raise gc.DomainError("n_samples must be positive")
    if not 0 < eps_ball < delta_tube:
        raise gc.DomainError("need 0 < eps_ball < delta_tube")
    p = gc.as_params(p)
    e = hn.cycle_edges(cycle)[edge_index]
    center = 0.5 * (eq.vertex_location(e.src) + eq.vertex_location(e.dst))
    pts = sample_ball(center, eps_ball, n_samples, seed)
    jobs = [(p, cycle, pts[i:i + _CHUNK], delta_tube, t_max, 0.5) for i in range(0, n_samples, _CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            res = list(ex.map(_follow_chunk, jobs))
    else:
        res = [_follow_chunk(j) for j in jobs]
    hits = int(np.concatenate(res).sum())
    f = hits / n_samples
    return BasinEstimate(f, 1.96 * math.sqrt(f * (1 - f) / n_samples), n_samples, hits, center)


# --- atlas export ------------------------------------------------------------------------

_PGM_SHADE = {
    RegionLabel.Yellow: 230, RegionLabel.Green: 170, RegionLabel.White: 255, RegionLabel.Red: 90,
    RegionLabel.LightRed: 130, RegionLabel.Line_EqualEps: 0, RegionLabel.Line_ZeroSum: 40,
    RegionLabel.BetaCurve: 20, RegionLabel.Boundary: 60,
}


def grid(step: float) -> np.ndarray:
    n = int(round(2 / step)) - 1
    return np.round(-1 + step * np.arange(1, n + 1), 12)


def region_atlas(step: float = 0.05) -> list[dict]:
    rows = []
    for ey in grid(step):
        for ex in grid(step):
            p = gc.Params(float(ex), float(ey))
            row = {"eps_x": float(ex), "eps_y": float(ey), "label": str(classify_region(p))}
            for c in CYCLES:
                try:
                    m = cycle_eigen(c, p).moduli
                    row.update({f"{c}_l1": m[0], f"{c}_abs_l2": m[1], f"{c}_abs_l3": m[2]})
                except gc.DomainError:
                    row.update({f"{c}_l1": math.nan, f"{c}_abs_l2": math.nan, f"{c}_abs_l3": math.nan})
            rows.append(row)
    return rows


def write_atlas_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})


def write_pgm(labels: np.ndarray, path, shades: dict | None = None) -> None:
    """Plain PGM; ``labels`` is (rows, cols) with row 0 drawn at the top."""
    shades = shades or {str(k): v for k, v in _PGM_SHADE.items()}
    h, w = labels.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in labels:
            fh.write(" ".join(str(shades[str(x)]) for x in row) + "\n")


def atlas_label_grid(rows: list[dict]) -> np.ndarray:
    ys = sorted({r["eps_y"] for r in rows}, reverse=True)
    xs = sorted({r["eps_x"] for r in rows})
    lut = {(r["eps_x"], r["eps_y"]): r["label"] for r in rows}
    return np.array([[lut[(x, y)] for x in xs] for y in ys], dtype=object)
