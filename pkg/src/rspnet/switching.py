"""Finite itineraries near the network: can an orbit follow them?

An itinerary ``v0 -> v1 -> ... -> vn`` is attainable at box size ``h`` when
some point of the out-section of ``v0 -> v1`` (inside the simplex product)
is carried by ``Psi``, ``Tran`` and ``Phi`` so that every out-section it meets
along the way is hit inside its h-box.

Certification works in log-magnitudes ``x = ln|z|``. There ``Phi`` and ``Psi``
are affine and the box conditions are linear, so the whole chain is a linear
feasibility problem. The one relaxation is at ``Tran`` rows with a unit
offset (``-1 + z3 + z4`` and the like): such a coordinate becomes a fresh
variable confined to an interval computed from the constraints gathered so
far. The LP is thus an over-approximation, and its infeasibility, witnessed
by a Farkas multiplier vector that is re-checked independently, certifies
non-attainability. Feasible LPs are followed up by exact evaluation of the
map chain at the LP point and at low-discrepancy samples.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from . import equilibria as eq
from . import game_core as gc
from . import hetnet as hn
from .symbolic import evaluate

LOG_FLOOR = 1e4  # variables are kept above ln(h) - LOG_FLOOR
LP_MARGIN = 1e-7
AUX_SLACK = 1e-9
N_SAMPLES = 100_000
SAMPLE_DEPTH = 80.0  # log-uniform sampling over [h e^-depth, h]
WITNESS_DEPTH = 600.0  # LP witnesses keep start coordinates above h e^-600 (no underflow)
_SECTION_TOKENS = {"C0": (3, 4), "C2": (2, 1)}


class ItineraryError(gc.DomainError):
    pass


# --- itineraries ---------------------------------------------------------------------


@dataclass(frozen=True)
class Itinerary:
    """Either corner labels (``kind='vertex'``) or quotient section numbers."""

    steps: tuple
    kind: str = "vertex"

    def __post_init__(self):
        if self.kind not in ("vertex", "quotient"):
            raise ItineraryError("kind must be 'vertex' or 'quotient'")
        if len(self.steps) < (2 if self.kind == "vertex" else 1):
            raise ItineraryError("itinerary too short")
        if self.kind == "vertex":
            for a, b in zip(self.steps, self.steps[1:]):
                if hn.EdgeId(a, b) not in hn.EDGES:
                    raise ItineraryError(f"no heteroclinic connection {a}->{b}")
        else:
            arrows = set(hn.quotient_arrows())
            for a, b in zip(self.steps, self.steps[1:]):
                if (a, b) not in arrows:
                    raise ItineraryError(f"no quotient arrow {a}->{b}")

    @classmethod
    def parse(cls, text: str) -> "Itinerary":
        toks = [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]
        if toks and all(t.upper() in eq.VERTICES for t in toks):
            return cls(tuple(t.upper() for t in toks), "vertex")
        steps: list[int] = []
        for t in toks:
            if t.upper() in _SECTION_TOKENS:
                steps.extend(_SECTION_TOKENS[t.upper()])
            elif t.isdigit() and 1 <= int(t) <= 6:
                steps.append(int(t))
            else:
                raise ItineraryError(f"cannot read itinerary token {t!r}")
        return cls(tuple(steps), "quotient")

    def vertices(self) -> tuple[str, ...]:
        """Concrete corner sequence (quotient itineraries start at their representative)."""
        if self.kind == "vertex":
            return tuple(self.steps)
        e = hn.QUOTIENT_SECTIONS[self.steps[0]]
        out = [e.src, e.dst]
        for j in self.steps[1:]:
            w = next(w for w in hn.build_network().successors(out[-1])
                     if hn._quotient_index(hn.EdgeId(out[-1], w))[0] == j)
            out.append(w)
        return tuple(out)

    def sigma(self, power: int = 1) -> "Itinerary":
        if self.kind == "quotient":
            return self
        return Itinerary(tuple(eq.sigma_vertex(v, power) for v in self.steps))

    def __str__(self) -> str:
        return ",".join(str(s) for s in self.steps)


# --- the map chain in log-magnitudes --------------------------------------------------------


@dataclass
class _Coord:
    row: np.ndarray | None  # coefficients over variables (None for a pinned value)
    const: float = 0.0  # log-magnitude offset, or the pinned value itself
    sign: int = 0  # +1/-1 known sign, 0 unknown

    @property
    def pinned(self) -> bool:
        return self.row is None


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[float, ...]
    bound: float
    origin: str


class _LogChain:
    """Linear constraints ``a.x <= b`` on log-magnitude variables."""

    def __init__(self, h: float):
        self.h = h
        self.lh = math.log(h)
        self.n = 0
        self.rows: list[tuple[dict, float, str]] = []
        self.floors: list[float] = []
        self.ceilings: list[float] = []

    def new_var(self, lo: float, hi: float) -> int:
        self.n += 1
        self.floors.append(max(lo, self.lh - LOG_FLOOR))
        self.ceilings.append(hi)
        return self.n - 1

    def vec(self, row: np.ndarray) -> np.ndarray:
        return np.concatenate([row, np.zeros(self.n - len(row))]) if len(row) < self.n else row

    def add(self, row: np.ndarray, const: float, bound: float, origin: str):
        """``row.x + const <= bound``."""
        self.rows.append(({i: float(v) for i, v in enumerate(row) if v != 0.0}, bound - const, origin))

    def matrices(self):
        A = np.zeros((len(self.rows) + 2 * self.n, self.n))
        b = np.zeros(len(A))
        origins = []
        for r, (d, bb, o) in enumerate(self.rows):
            for i, v in d.items():
                A[r, i] = v
            b[r] = bb
            origins.append(o)
        k = len(self.rows)
        for i in range(self.n):
            A[k + 2 * i, i], b[k + 2 * i] = 1.0, self.ceilings[i]
            A[k + 2 * i + 1, i], b[k + 2 * i + 1] = -1.0, -self.floors[i]
            origins += [f"x{i} ceiling", f"x{i} floor"]
        return A, b, origins

    def extreme(self, row: np.ndarray, maximize: bool = True) -> float | None:
        """max (or min) of ``row.x`` over the current constraints; None if infeasible."""
        A, b, _ = self.matrices()
        c = -self.vec(row) if maximize else self.vec(row)
        res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * self.n, method="highs")
        if res.status != 0:
            return None
        return float(-res.fun if maximize else res.fun)

    def margin(self):
        """max t with ``A x + t <= b``; returns (t, x, multipliers)."""
        A, b, _ = self.matrices()
        m = len(A)
        Aub = np.hstack([A, np.ones((m, 1))])
        c = np.zeros(self.n + 1)
        c[-1] = -1.0
        bounds = [(None, None)] * self.n + [(None, 1.0)]
        res = linprog(c, A_ub=Aub, b_ub=b, bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"margin LP failed: {res.message}")
        y = -np.asarray(res.ineqlin.marginals)
        return float(res.x[-1]), res.x[:-1], y


@dataclass(frozen=True)
class Certificate:
    """Farkas multipliers ``y >= 0`` with ``y.A ~ 0`` and ``y.b < 0``.

    Any x with ``A x <= b`` would give ``y.A x <= y.b < 0``; ``check`` bounds
    ``y.A x`` from below over the variable box in exact rational arithmetic.
    """

    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    origins: tuple[str, ...] = field(repr=False)
    margin: float = 0.0
    trace: tuple = field(default=(), repr=False)

    def check(self) -> bool:
        if np.any(self.y < 0):
            return False
        n = self.A.shape[1]
        ys = [Fraction(float(v)) for v in self.y]
        rhs = sum((yi * Fraction(float(bi)) for yi, bi in zip(ys, self.b) if yi), Fraction(0))
        lo_total = Fraction(0)
        # variable boxes are the ceiling/floor rows (last 2n rows)
        k = len(self.b) - 2 * n
        for j in range(n):
            r = sum((yi * Fraction(float(a)) for yi, a in zip(ys, self.A[:, j]) if yi and a), Fraction(0))
            lo, hi = -Fraction(float(self.b[k + 2 * j + 1])), Fraction(float(self.b[k + 2 * j]))
            lo_total += min(r * lo, r * hi)
        return lo_total > rhs

    def active(self, tol: float = 1e-12) -> list[str]:
        return [o for o, v in zip(self.origins, self.y) if v > tol]

    def to_dict(self) -> dict:
        return {"margin": self.margin, "active_constraints": self.active(), "trace": list(self.trace)}


@dataclass(frozen=True)
class Verdict:
    outcome: str  # Attainable | NotAttainable | Unknown
    h_used: float
    p: gc.Params
    itinerary: str
    witness: np.ndarray | None = field(default=None, repr=False)
    witness_trace: tuple = field(default=(), repr=False)
    certificate: Certificate | None = field(default=None, repr=False)
    note: str = ""

    def to_dict(self) -> dict:
        d = {"outcome": self.outcome, "h": self.h_used, "eps_x": self.p.eps_x, "eps_y": self.p.eps_y,
             "itinerary": self.itinerary, "note": self.note}
        if self.witness is not None:
            d["witness"] = self.witness.tolist()
            d["witness_trace"] = [list(map(float, z)) for z in self.witness_trace]
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


@dataclass(frozen=True)
class _Step:
    edge: hn.EdgeId
    nxt: hn.EdgeId
    q: np.ndarray
    r: np.ndarray
    M: np.ndarray
    c: np.ndarray


def _steps(vs: Sequence[str], p: gc.Params) -> list[_Step]:
    pt = p.as_tuple()
    out = []
    for a, b, c in zip(vs, vs[1:], vs[2:]):
        e, n = hn.edge(a, b), hn.edge(b, c)
        q = np.array([evaluate(x, pt) for x in hn.global_exponents(e)])
        r = np.array([evaluate(x, pt) for x in hn.local_exponents(n)])
        M, cc = hn.transition_affine(a, b)
        out.append(_Step(e, n, q, r, M, cc))
    return out


def _log_chain(vs: Sequence[str], p: gc.Params, h: float, want_trace: bool = False):
    """Build the constraint system; returns (chain, coords, sign_failure, trace)."""
    ch = _LogChain(h)
    lh, l1 = ch.lh, math.log((1 - h) / h)
    first = hn.section(hn.SectionId(hn.edge(vs[0], vs[1]), "out"), h)
    signs = hn.orthant(vs[0])
    coords: list[_Coord] = []
    for j in range(4):
        if j == first.pin:
            coords.append(_Coord(None, first.pin_value))
        else:
            v = ch.new_var(-math.inf, lh)
            coords.append(_Coord(np.eye(1, v + 1, v)[0], 0.0, signs[j]))
    trace = []

    def row(cd: _Coord) -> np.ndarray:
        return ch.vec(cd.row)

    for st in _steps(vs, p, ):
        k, s = hn.exit_axis(st.edge)
        # Psi
        new = []
        for j, cd in enumerate(coords):
            if j == k:
                new.append(_Coord(None, s * (1 - h)))
            elif cd.pinned:
                raise AssertionError("unexpected pinned coordinate before Psi")
            else:
                new.append(_Coord(cd.row, cd.const + st.q[j] * l1, cd.sign))
        coords = new
        # Tran
        new = []
        for i in range(4):
            nz = [j for j in range(4) if st.M[i, j] != 0]
            fixed = [j for j in nz if coords[j].pinned]
            if not fixed and st.c[i] == 0:
                assert len(nz) == 1
                src = coords[nz[0]]
                new.append(_Coord(src.row, src.const, src.sign * int(st.M[i, nz[0]])))
                continue
            base = float(st.c[i]) + sum(int(st.M[i, j]) * coords[j].const for j in fixed)
            lo_v, hi_v = base, base
            for j in nz:
                if j in fixed:
                    continue
                cd = coords[j]
                mx = ch.extreme(row(cd), True)
                if mx is None:
                    return ch, coords, "empty", trace
                big = math.exp(mx + cd.const + AUX_SLACK)
                sg = cd.sign * int(st.M[i, j])
                if sg > 0:
                    hi_v += big
                elif sg < 0:
                    lo_v -= big
                else:
                    lo_v, hi_v = lo_v - big, hi_v + big
            if lo_v > 0:
                sign, mag_lo, mag_hi = 1, lo_v, hi_v
            elif hi_v < 0:
                sign, mag_lo, mag_hi = -1, -hi_v, -lo_v
            else:
                sign, mag_lo, mag_hi = 0, 0.0, max(-lo_v, hi_v)
            lo = math.log(mag_lo) - AUX_SLACK if mag_lo > 0 else -math.inf
            v = ch.new_var(lo, math.log(mag_hi) + AUX_SLACK)
            new.append(_Coord(np.eye(1, v + 1, v)[0], 0.0, sign))
        coords = new
        # Phi
        k, s = hn.exit_axis(st.nxt)
        ck = coords[k]
        if ck.pinned or (ck.sign != 0 and ck.sign != s):
            return ch, coords, f"exit coordinate z{k + 1} has the wrong sign at {st.nxt.src}", trace
        ch.add(row(ck), ck.const, lh, f"{st.nxt}: |z{k + 1}| < h on entry")
        new = []
        for j, cd in enumerate(coords):
            if j == k:
                new.append(_Coord(None, s * h))
                continue
            rj = row(cd) - st.r[j] * row(ck)
            cj = cd.const + st.r[j] * (lh - ck.const)
            ch.add(rj, cj, lh, f"{st.nxt}: |z{j + 1}| < h on the out-section")
            new.append(_Coord(rj, cj, cd.sign))
        coords = new
        if want_trace:
            trace.append({"factor": f"Phi[{st.nxt}]", "log_ranges": _ranges(ch, coords)})
    return ch, coords, None, trace


def _ranges(ch: _LogChain, coords) -> list:
    out = []
    for cd in coords:
        if cd.pinned:
            out.append({"pinned": cd.const})
        else:
            lo = ch.extreme(cd.row, False)
            hi = ch.extreme(cd.row, True)
            out.append({"log_min": None if lo is None else lo + cd.const, "log_max": None if hi is None else hi + cd.const})
    return out


# --- exact evaluation -------------------------------------------------------------------------


def evaluate_chain(vs: Sequence[str], p, h: float, Z: np.ndarray, keep_trace: bool = False):
    """Exact chain on many out-section points at once.

    Returns (alive mask, final points[, trace]). A point dies when an exit
    coordinate has the wrong sign or is not inside the box, or when an
    out-section is hit outside its box.
    """
    p = gc.as_params(p)
    Z = np.atleast_2d(np.array(Z, dtype=float))
    alive = np.ones(len(Z), dtype=bool)
    trace = [Z.copy()] if keep_trace else None
    with np.errstate(all="ignore"):
        for st in _steps(vs, p):
            k, s = hn.exit_axis(st.edge)
            Z = Z * np.exp(st.q * math.log((1 - h) / h))
            Z[:, k] = s * (1 - h)
            Z = Z @ st.M.T.astype(float) + st.c
            k, s = hn.exit_axis(st.nxt)
            zk = s * Z[:, k]
            alive &= (zk > 0) & (zk < h)
            Z = Z * np.exp(st.r * np.log(h / np.abs(Z[:, [k]])))
            Z[:, k] = s * h
            free = [j for j in range(4) if j != k]
            alive &= np.all(np.abs(Z[:, free]) < h, axis=1)
            if keep_trace:
                trace.append(Z.copy())
    return (alive, Z, trace) if keep_trace else (alive, Z)


def _start_points(vs, h: float, logs: np.ndarray) -> np.ndarray:
    sec = hn.section(hn.SectionId(hn.edge(vs[0], vs[1]), "out"), h)
    signs = np.array(hn.orthant(vs[0]), dtype=float)
    Z = np.empty((len(logs), 4))
    Z[:, list(sec.free)] = np.exp(logs) * signs[list(sec.free)]
    Z[:, sec.pin] = sec.pin_value
    return Z


def sample_section(vs, h: float, n: int, seed: int = 0, depth: float = SAMPLE_DEPTH) -> np.ndarray:
    """Scrambled Sobol points, log-uniform in each free coordinate over ``[h e^-depth, h)``."""
    m = int(math.ceil(math.log2(max(n, 2))))
    u = qmc.Sobol(3, scramble=True, seed=seed).random_base2(m)[:n]
    return _start_points(vs, h, math.log(h) - depth * (1 - u))


def check_attainable(it: Itinerary, p, h: float = 1e-3, n_samples: int = N_SAMPLES, seed: int = 0,
                     with_trace: bool = False) -> Verdict:
    if not 0.0 < h <= 1e-2:
        raise gc.DomainError("h must lie in (0, 1e-2]")
    p = gc.as_params(p)
    vs = it.vertices()
    if len(vs) < 3:
        sec = hn.section(hn.SectionId(hn.edge(vs[0], vs[1]), "out"), h)
        z = _start_points(vs, h, np.full((1, 3), math.log(h / 2)))[0]
        return Verdict("Attainable", h, p, str(it), z, (z,), None, "no passage to constrain")
    ch, coords, failure, trace = _log_chain(vs, p, h, with_trace)
    if failure is not None:
        cert = Certificate(np.zeros((0, 0)), np.zeros(0), np.zeros(0), (failure,), math.inf, tuple(trace))
        return Verdict("NotAttainable", h, p, str(it), certificate=cert, note=failure)
    t, x, y = ch.margin()
    if t < -LP_MARGIN:
        A, b, origins = ch.matrices()
        cert = Certificate(A, b, y, tuple(origins), -t, tuple(trace))
        if cert.check():
            return Verdict("NotAttainable", h, p, str(it), certificate=cert)
        note = "LP infeasible but the multiplier check failed"
    else:
        note = ""
    # witness search: LP point first, then samples
    x = _representable_point(ch) if t > 0 else None
    if x is not None:
        z0 = _start_points(vs, h, x[None, :3])
        alive, _ = evaluate_chain(vs, p, h, z0)
        if alive[0]:
            return _witness(vs, p, h, it, z0[0], "LP interior point")
    Z = sample_section(vs, h, n_samples, seed)
    alive, _ = evaluate_chain(vs, p, h, Z)
    if alive.any():
        return _witness(vs, p, h, it, Z[np.argmax(alive)], "low-discrepancy sample")
    return Verdict("Unknown", h, p, str(it), note=note or f"LP margin {t:.3g}, no witness among {n_samples} samples")


def _representable_point(ch: _LogChain) -> np.ndarray | None:
    """Margin-LP point with the start variables raised above ``ln h - WITNESS_DEPTH``."""
    saved = list(ch.floors)
    ch.floors[:3] = [max(f, ch.lh - WITNESS_DEPTH) for f in saved[:3]]
    try:
        t, x, _ = ch.margin()
    finally:
        ch.floors[:] = saved
    return x if t > 0 else None


def _witness(vs, p, h, it, z, how) -> Verdict:
    _, _, tr = evaluate_chain(vs, p, h, z[None], keep_trace=True)
    return Verdict("Attainable", h, p, str(it), z, tuple(t[0] for t in tr), None, how)


def verify_witness(v: Verdict) -> bool:
    if v.witness is None:
        return False
    alive, _ = evaluate_chain(Itinerary.parse(v.itinerary).vertices(), v.p, v.h_used, v.witness[None])
    return bool(alive[0])


# --- the two-tie inequality ---------------------------------------------------------------------


def _outward(x: float, up: bool, ulps: int = 4) -> float:
    for _ in range(ulps):
        x = math.nextafter(x, math.inf if up else -math.inf)
    return x


def dwld_inequality(p, h: float) -> tuple[tuple[float, float], tuple[float, float], bool]:
    """Ranges of both sides of the necessary condition for tie -> win/loss -> loss/win -> tie.

    LHS = |h - z1|/h lies in (1 - r^a, 1) and RHS in (0, r^b) with
    ``r = h/(1-h)``; the itinerary is impossible once ``r^b < 1 - r^a``.
    """
    p = gc.as_params(p)
    if not 0.0 < h < 0.5:
        raise gc.DomainError("h must lie in (0, 1/2)")
    ex = p.eps_x
    r = h / (1 - h)
    a = (3 + ex) / (1 - ex)
    b = (1 - ex) / (1 + ex) + (1 + ex) / 2 + a * 2 / (1 + ex)
    lhs = (_outward(1 - r**a, False), 1.0)
    rhs = (0.0, _outward(r**b, True))
    return lhs, rhs, rhs[1] < lhs[0]


def strip_rhs_power(p) -> float:
    """Power of ``h/(1-h)`` bounding the RHS for the seven-corner itinerary, sign flipped."""
    p = gc.as_params(p)
    ex, ey = p.eps_x, p.eps_y
    num = (87 - 15 * ey + 33 * ey**2 - 9 * ey**3 + ex**2 * (29 - 5 * ey + 11 * ey**2 - 3 * ey**3)
           + ex**3 * (-15 + 23 * ey - 9 * ey**2 + ey**3) + ex * (-13 + 37 * ey - 27 * ey**2 + 3 * ey**3))
    return -num / (16 * (1 + ex) * (-1 + ey))


STRIP_ITINERARY = Itinerary(("PP", "PS", "RS", "RP", "SP", "SR", "RR"))
DWLD_ITINERARY = Itinerary(("PP", "SP", "SR", "RR"))


# --- scans ------------------------------------------------------------------------------------


def _scan_point(args):
    it, ex, ey, h, n_samples = args
    if abs(ex - ey) < 1e-12:
        return ex, ey, "Skipped"
    return ex, ey, check_attainable(it, (ex, ey), h, n_samples).outcome


def scan_itinerary(it: Itinerary, grid_step: float = 0.05, h: float = 1e-3, workers: int = 1,
                   n_samples: int = 20_000) -> list[tuple[float, float, str]]:
    if not 0.01 <= grid_step <= 0.2:
        raise gc.DomainError("grid_step must lie in [0.01, 0.2]")
    from .stability import grid

    g = grid(grid_step)
    jobs = [(it, float(ex), float(ey), h, n_samples) for ey in g for ex in g]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_scan_point, jobs, chunksize=16))
    return [_scan_point(j) for j in jobs]


_SCAN_SHADE = {"NotAttainable": 80, "Attainable": 255, "Unknown": 170, "Skipped": 0}


def write_scan(rows, h: float, csv_path=None, pgm_path=None) -> None:
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps_x", "eps_y", "verdict", "h"])
            for ex, ey, v in rows:
                w.writerow([repr(float(ex)), repr(float(ey)), v, repr(float(h))])
    if pgm_path is not None:
        from .stability import write_pgm

        xs = sorted({r[0] for r in rows})
        ys = sorted({r[1] for r in rows}, reverse=True)
        lut = {(r[0], r[1]): r[2] for r in rows}
        write_pgm(np.array([[lut[(x, y)] for x in xs] for y in ys], dtype=object), pgm_path, _SCAN_SHADE)


# --- measure of followers ------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureRatio:
    ratio: float
    p_est: float
    bound: float
    bound_ok: bool
    n_followers: int
    n_comparison: int


def _triple_ok(vs) -> bool:
    cls = [eq.quotient_class(v) for v in vs]
    tie = [c == "Tie" for c in cls]
    return tie in ([True, False, True], [False, True, False])


def measure_ratio(p, triple: Itinerary, h: float = 1e-3, n_samples: int = 100_000, seed: int = 0,
                  depth: float = SAMPLE_DEPTH) -> MeasureRatio:
    """Share (Lebesgue) of the out-section points reaching the in-section before the third corner,
    among those reaching the out-section after the second corner.
    """
    if n_samples < 100:
        raise gc.DomainError("n_samples must be at least 100")
    p = gc.as_params(p)
    vs = triple.vertices()
    if len(vs) != 3 or not _triple_ok(vs):
        raise gc.DomainError("need a triple tie -> win/loss -> tie or win/loss -> tie -> win/loss")
    Z = sample_section(vs, h, n_samples, seed, depth)
    sec = hn.section(hn.SectionId(hn.edge(vs[0], vs[1]), "out"), h)
    free = list(sec.free)
    w = np.prod(np.abs(Z[:, free]), axis=1)  # Lebesgue weight of log-uniform samples
    alive, out = evaluate_chain(vs, p, h, Z)
    e2 = hn.edge(vs[1], vs[2])
    q = np.array([evaluate(x, p.as_tuple()) for x in hn.global_exponents(e2)])
    k, _ = hn.exit_axis(e2)
    after = out * np.exp(q * math.log((1 - h) / h))
    inside = np.all(np.abs(np.delete(after, k, axis=1)) < h, axis=1)
    follow = alive & inside
    g, f = w[alive].sum(), w[follow].sum()
    if g == 0:
        return MeasureRatio(math.nan, math.nan, math.nan, False, 0, 0)
    ratio = f / g
    p_est = _ratio_exponent(vs, p, h)
    bound = (h / (1 - h)) ** p_est
    return MeasureRatio(ratio, p_est, bound, bool(ratio <= bound and p_est > 0), int(follow.sum()), int(alive.sum()))


def _ratio_exponent(vs, p, h) -> float:
    """Leading exponent of the volume ratio, halved to absorb polynomial prefactors.

    Volumes are integrals of ``exp(sum x)`` over polyhedra in log coordinates;
    at leading order each is ``exp(max sum x)``.
    """
    ch, coords, failure, _ = _log_chain(vs, p, h)
    if failure is not None:
        return math.nan
    ones = ch.vec(np.r_[np.ones(3), np.zeros(max(ch.n - 3, 0))][: ch.n])
    g = ch.extreme(ones, True)
    e2 = hn.edge(vs[1], vs[2])
    q = np.array([evaluate(x, p.as_tuple()) for x in hn.global_exponents(e2)])
    k, _ = hn.exit_axis(e2)
    l1 = math.log((1 - h) / h)
    for j, cd in enumerate(coords):
        if j != k and not cd.pinned:
            ch.add(ch.vec(cd.row), cd.const + q[j] * l1, ch.lh, f"in-section before {vs[2]}")
    f = ch.extreme(ones, True)
    if g is None or f is None:
        return math.nan
    return 0.5 * (g - f) / l1


def certificate_json(v: Verdict) -> str:
    return json.dumps(v.to_dict(), indent=1, default=float)
