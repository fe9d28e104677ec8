"""The heteroclinic network between the nine corners and its map atlas.

Every corner has an integer eigen-chart (see :mod:`rspnet.equilibria`). An edge
``V -> W`` leaves ``V`` along chart axis ``k`` with sign ``s``; its out-section
pins ``z_k = s*h`` and its in-section, written in the same chart, pins
``z_k = s*(1-h)``. Four kinds of maps act between sections:

* local ``Phi`` (linearized passage near a corner): ``z_i -> z_i (h/|z_k|)^(l_i/l_k)``
* global ``Psi`` (linearized transport along an edge): ``z_i -> z_i ((1-h)/h)^q_i``
* transition ``Tran`` (exact affine change of chart, integer coefficients)
* sigma chart maps (the cyclic relabelling, a signed permutation in charts)

Exponents are exact rational functions of ``(eps_x, eps_y)`` and are derived
from corner eigenvalues, so the whole atlas is sigma-equivariant by design.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import sympy as sp

from . import equilibria as eq
from . import game_core as gc
from .symbolic import EX, EY, evaluate, evaluate_matrix, simplify

DEFAULT_H = 1e-3

_EDGE_LIST = (
    ("PP", "PS"), ("PP", "SP"), ("PS", "SS"), ("PS", "RS"), ("SS", "SR"), ("SS", "RS"),
    ("RS", "RR"), ("RS", "RP"), ("RP", "PP"), ("RP", "SP"), ("SP", "SS"), ("SP", "SR"),
    ("SR", "RR"), ("SR", "PR"), ("RR", "RP"), ("RR", "PR"), ("PR", "PP"), ("PR", "PS"),
)


class NonLinearizableWarning(UserWarning):
    """Raised for eps_x == eps_y, where the corners are not C1-linearizable."""


class ChainError(gc.DomainError):
    """A point left the domain of one factor of a composite map."""

    def __init__(self, message: str, factor_index: int, factor_name: str):
        super().__init__(message)
        self.factor_index = factor_index
        self.factor_name = factor_name


class EdgeId(NamedTuple):
    src: str
    dst: str

    def __str__(self) -> str:
        return f"{self.src}->{self.dst}"


EDGES = tuple(EdgeId(a, b) for a, b in _EDGE_LIST)
_EDGE_SET = frozenset(EDGES)


def edge(src: str, dst: str) -> EdgeId:
    e = EdgeId(src, dst)
    if e not in _EDGE_SET:
        raise gc.DomainError(f"{e} is not a heteroclinic connection of the network")
    return e


def parse_edge(text: str) -> EdgeId:
    a, _, b = text.replace(" ", "").partition("->")
    return edge(a, b)


def sigma_edge(e: EdgeId, power: int = 1) -> EdgeId:
    return EdgeId(eq.sigma_vertex(e.src, power), eq.sigma_vertex(e.dst, power))


@dataclass(frozen=True)
class Network:
    vertices: tuple[str, ...]
    edges: tuple[EdgeId, ...]

    def successors(self, v: str) -> tuple[str, ...]:
        return tuple(e.dst for e in self.edges if e.src == v)

    def predecessors(self, v: str) -> tuple[str, ...]:
        return tuple(e.src for e in self.edges if e.dst == v)

    def sigma_is_automorphism(self) -> bool:
        es = set(self.edges)
        return {sigma_edge(e) for e in es} == es and {eq.sigma_vertex(v) for v in self.vertices} == set(self.vertices)


def build_network() -> Network:
    net = Network(eq.VERTICES, EDGES)
    for v in net.vertices:
        assert len(net.successors(v)) == 2 and len(net.predecessors(v)) == 2
    return net


def _direction(v: str, w: str) -> tuple[int, int]:
    """(index, sign) with ``Mac_v^{-1} (w - v) = sign * e_index``."""
    _, Minv = eq.mac_matrix(v)
    d = Minv @ (eq.vertex_location(w) - eq.vertex_location(v)).astype(int)
    nz = np.flatnonzero(d)
    assert len(nz) == 1 and abs(d[nz[0]]) == 1, (v, w, d)
    return int(nz[0]), int(d[nz[0]])


@lru_cache(maxsize=None)
def orthant(v: str) -> tuple[int, ...]:
    """Signs of the chart coordinates of points of the simplex product near ``v``.

    Each chart axis points along a face edge to a neighbouring corner (not
    necessarily joined by a heteroclinic orbit); the sign is that direction.
    """
    M, _ = eq.mac_matrix(v)
    loc = eq.vertex_location(v)
    out = []
    for i in range(4):
        for s in (1, -1):
            r = loc + s * M[:, i]
            if all(r[j] >= 0 for j in range(4)) and r[0] + r[1] <= 1 and r[2] + r[3] <= 1:
                out.append(s)
                break
        else:
            raise AssertionError((v, i))
    return tuple(out)


def exit_axis(e: EdgeId) -> tuple[int, int]:
    """Chart axis (0-based) and sign along which ``e`` leaves its source."""
    return _direction(e.src, e.dst)


def entry_axis(e: EdgeId) -> tuple[int, int]:
    """Chart axis and sign, in the target's chart, pointing back along ``e``."""
    return _direction(e.dst, e.src)


# --- sections -----------------------------------------------------------------


class SectionId(NamedTuple):
    edge: EdgeId
    side: str  # "out" or "in"

    @property
    def vertex(self) -> str:
        return self.edge.src if self.side == "out" else self.edge.dst

    def __str__(self) -> str:
        return f"{self.side}[{self.edge}]"


ALL_SECTIONS = tuple(SectionId(e, side) for e in EDGES for side in ("out", "in"))


@dataclass(frozen=True)
class SectionChart:
    """A section written in the chart of ``edge.src``.

    Points satisfy ``z[pin] = pin_value`` and ``|z_i| < h`` for the free axes.
    """

    section: SectionId
    chart: str
    pin: int
    pin_value: float
    h: float

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i in range(4) if i != self.pin)

    def contains(self, z, tol: float = 0.0) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(
            abs(z[self.pin] - self.pin_value) <= tol + 1e-15 * abs(self.pin_value)
            and np.all(np.abs(z[list(self.free)]) < self.h)
        )

    def sample(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        """``n`` points of the section inside the simplex product, ``|z_i| < scale*h``."""
        signs = np.array(orthant(self.chart), dtype=float)
        z = rng.uniform(0.0, scale * self.h, size=(n, 4)) * signs
        z[:, self.pin] = self.pin_value
        return z

    def point(self, free_values) -> np.ndarray:
        z = np.empty(4)
        z[list(self.free)] = free_values
        z[self.pin] = self.pin_value
        return z


def section(sec: SectionId, h: float = DEFAULT_H) -> SectionChart:
    if not 0.0 < h < 0.5:
        raise gc.DomainError("h must lie in (0, 1/2)")
    k, s = exit_axis(sec.edge)
    value = s * h if sec.side == "out" else s * (1.0 - h)
    return SectionChart(sec, sec.edge.src, k, value, h)


# --- eigen-data driven exponents -----------------------------------------------


def _lam(v: str) -> tuple[sp.Expr, ...]:
    return eq.corner_eigenvalues_symbolic(v)


@lru_cache(maxsize=None)
def local_exponents(e: EdgeId) -> tuple[sp.Expr, ...]:
    """``r_i = l_i / l_k`` for the exit along ``e`` (r_k = 1)."""
    k, _ = exit_axis(e)
    lam = _lam(e.src)
    return tuple(simplify(lam[i] / lam[k]) for i in range(4))


@lru_cache(maxsize=None)
def transition_affine(v: str, w: str) -> tuple[np.ndarray, np.ndarray]:
    """``Tran_{v->w}(z) = M z + c``, exact integers."""
    Mv, _ = eq.mac_matrix(v)
    _, Mw_inv = eq.mac_matrix(w)
    M = Mw_inv @ Mv
    c = Mw_inv @ (eq.vertex_location(v) - eq.vertex_location(w)).astype(int)
    return M, c


@lru_cache(maxsize=None)
def global_exponents(e: EdgeId) -> tuple[sp.Expr, ...]:
    """``q_i`` of the edge transport; ``q_k`` (exit axis) is reported as 0.

    Along the edge the exit coordinate u obeys ``u' = l_k u (1 - u)`` and a
    transverse coordinate grows at rate ``a + b u`` interpolating between the
    source eigenvalue and the matching eigenvalue at the target, which
    integrates to ``((1-h)/h)^((l_i^V + l_j^W)/l_k^V)``.
    """
    k, _ = exit_axis(e)
    j_in, _ = entry_axis(e)
    M, _ = transition_affine(e.src, e.dst)
    lv, lw = _lam(e.src), _lam(e.dst)
    q = []
    for i in range(4):
        if i == k:
            q.append(sp.Integer(0))
            continue
        rows = [r for r in range(4) if M[r, i] != 0 and r != j_in]
        assert len(rows) == 1, (e, i, rows)
        q.append(simplify((lv[i] + lw[rows[0]]) / lv[k]))
    return tuple(q)


# --- maps -----------------------------------------------------------------------


def _scale(z: np.ndarray, log_factor: np.ndarray) -> np.ndarray:
    """``z * exp(log_factor)`` formed in logs; zero coordinates stay zero."""
    with np.errstate(divide="ignore"):
        mag = np.exp(np.log(np.abs(z)) + log_factor)
    return np.where(z == 0.0, 0.0, np.sign(z) * mag)


def _warn_if_degenerate(p: gc.Params):
    if p.eps_x == p.eps_y:
        warnings.warn(
            "eps_x == eps_y: corners are not C1-linearizable, maps are formal only",
            NonLinearizableWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class SectionMap:
    """Base class: a map between section charts of two corners."""

    kind: str
    name: str
    src: str
    dst: str
    h: float

    def __call__(self, z, p, strict: bool = True) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "src_chart": self.src, "dst_chart": self.dst}


@dataclass(frozen=True)
class LocalMap(SectionMap):
    """``Phi`` near ``out_edge.src``: from the incoming section to the out-section."""

    out_edge: EdgeId = None
    in_edge: EdgeId | None = None

    @property
    def exit(self) -> tuple[int, int]:
        return exit_axis(self.out_edge)

    @property
    def exponents(self) -> sp.Matrix:
        """Log-linear part: ``log|out| = E log|z| + const``."""
        k, _ = self.exit
        r = local_exponents(self.out_edge)
        E = sp.eye(4)
        for i in range(4):
            if i != k:
                E[i, k] = -r[i]
        E[k, k] = 0
        return E

    def prefactor_exponents(self) -> tuple[sp.Expr, ...]:
        """Power of ``h`` multiplying each output coordinate."""
        k, _ = self.exit
        r = local_exponents(self.out_edge)
        return tuple(sp.Integer(1) if i == k else r[i] for i in range(4))

    def __call__(self, z, p, strict: bool = True) -> np.ndarray:
        """Evaluate; ``strict=False`` keeps only the sign condition on the exit axis."""
        p = gc.as_params(p)
        _warn_if_degenerate(p)
        z = np.asarray(z, dtype=float)
        k, s = self.exit
        h = self.h
        if not s * z[k] > 0.0:
            raise gc.DomainError(f"{self.name}: exit coordinate z{k + 1}={z[k]!r} has the wrong sign")
        if strict and s * z[k] > h * (1 + 1e-12):
            raise gc.DomainError(f"{self.name}: exit coordinate z{k + 1}={z[k]!r} not in the box")
        others = [i for i in range(4) if i != k]
        if strict and np.any(np.abs(z[others]) >= 2 * h):
            raise gc.DomainError(f"{self.name}: input {z} outside the section box")
        r = np.array([evaluate(x, p.as_tuple()) for x in local_exponents(self.out_edge)])
        out = _scale(z, r * np.log(h / abs(z[k])))
        out[k] = s * h
        return out

    def to_dict(self) -> dict:
        k, s = self.exit
        d = super().to_dict()
        d.update(
            edge=str(self.out_edge),
            exit_axis=k + 1,
            exit_sign=s,
            exponent_matrix=[[str(x) for x in row] for row in self.exponents.tolist()],
            h_power=[str(x) for x in self.prefactor_exponents()],
            output_pin={"axis": k + 1, "value": f"{s}*h"},
        )
        return d


@dataclass(frozen=True)
class GlobalMap(SectionMap):
    """``Psi`` along an edge: out-section to in-section, both in the source chart."""

    edge: EdgeId = None

    @property
    def q(self) -> tuple[sp.Expr, ...]:
        return global_exponents(self.edge)

    @property
    def exponents(self) -> sp.Matrix:
        k, _ = exit_axis(self.edge)
        E = sp.eye(4)
        E[k, k] = 0
        return E

    def __call__(self, z, p, strict: bool = True) -> np.ndarray:
        p = gc.as_params(p)
        _warn_if_degenerate(p)
        z = np.asarray(z, dtype=float)
        k, s = exit_axis(self.edge)
        h = self.h
        if abs(z[k] - s * h) > 1e-12 * h:
            raise gc.DomainError(f"{self.name}: z{k + 1}={z[k]!r} is not pinned at {s * h!r}")
        others = [i for i in range(4) if i != k]
        if strict and np.any(np.abs(z[others]) >= h):
            raise gc.DomainError(f"{self.name}: input {z} outside the section box")
        q = np.array([evaluate(x, p.as_tuple()) for x in self.q])
        out = _scale(z, q * np.log((1 - h) / h))
        out[k] = s * (1 - h)
        return out

    def to_dict(self) -> dict:
        k, s = exit_axis(self.edge)
        d = super().to_dict()
        d.update(
            edge=str(self.edge),
            pinned_axis=k + 1,
            input_pin=f"{s}*h",
            output_pin=f"{s}*(1-h)",
            ratio_power=[str(x) for x in self.q],
            exponent_matrix=[[str(x) for x in row] for row in self.exponents.tolist()],
        )
        return d


@dataclass(frozen=True)
class TransitionMap(SectionMap):
    """Exact affine change of chart ``z -> M z + c``."""

    @property
    def affine(self) -> tuple[np.ndarray, np.ndarray]:
        return transition_affine(self.src, self.dst)

    def __call__(self, z, p=None, strict: bool = True) -> np.ndarray:
        M, c = self.affine
        return M.astype(float) @ np.asarray(z, dtype=float) + c

    def inverse(self) -> "TransitionMap":
        return transition_map_between(self.dst, self.src, self.h)

    def formula(self) -> tuple[str, ...]:
        M, c = self.affine
        out = []
        for i in range(4):
            terms = [str(int(c[i]))] if c[i] else []
            for j in range(4):
                if M[i, j]:
                    terms.append(("" if M[i, j] == 1 else "-") + f"z{j + 1}")
            out.append("+".join(terms).replace("+-", "-") or "0")
        return tuple(out)

    def to_dict(self) -> dict:
        M, c = self.affine
        d = super().to_dict()
        d.update(matrix=M.tolist(), offset=c.tolist(), formula=list(self.formula()))
        return d


@dataclass(frozen=True)
class SigmaChartMap(SectionMap):
    """The relabelling ``sigma^power`` carried from chart ``src`` to chart ``dst``."""

    power: int = 1

    @property
    def matrix(self) -> np.ndarray:
        return _sigma_chart_matrix(self.src, self.power)

    def __call__(self, z, p=None, strict: bool = True) -> np.ndarray:
        return self.matrix.astype(float) @ np.asarray(z, dtype=float)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(power=self.power, matrix=self.matrix.tolist())
        return d


@lru_cache(maxsize=None)
def _sigma_chart_matrix(v: str, power: int) -> np.ndarray:
    S = np.eye(4, dtype=int)
    u = v
    if power >= 0:
        for _ in range(power):
            S = eq.chart_sigma(u) @ S
            u = eq.sigma_vertex(u)
    else:
        for _ in range(-power):
            w = eq.sigma_vertex(u, -1)
            S = np.array(sp.Matrix(eq.chart_sigma(w)).inv(), dtype=int) @ S
            u = w
    return S


@dataclass(frozen=True)
class CompositeMap(SectionMap):
    """Factors applied left to right (the first factor acts first)."""

    factors: tuple[SectionMap, ...] = ()
    strict: bool = True

    def __call__(self, z, p, strict: bool | None = None) -> np.ndarray:
        """Apply the factors; box checks follow ``strict`` (default: the composite's own flag)."""
        strict = self.strict if strict is None else strict
        z = np.asarray(z, dtype=float)
        for i, f in enumerate(self.factors):
            try:
                z = f(z, p, strict)
            except ChainError:
                raise
            except gc.DomainError as err:
                raise ChainError(f"factor {i} ({f.name}): {err}", i, f.name) from None
        return z

    def trace(self, z, p) -> list[np.ndarray]:
        out = [np.asarray(z, dtype=float)]
        for f in self.factors:
            out.append(f(out[-1], p, self.strict))
        return out

    def expand(self) -> tuple[SectionMap, ...]:
        flat = []
        for f in self.factors:
            flat.extend(f.expand() if isinstance(f, CompositeMap) else (f,))
        return tuple(flat)

    def then(self, other: SectionMap, name: str | None = None) -> "CompositeMap":
        return compose([self, other], name, self.strict)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["factors"] = [f.name for f in self.expand()]
        return d


def compose(maps: Sequence[SectionMap], name: str | None = None, strict: bool = True) -> CompositeMap:
    """Chain maps left to right.

    With ``strict=False`` the composite is the formal composition of the
    linearized maps: intermediate points may leave the h-boxes (the amplifying
    factors of ``Psi`` push them out long before the orbit returns), and only
    the sign conditions on exit axes are enforced.
    """
    maps = list(maps)
    for a, b in zip(maps, maps[1:]):
        if a.dst != b.src:
            raise gc.DomainError(f"cannot compose {a.name} (ends in {a.dst}) with {b.name} (starts in {b.src})")
    name = name or " then ".join(m.name for m in maps)
    return CompositeMap("Composite", name, maps[0].src, maps[-1].dst, maps[0].h, tuple(maps), strict)


def local_map(vertex: str, in_edge: EdgeId | None, out_edge: EdgeId, h: float = DEFAULT_H) -> LocalMap:
    if out_edge not in _EDGE_SET or out_edge.src != vertex:
        raise gc.DomainError(f"{out_edge} does not leave {vertex}")
    if in_edge is not None and (in_edge not in _EDGE_SET or in_edge.dst != vertex):
        raise gc.DomainError(f"{in_edge} does not enter {vertex}")
    return LocalMap("Local", f"Phi[{out_edge}]", vertex, vertex, h, out_edge, in_edge)


def global_map(e: EdgeId, h: float = DEFAULT_H) -> GlobalMap:
    if e not in _EDGE_SET:
        raise gc.DomainError(f"{e} is not an edge")
    if not 0.0 < h < 0.5:
        raise gc.DomainError("h must lie in (0, 1/2)")
    return GlobalMap("Global", f"Psi[{e}]", e.src, e.src, h, e)


def transition_map(e: EdgeId, h: float = DEFAULT_H) -> TransitionMap:
    if e not in _EDGE_SET:
        raise gc.DomainError(f"{e} is not an edge")
    return transition_map_between(e.src, e.dst, h)


def transition_map_between(v: str, w: str, h: float = DEFAULT_H) -> TransitionMap:
    eq.vertex_location(v), eq.vertex_location(w)
    return TransitionMap("Transition", f"Tran[{v}->{w}]", v, w, h)


def sigma_chart(v: str, power: int = 1, h: float = DEFAULT_H) -> SigmaChartMap:
    w = eq.sigma_vertex(v, power)
    tag = "sigma" if power == 1 else f"sigma^{power}"
    return SigmaChartMap("Sigma", f"{tag}[{v}->{w}]", v, w, h, power)


def edge_passage(e: EdgeId, next_edge: EdgeId, h: float = DEFAULT_H) -> CompositeMap:
    """``Phi_next . Tran_e . Psi_e``: out-section of ``e`` to out-section of ``next_edge``."""
    if next_edge.src != e.dst:
        raise gc.DomainError(f"{next_edge} does not continue {e}")
    return compose([global_map(e, h), transition_map(e, h), local_map(e.dst, e, next_edge, h)])


def chain_along(edges: Sequence[EdgeId], h: float = DEFAULT_H, name: str | None = None,
                strict: bool = True) -> CompositeMap:
    """Map from the out-section of ``edges[0]`` to that of ``edges[-1]``."""
    parts = [edge_passage(a, b, h) for a, b in zip(edges, edges[1:])]
    return compose([f for part in parts for f in part.factors], name, strict)


# --- leading-order (log-linear) composition --------------------------------------


@dataclass
class _Coord:
    """One coordinate during leading-order composition.

    Either a constant ``value`` (sympy, in h) or a monomial
    ``sign * C * prod |s_j|^row_j`` with ``log C`` stored as ``logc``.
    """

    row: tuple | None = None
    logc: sp.Expr = sp.Integer(0)
    sign: int = 1
    sign_src: int | None = None
    value: sp.Expr | None = None

    @property
    def is_const(self) -> bool:
        return self.value is not None


H = sp.Symbol("h", positive=True)


class LeadingOrder:
    """Composition of section maps keeping only the dominant monomial terms.

    Transition maps add unit offsets to small coordinates; at leading order a
    coordinate that picks up an offset becomes a constant, and the small
    additive corrections are dropped. Everything else is exactly log-linear.
    """

    def __init__(self, sec: SectionChart | None, n_inputs: int = 4, pin: int | None = None, pin_value=None):
        if sec is not None:
            pin = sec.pin
            k, s = exit_axis(sec.section.edge)
            pin_value = s * (H if sec.section.side == "out" else 1 - H)
        self.inputs = tuple(i for i in range(4) if i != pin)
        self.coords = []
        for i in range(4):
            if i == pin:
                self.coords.append(_Coord(value=sp.sympify(pin_value)))
            else:
                row = tuple(sp.Integer(1 if j == i else 0) for j in range(4))
                self.coords.append(_Coord(row=row, sign_src=i))

    def apply(self, m: SectionMap) -> "LeadingOrder":
        if isinstance(m, CompositeMap):
            for f in m.factors:
                self.apply(f)
        elif isinstance(m, LocalMap):
            self._local(m)
        elif isinstance(m, GlobalMap):
            self._global(m)
        elif isinstance(m, TransitionMap):
            self._affine(*m.affine)
        elif isinstance(m, SigmaChartMap):
            self._affine(m.matrix, np.zeros(4, dtype=int))
        else:
            raise TypeError(m)
        return self

    def _local(self, m: LocalMap):
        k, s = m.exit
        r = local_exponents(m.out_edge)
        ck = self.coords[k]
        if ck.is_const:
            if sp.expand(ck.value - s * H) == 0:
                return  # already on the out-section: zero transit time
            raise gc.DomainError(f"{m.name}: exit coordinate is not small at leading order")
        out = []
        for i, c in enumerate(self.coords):
            if i == k:
                out.append(_Coord(value=s * H))
                continue
            # z_i * (h / |z_k|)^r_i
            base_row = c.row if not c.is_const else (sp.Integer(0),) * 4
            base_logc = c.logc if not c.is_const else sp.log(sp.Abs(c.value))
            sign = c.sign if not c.is_const else int(sp.sign(c.value.subs(H, sp.Rational(1, 1000))))
            row = tuple(simplify(base_row[j] - r[i] * ck.row[j]) for j in range(4))
            logc = base_logc + r[i] * (sp.log(H) - ck.logc)
            out.append(_Coord(row=row, logc=logc, sign=sign, sign_src=None if c.is_const else c.sign_src))
        self.coords = out

    def _global(self, m: GlobalMap):
        k, s = exit_axis(m.edge)
        q = m.q
        out = []
        for i, c in enumerate(self.coords):
            if i == k:
                out.append(_Coord(value=s * (1 - H)))
            elif c.is_const:
                raise gc.DomainError(f"{m.name}: unexpected constant coordinate {i + 1}")
            else:
                out.append(_Coord(c.row, c.logc + q[i] * (sp.log(1 - H) - sp.log(H)), c.sign, c.sign_src))
        self.coords = out

    def _affine(self, M: np.ndarray, c: np.ndarray):
        out = []
        for i in range(4):
            nz = [j for j in range(4) if M[i, j] != 0]
            consts = [j for j in nz if self.coords[j].is_const]
            if consts or c[i] != 0:
                val = sp.Integer(int(c[i])) + sum(int(M[i, j]) * self.coords[j].value for j in consts)
                val = sp.expand(val)
                if val == 0:
                    raise gc.DomainError("leading-order constant cancels; the chain is degenerate here")
                out.append(_Coord(value=val))
            else:
                assert len(nz) == 1, f"row {i} mixes small coordinates {nz}"
                src = self.coords[nz[0]]
                out.append(_Coord(src.row, src.logc, src.sign * int(M[i, nz[0]]), src.sign_src))
        self.coords = out

    # results
    def exponent_matrix(self, outputs: Sequence[int] | None = None) -> sp.Matrix:
        """Exponents of the monomial outputs with respect to the free inputs."""
        outputs = outputs if outputs is not None else [i for i, c in enumerate(self.coords) if not c.is_const]
        return sp.Matrix([[self.coords[i].row[j] for j in self.inputs] for i in outputs])

    @property
    def monomial_outputs(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.coords) if not c.is_const)

    @property
    def pinned_outputs(self) -> dict[int, sp.Expr]:
        return {i: c.value for i, c in enumerate(self.coords) if c.is_const}

    def log_constants(self, p, h: float) -> dict[int, float]:
        p = gc.as_params(p)
        subs = {EX: p.eps_x, EY: p.eps_y, H: h}
        return {i: float(c.logc.subs(subs)) for i, c in enumerate(self.coords) if not c.is_const}

    def signs(self) -> dict[int, tuple[int, int | None]]:
        return {i: (c.sign, c.sign_src) for i, c in enumerate(self.coords) if not c.is_const}


def leading_order(m: SectionMap, start: SectionChart) -> LeadingOrder:
    return LeadingOrder(start).apply(m)


# --- cycles and return maps ------------------------------------------------------

CYCLES = {
    "C0": ("PS", "RS", "RP", "SP", "SR", "PR"),
    "C1": ("PP", "SP", "SS", "RS", "RR", "PR"),
    "C2": ("PP", "PS", "SS", "SR", "RR", "RP"),
}


def cycle_edges(cycle: str) -> tuple[EdgeId, ...]:
    vs = CYCLES[cycle]
    return tuple(edge(a, b) for a, b in zip(vs, vs[1:] + vs[:1]))


@dataclass(frozen=True)
class ReturnMap:
    cycle: str
    section: SectionChart
    full: CompositeMap
    segment: CompositeMap

    @property
    def cube(self) -> CompositeMap:
        return compose([self.segment] * 3, f"({self.segment.name})^3", self.segment.strict)

    def segment_exponents(self) -> sp.Matrix:
        lo = leading_order(self.segment, self.section)
        return lo.exponent_matrix(list(self.section.free))


def _sigma_power_between(a: EdgeId, b: EdgeId) -> int:
    for m in (1, 2):
        if sigma_edge(a, m) == b:
            return m if m == 1 else -1
    raise gc.DomainError(f"{a} and {b} are not sigma-related")


def return_map(cycle: str, p=None, h: float = DEFAULT_H, strict: bool = False) -> ReturnMap:
    """Return map to the out-section of the cycle's first edge.

    The full map follows all six edges; the segment follows two edges and is
    closed with the sigma chart map, so that the full map is its cube.
    """
    if cycle not in CYCLES:
        raise gc.DomainError(f"unknown cycle {cycle!r}")
    if p is not None:
        _warn_if_degenerate(gc.as_params(p))
    es = cycle_edges(cycle)
    start = section(SectionId(es[0], "out"), h)
    full = chain_along(list(es) + [es[0]], h, f"Ret[{cycle}]", strict)
    m = _sigma_power_between(es[2], es[0])
    seg = compose(
        list(chain_along(es[:3], h).factors) + [sigma_chart(es[2].src, m, h)],
        f"Seg[{cycle}]",
        strict,
    )
    return ReturnMap(cycle, start, full, seg)


# --- invariant squares -------------------------------------------------------------

SQUARES = (
    ("RP", "SP", "SS", "RS"),
    ("RP", "SP", "SR", "RR"),
    ("PR", "PS", "SS", "SR"),
    ("PP", "SP", "SR", "PR"),
    ("PP", "PS", "RS", "RP"),
    ("RR", "PR", "PS", "RS"),
)


def square_chain(square: Sequence[str], h: float = DEFAULT_H) -> CompositeMap:
    es = [edge(square[i], square[(i + 1) % 4]) for i in range(4)]
    return chain_along(es + [es[0]], h, f"Square[{','.join(square)}]", strict=False)


def square_probe(square: Sequence[str], t: float, h: float = DEFAULT_H) -> np.ndarray:
    """Point of the first out-section lying in the square's plane.

    ``t`` in (0, h) is the distance along the axis pointing back to the
    square's last corner; transverse coordinates are zero.
    """
    e0 = edge(square[0], square[1])
    sec = section(SectionId(e0, "out"), h)
    j, s = _direction(square[0], square[-1])
    z = np.zeros(4)
    z[sec.pin] = sec.pin_value
    z[j] = s * t
    return z


def invariant_square_identity(square: Sequence[str], p, h: float = DEFAULT_H, probe=None) -> float:
    """Relative deviation of the square's return map from the identity at ``probe``."""
    square = tuple(square)
    if square not in SQUARES:
        raise gc.DomainError(f"{square} is not an invariant square of the network")
    z0 = square_probe(square, 0.3 * h, h) if probe is None else np.asarray(probe, dtype=float)
    sec = section(SectionId(edge(square[0], square[1]), "out"), h)
    if not sec.contains(z0):
        raise gc.DomainError("probe is not on the square's first out-section")
    z1 = square_chain(square, h)(z0, p)
    return float(np.abs(z1 - z0).max() / np.abs(z0).max())


# --- quotient network ----------------------------------------------------------------

QUOTIENT_SECTIONS = {
    1: EdgeId("PP", "PS"),
    2: EdgeId("PS", "SS"),
    3: EdgeId("SP", "SR"),
    4: EdgeId("PS", "RS"),
    5: EdgeId("SP", "SS"),
    6: EdgeId("PP", "SP"),
}


def _quotient_index(e: EdgeId) -> tuple[int, int]:
    """(section number, m) with ``sigma^m(QUOTIENT_SECTIONS[n]) == e``."""
    for n, rep in QUOTIENT_SECTIONS.items():
        for m in (0, 1, 2):
            if sigma_edge(rep, m) == e:
                return n, m
    raise AssertionError(e)


def quotient_arrows() -> tuple[tuple[int, int], ...]:
    out = []
    for i, e in QUOTIENT_SECTIONS.items():
        for w in build_network().successors(e.dst):
            out.append((i, _quotient_index(edge(e.dst, w))[0]))
    return tuple(sorted(out))


@dataclass(frozen=True)
class QuotientMap(SectionMap):
    """Constant-free monomial map between two quotient sections.

    ``chain`` is the defining composition; ``inputs``/``outputs`` are the free
    axes at the two ends and ``exponents[r][c]`` is the power of input
    ``inputs[c]`` in output ``outputs[r]``.
    """

    i: int = 0
    j: int = 0
    chain: CompositeMap = None
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    exponents: sp.Matrix = field(default=None, compare=False)
    out_pin: int = 0

    def exponent_values(self, p) -> np.ndarray:
        return evaluate_matrix(self.exponents, gc.as_params(p).as_tuple())

    def __call__(self, s, p, strict: bool = True) -> np.ndarray:
        p = gc.as_params(p)
        _warn_if_degenerate(p)
        s = np.asarray(s, dtype=float)
        free = np.abs(s[list(self.inputs)])
        if np.any(free <= 0):
            raise gc.DomainError("quotient maps act on positive coordinates")
        E = self.exponent_values(p)
        out = np.empty(4)
        out[list(self.outputs)] = np.exp(E @ np.log(free))
        out[self.out_pin] = self.h
        return out

    def rescaling(self, p) -> dict[int, float]:
        """Log of the constants stripped from each output (the rescaling factors)."""
        lo = leading_order(self.chain, section(SectionId(QUOTIENT_SECTIONS[self.i], "out"), self.h))
        return lo.log_constants(p, self.h)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(
            arrow=[self.i, self.j],
            inputs=[k + 1 for k in self.inputs],
            outputs=[k + 1 for k in self.outputs],
            exponent_matrix=[[str(x) for x in row] for row in self.exponents.tolist()],
            chain=[f.name for f in self.chain.expand()],
        )
        return d


@lru_cache(maxsize=None)
def _quotient(i: int, j: int, h: float) -> QuotientMap:
    if (i, j) not in quotient_arrows():
        raise gc.DomainError(f"({i},{j}) is not an arrow of the quotient network")
    e = QUOTIENT_SECTIONS[i]
    nxt = next(edge(e.dst, w) for w in build_network().successors(e.dst) if _quotient_index(edge(e.dst, w))[0] == j)
    _, m = _quotient_index(nxt)
    factors = [local_map(e.src, None, e, h), transition_map(e, h), local_map(e.dst, e, nxt, h)]
    if m:
        factors.append(sigma_chart(nxt.src, -m if m == 1 else 1, h))
    chain = compose(factors, f"theta[{i}{j}]")
    start = section(SectionId(e, "out"), h)
    lo = LeadingOrder(start).apply(chain)
    target = section(SectionId(QUOTIENT_SECTIONS[j], "out"), h)
    outputs = tuple(target.free)
    assert set(lo.monomial_outputs) == set(outputs), (i, j, lo.monomial_outputs, outputs)
    E = lo.exponent_matrix(list(outputs))
    return QuotientMap("Quotient", f"theta[{i}{j}]", chain.src, chain.dst, h, i, j, chain,
                       start.free, outputs, E, target.pin)


def quotient_map(i: int, j: int, p=None, h: float = DEFAULT_H) -> QuotientMap:
    if p is not None:
        _warn_if_degenerate(gc.as_params(p))
    return _quotient(i, j, h)


# --- atlas dump ------------------------------------------------------------------------


def atlas(h: float = DEFAULT_H) -> dict:
    net = build_network()
    return {
        "h": h,
        "vertices": {
            v: {
                "location": eq.vertex_location(v).tolist(),
                "mac": eq.mac_matrix(v)[0].tolist(),
                "eigenvalues": [str(x) for x in eq.corner_eigenvalues_symbolic(v)],
            }
            for v in net.vertices
        },
        "edges": [str(e) for e in net.edges],
        "sections": [
            {"id": str(s), "chart": sc.chart, "pin_axis": sc.pin + 1, "pin_value": sc.pin_value, "half_width": h}
            for s in ALL_SECTIONS
            for sc in (section(s, h),)
        ],
        "local": [local_map(e.src, None, e, h).to_dict() for e in net.edges],
        "global": [global_map(e, h).to_dict() for e in net.edges],
        "transition": [transition_map(e, h).to_dict() for e in net.edges],
        "quotient": [quotient_map(i, j, h=h).to_dict() for i, j in quotient_arrows()],
        "cycles": {c: [str(e) for e in cycle_edges(c)] for c in CYCLES},
    }


def atlas_json(h: float = DEFAULT_H) -> str:
    return json.dumps(atlas(h), indent=1)
