"""Adaptive ODE propagation in any chart, with section events.

The stepper is scipy's DOP853 (explicit Runge-Kutta 8(5,3) with a 7th order
dense interpolant). Everything around it lives here: per-step renormalization
in the simplex chart, exact face snapping, event location with root polishing,
a time budget, batch propagation, and lossless serialization.

Charts are named by strings: ``"simplex"``, ``"reduced"``, ``"log"`` or
``"vertex:XY"`` for the affine eigen-chart centred at corner ``XY``.
"""

from __future__ import annotations

import csv
import json
import time as _time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from . import game_core as gc

CHARTS = ("simplex", "reduced", "log")
COMPONENTS = {
    "simplex": ("x1", "x2", "x3", "y1", "y2", "y3"),
    "reduced": ("x1", "x2", "y1", "y2"),
    "log": ("u1", "u2", "v1", "v2"),
}
EVENT_TOL = 1e-10


class IntegrationError(RuntimeError):
    """Step-size underflow or a non-finite state. Carries the partial result."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_step: float = 0.1
    max_time: float = 1e5
    order_hint: int = 8
    face_tol: float = 1e-14
    wall_time: float | None = None

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0.0 < v <= 1e-3:
                raise gc.DomainError(f"{name}={v!r} must lie in (0, 1e-3]")
        if not self.max_step > 0.0:
            raise gc.DomainError("max_step must be positive")
        if not self.max_time > 0.0:
            raise gc.DomainError("max_time must be positive")
        # order_hint is recorded only: DOP853 (order 8) is the scheme used
        if self.order_hint < 1:
            raise gc.DomainError("order_hint must be positive")

    def scaled(self, factor: float) -> "IntegratorConfig":
        return IntegratorConfig(
            rel_tol=self.rel_tol * factor,
            abs_tol=self.abs_tol * factor,
            max_step=self.max_step,
            max_time=self.max_time,
            order_hint=self.order_hint,
            face_tol=self.face_tol,
            wall_time=self.wall_time,
        )


DEFAULT_CONFIG = IntegratorConfig()


def _check_chart(chart: str) -> str:
    if chart in CHARTS:
        return chart
    if chart.startswith("vertex:"):
        from .equilibria import VERTICES

        if chart[7:] in VERTICES:
            return chart
    raise gc.DomainError(f"unknown chart {chart!r}")


def components(chart: str) -> tuple[str, ...]:
    chart = _check_chart(chart)
    if chart.startswith("vertex:"):
        return ("z1", "z2", "z3", "z4")
    return COMPONENTS[chart]


def chart_field(p, chart: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vector field of the replicator system expressed in ``chart``."""
    p = gc.as_params(p)
    chart = _check_chart(chart)
    if chart == "simplex":
        return lambda s: gc.field_simplex(p, s)
    if chart == "reduced":
        return lambda r: gc.field_reduced(p, r)
    if chart == "log":
        return lambda l: gc.field_log(p, l)
    idx, sign = vertex_axes(chart[7:])

    def f(z):
        s = _vertex_to_simplex(chart[7:], z)
        return gc.field_simplex(p, s)[..., idx] * sign

    return f


@lru_cache(maxsize=None)
def vertex_axes(v: str) -> tuple[np.ndarray, np.ndarray]:
    """Simplex index and sign of each corner-chart axis: ``z_j = sign_j * s[idx_j]``.

    Every axis of a corner chart measures one strategy share that vanishes at
    the corner, so the chart is a signed selection of simplex coordinates.
    Working with that selection avoids the cancellation in ``1 - x1 - x2``
    and keeps relative accuracy for coordinates far below machine epsilon.
    """
    from .equilibria import mac_matrix, vertex_location

    M, _ = mac_matrix(v)
    lin = gc._EMBED_LINEAR.astype(int) @ M
    base = gc.embed(vertex_location(v).astype(float))
    idx, sign = [], []
    for j in range(4):
        rows = [m for m in range(6) if base[m] == 0 and abs(lin[m, j]) == 1 and np.count_nonzero(lin[m]) == 1]
        assert len(rows) == 1, (v, j, rows)
        idx.append(rows[0])
        sign.append(int(lin[rows[0], j]))
    return np.array(idx), np.array(sign, dtype=float)


def _vertex_to_simplex(v: str, z: np.ndarray) -> np.ndarray:
    idx, sign = vertex_axes(v)
    z = np.asarray(z, dtype=float)
    s = np.empty(z.shape[:-1] + (6,))
    s[..., idx] = z * sign
    for block in (range(0, 3), range(3, 6)):
        big = [m for m in block if m not in idx]
        small = [m for m in block if m in idx]
        s[..., big[0]] = 1.0 - s[..., small].sum(axis=-1)
    return s


def to_chart(s_simplex, chart: str) -> np.ndarray:
    """Simplex-chart state(s) to ``chart``."""
    chart = _check_chart(chart)
    s = gc._vec(s_simplex)
    if chart == "simplex":
        return s.copy()
    if chart == "reduced":
        return gc.reduce(s)
    if chart == "log":
        return gc.to_log(s)
    idx, sign = vertex_axes(chart[7:])
    return s[..., idx] * sign


def from_chart(state, chart: str) -> np.ndarray:
    """State(s) in ``chart`` to the simplex chart."""
    chart = _check_chart(chart)
    z = gc._vec(state)
    if chart == "simplex":
        return z.copy()
    if chart == "reduced":
        return gc.embed(z)
    if chart == "log":
        return gc.from_log(z)
    return _vertex_to_simplex(chart[7:], z)


def _renormalize(s: np.ndarray, face_tol: float) -> np.ndarray:
    s = np.where(s < face_tol, 0.0, s)
    s[:3] /= s[:3].sum()
    s[3:] /= s[3:].sum()
    return s


@dataclass(frozen=True)
class SectionDef:
    """A codimension-one section ``{level(state) = 0}`` in a given chart.

    ``direction`` is +1 (level increasing), -1 (decreasing) or 0 (either).
    """

    name: str
    chart: str
    level: Callable[[np.ndarray], float] = field(compare=False)
    direction: int = 0

    def __post_init__(self):
        _check_chart(self.chart)
        if self.direction not in (-1, 0, 1):
            raise gc.DomainError("direction must be -1, 0 or +1")

    def accepts(self, g0: float, g1: float) -> bool:
        if g0 == 0.0 or np.sign(g0) == np.sign(g1):
            return False
        return self.direction == 0 or np.sign(g1 - g0) == self.direction


def _simplex_level(chart: str, fn: Callable[[np.ndarray], float]):
    if chart == "simplex":
        return fn
    return lambda z: fn(from_chart(z, chart))


def section_s1(chart: str = "reduced", direction: int = 0) -> SectionDef:
    """``x2 + y2 = 1``."""
    return SectionDef("S1", chart, _simplex_level(chart, lambda s: s[1] + s[4] - 1.0), direction)


def section_s2(chart: str = "reduced", direction: int = 0) -> SectionDef:
    """``x1 + y1 = 1``."""
    return SectionDef("S2", chart, _simplex_level(chart, lambda s: s[0] + s[3] - 1.0), direction)


def coordinate_section(chart: str, index: int, value: float, direction: int = 0) -> SectionDef:
    """``state[index] = value``; with a vertex chart this is a pinned section."""
    return SectionDef(
        f"{chart}[{index}]={value!r}", chart, lambda z: z[index] - value, direction
    )


@dataclass(frozen=True)
class Event:
    time: float
    section: str
    state: tuple[float, ...]


@dataclass(frozen=True)
class Trajectory:
    chart: str
    times: np.ndarray
    states: np.ndarray
    events: tuple[Event, ...] = ()
    complete: bool = True
    message: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.states, dtype=float)
        if x.ndim != 2 or x.shape[0] != t.shape[0]:
            raise ValueError("times and states disagree in length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)

    # backward runs are stored in ascending time, so their end state comes first
    @property
    def _end(self) -> int:
        return 0 if len(self.times) and self.times[0] < 0 else -1

    @property
    def final(self) -> np.ndarray:
        return self.states[self._end]

    @property
    def final_time(self) -> float:
        return float(self.times[self._end])

    def simplex_states(self) -> np.ndarray:
        return from_chart(self.states, self.chart)

    # Doubles are written with repr(), the shortest decimal string that
    # parses back to the same bits, so both formats round-trip exactly.
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t",) + components(self.chart))
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, chart: str | None = None) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if chart is None:
            names = tuple(header[1:])
            chart = next((c for c, n in COMPONENTS.items() if n == names), "vertex:PP")
        data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
        return cls(chart, data[:, 0], data[:, 1:])

    def to_dict(self) -> dict:
        return {
            "chart": self.chart,
            "components": list(components(self.chart)),
            "times": [float(t) for t in self.times],
            "states": [[float(v) for v in r] for r in self.states],
            "events": [
                {"time": e.time, "section": e.section, "state": list(e.state)}
                for e in self.events
            ],
            "complete": self.complete,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        states = np.array(d["states"], dtype=float).reshape(len(d["times"]), -1)
        events = tuple(Event(e["time"], e["section"], tuple(e["state"])) for e in d["events"])
        return cls(d["chart"], d["times"], states, events, d["complete"], d.get("message", ""))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "Trajectory":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _polish(g: Callable[[float], float], t0: float, t1: float) -> float:
    """Root of ``g`` in the bracket [t0, t1] (either order)."""
    a, b = min(t0, t1), max(t0, t1)
    r = brentq(g, a, b, xtol=4 * np.finfo(float).eps * max(1.0, abs(b)), rtol=8.9e-16, maxiter=200)
    # one secant step from the bracket side usually buys the last few digits
    gr = g(r)
    if abs(gr) > EVENT_TOL:
        h = 1e-9 * max(1.0, abs(r))
        d = (g(r + h) - g(r - h)) / (2 * h)
        if d != 0.0:
            r2 = min(max(r - gr / d, a), b)
            if abs(g(r2)) < abs(gr):
                r = r2
    return r


def propagate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    post_step: Callable[[np.ndarray], np.ndarray] | None = None,
    first_step: float | None = None,
) -> tuple[np.ndarray, float | None]:
    """Bare propagation from t0 to t1; returns the end state and last step.

    Used by routines that carry extra variables (tangent dynamics, batches).
    """
    if t1 == t0:
        return np.array(y0, dtype=float), first_step
    if first_step is not None:
        first_step = min(first_step, abs(t1 - t0))
    solver = DOP853(
        fun, t0, np.array(y0, dtype=float), t1,
        max_step=cfg.max_step, rtol=cfg.rel_tol, atol=cfg.abs_tol, first_step=first_step,
    )
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t!r}: {msg}", None)
        if post_step is not None:
            solver.y = post_step(solver.y)
            solver.f = solver.fun(solver.t, solver.y)
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError(f"non-finite state at t={solver.t!r}", None)
    return solver.y, solver.step_size


def integrate(
    p,
    s0,
    t_span: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    chart: str = "simplex",
    sections: Sequence[SectionDef] = (),
    t_eval: Sequence[float] | None = None,
    stop_after: int | None = None,
    record: bool = True,
) -> Trajectory:
    """Integrate from ``s0`` (given in ``chart``) for signed time ``t_span``.

    The trajectory stores every accepted step, or the values at ``t_eval``
    when given. Crossings of ``sections`` are located on the dense output and
    logged; ``stop_after`` ends the run after that many logged events.
    """
    chart = _check_chart(chart)
    p = gc.as_params(p)
    y0 = np.array(gc._vec(s0), dtype=float)
    if chart == "simplex":
        gc.SimplexState.from_vector(y0)
    if not np.all(np.isfinite(y0)):
        raise gc.DomainError("initial state must be finite")
    for sec in sections:
        if sec.chart != chart:
            raise gc.DomainError(f"section {sec.name} lives in chart {sec.chart}, not {chart}")

    f = chart_field(p, chart)
    fun = lambda t, y: f(y)
    t_end = float(t_span)
    truncated = abs(t_end) > cfg.max_time
    if truncated:
        t_end = np.sign(t_end) * cfg.max_time

    times, states, events = [0.0], [y0.copy()], []
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        order = np.argsort(np.sign(t_end or 1.0) * t_eval)
        t_eval = t_eval[order]
        times, states = [], []
        k_eval = 0
        while k_eval < len(t_eval) and t_eval[k_eval] == 0.0:
            times.append(0.0)
            states.append(y0.copy())
            k_eval += 1

    def build(complete: bool, message: str = "") -> Trajectory:
        if not times:
            return Trajectory(chart, np.zeros(0), np.zeros((0, y0.size)), tuple(events), complete, message)
        t = np.array(times)
        x = np.array(states)
        if t_end < 0:
            t, x = t[::-1], x[::-1]
        return Trajectory(chart, t, x, tuple(events), complete, message)

    if t_end == 0.0:
        return build(True)

    post = (lambda y: _renormalize(y, cfg.face_tol)) if chart == "simplex" else None
    solver = DOP853(fun, 0.0, y0, t_end, max_step=cfg.max_step, rtol=cfg.rel_tol, atol=cfg.abs_tol)
    levels = [sec.level(y0) for sec in sections]
    started = _time.monotonic()

    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(
                f"step size underflow at t={solver.t!r}: {msg}", build(False, msg)
            )
        if post is not None:
            solver.y = post(solver.y)
            solver.f = solver.fun(solver.t, solver.y)
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError(f"non-finite state at t={solver.t!r}", build(False, "non-finite"))

        dense = None
        t_prev, t_now = solver.t_old, solver.t
        if sections:
            dense = solver.dense_output()
            found = []
            for i, sec in enumerate(sections):
                g1 = sec.level(solver.y)
                if sec.accepts(levels[i], g1):
                    tr = _polish(lambda t: sec.level(dense(t)), t_prev, t_now)
                    yr = dense(tr)
                    if post is not None:
                        yr = post(yr.copy())
                    found.append((tr, sec.name, yr))
                levels[i] = g1
            found.sort(key=lambda e: e[0] * np.sign(t_end))
            for tr, name, yr in found:
                events.append(Event(float(tr), name, tuple(float(v) for v in yr)))
                if stop_after is not None and len(events) >= stop_after:
                    break
        if t_eval is not None:
            while k_eval < len(t_eval) and (t_eval[k_eval] - t_now) * np.sign(t_end) <= 0:
                if dense is None:
                    dense = solver.dense_output()
                ye = dense(t_eval[k_eval])
                if post is not None:
                    ye = post(ye.copy())
                times.append(float(t_eval[k_eval]))
                states.append(ye)
                k_eval += 1
        elif record:
            times.append(float(t_now))
            states.append(solver.y.copy())

        if stop_after is not None and len(events) >= stop_after:
            tr = events[stop_after - 1].time
            del events[stop_after:]
            if t_eval is None and record:
                times[-1], states[-1] = tr, np.array(events[-1].state)
            elif t_eval is None:
                times.append(float(tr))
                states.append(np.array(events[-1].state))
            return build(True, "stopped on event")
        if cfg.wall_time is not None and _time.monotonic() - started > cfg.wall_time:
            return build(False, "wall-clock budget exceeded")

    if not record and t_eval is None:
        times.append(float(solver.t))
        states.append(solver.y.copy())
    if truncated:
        return build(False, f"time budget {cfg.max_time} exceeded")
    if stop_after is not None and len(events) < stop_after:
        return build(False, f"only {len(events)} of {stop_after} crossings found")
    return build(True)


def poincare_map(
    p,
    s0,
    sec: SectionDef,
    n_crossings: int,
    direction: str = "forward",
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[list[np.ndarray], bool]:
    """First ``n_crossings`` hits of ``sec``; returns (states, complete)."""
    if n_crossings < 0:
        raise gc.DomainError("n_crossings must be non-negative")
    if n_crossings == 0:
        return [], True
    if direction not in ("forward", "backward"):
        raise gc.DomainError("direction must be 'forward' or 'backward'")
    span = cfg.max_time if direction == "forward" else -cfg.max_time
    tr = integrate(p, s0, span, cfg, chart=sec.chart, sections=(sec,), stop_after=n_crossings, record=False)
    return [np.array(e.state) for e in tr.events], tr.complete


def integrate_batch(
    p,
    states: np.ndarray,
    t_span: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    chart: str = "log",
    t_eval: Sequence[float] | None = None,
) -> np.ndarray:
    """Integrate many initial states together as one stacked system.

    Returns an array of shape (len(t_eval), N, d), or (N, d) for the end state.
    Step control is shared, so the error bound holds for every member.
    """
    chart = _check_chart(chart)
    if chart == "simplex":
        raise gc.DomainError("batch mode supports the reduced, log and vertex charts")
    X = np.array(states, dtype=float)
    n, d = X.shape
    f = chart_field(p, chart)
    fun = lambda t, y: f(y.reshape(n, d)).ravel()
    if t_eval is None:
        y, _ = propagate(fun, 0.0, X.ravel(), float(t_span), cfg)
        return y.reshape(n, d)
    out, t_prev, y, h = [], 0.0, X.ravel(), None
    for t in t_eval:
        y, h = propagate(fun, t_prev, y, float(t), cfg, first_step=h)
        out.append(y.reshape(n, d).copy())
        t_prev = float(t)
    return np.array(out)
