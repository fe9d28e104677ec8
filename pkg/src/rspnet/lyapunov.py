"""Lyapunov spectra by QR re-orthonormalisation in the log chart."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dc_field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from . import game_core as gc
from .integrator import DEFAULT_CONFIG, IntegratorConfig

ZERO_TOL = 5e-5
T_DEFAULT = 2000.0
TRACE_EVERY = 10.0
CONVERGENCE_WINDOW = 100.0
CONVERGENCE_RATE = 5e-6  # max drift of partial exponents per unit time


class LyapunovError(RuntimeError):
    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace


class SpectrumPattern(str, Enum):
    HAMILTONIAN_PAIR = "HamiltonianPair"
    ONE_ZERO_PAIR = "OneZeroPair"
    TWO_ZERO = "TwoZero"
    TWO_POSITIVE = "TwoPositive"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class LyapunovResult:
    exponents: np.ndarray
    t_final: float
    renorm_interval: float
    initial: gc.LogState
    p: gc.Params
    convergence_trace: np.ndarray = dc_field(repr=False)  # rows: t, then the four partial exponents
    field: str = "derived"

    @property
    def converged(self) -> bool:
        tr = self.convergence_trace
        late = tr[tr[:, 0] >= self.t_final - CONVERGENCE_WINDOW - 1e-9]
        if len(late) < 2:
            return False
        drift = np.max(np.abs(late[-1, 1:] - late[0, 1:])) / (late[-1, 0] - late[0, 0])
        return bool(drift < CONVERGENCE_RATE)

    @property
    def total(self) -> float:
        return float(self.exponents.sum())


FIELDS = ("derived", "printed")


def _rate_rows(eps: float, which: str):
    c1 = np.array([-(1 + eps), -(1 - eps), 2.0])
    if which == "derived":
        c2 = np.array([1 - eps, -2.0, 1 + eps])
    else:
        # second-rate row as it is commonly printed; it is not the log image
        # of the replicator field but it is the system behind the reference spectra
        c2 = np.array([-2.0, 1 - eps, 1 + eps])
    return c1, c2


def _variational(p: gc.Params, which: str = "derived"):
    if which not in FIELDS:
        raise gc.DomainError(f"field must be one of {FIELDS}")
    c1x, c2x = _rate_rows(p.eps_x, which)
    c1y, c2y = _rate_rows(p.eps_y, which)

    def block(c1, c2, w1, w2):
        m = max(0.0, w1, w2)
        a = np.array([math.exp(-m), math.exp(w1 - m), math.exp(w2 - m)])
        q = a / a.sum()
        r1, r2 = c1 @ q, c2 @ q
        return r1, r2, np.array([q[1:] * (c1[1:] - r1), q[1:] * (c2[1:] - r2)])

    def f(_t, y):
        u1, u2, v1, v2 = y[:4]
        du1, du2, jx = block(c1x, c2x, v1, v2)
        dv1, dv2, jy = block(c1y, c2y, u1, u2)
        Q = y[4:].reshape(4, 4)
        dQ = np.empty((4, 4))
        dQ[:2] = jx @ Q[2:]
        dQ[2:] = jy @ Q[:2]
        return np.concatenate([[du1, du2, dv1, dv2], dQ.ravel()])

    return f


def lyapunov_spectrum(p, s0, t_total: float = T_DEFAULT, renorm_interval: float = 1.0,
                      cfg: IntegratorConfig = DEFAULT_CONFIG, field: str = "derived") -> LyapunovResult:
    """Time-averaged log stretching of a QR-renormalised tangent frame.

    The base orbit and the frame are integrated together with the analytic
    log-chart Jacobian; the frame is reset to Q (of Q R) every
    ``renorm_interval`` time units and ``log |R_ii|`` accumulated.
    ``field='printed'`` swaps in the alternative second-rate row (see
    :func:`_rate_rows`); the default is the log image of the replicator field.

    The log-chart Jacobian is block off-diagonal, hence trace-free, so the
    exponents sum to zero up to rounding in this chart.
    """
    p = gc.as_params(p)
    l0 = gc._vec(s0).astype(float)
    init = gc.LogState.from_vector(l0)
    if not (t_total > 0 and renorm_interval > 0):
        raise gc.DomainError("t_total and renorm_interval must be positive")
    f = _variational(p, field)
    n = int(round(t_total / renorm_interval))
    if n < 1 or abs(n * renorm_interval - t_total) > 1e-9 * t_total:
        raise gc.DomainError("t_total must be a multiple of renorm_interval")
    every = max(1, int(round(TRACE_EVERY / renorm_interval)))
    y = np.concatenate([l0, np.eye(4).ravel()])
    sums = np.zeros(4)
    trace = [np.r_[0.0, sums]]
    t = 0.0
    rtol, atol = max(cfg.rel_tol, 1e-11), max(cfg.abs_tol, 1e-12)
    for k in range(1, n + 1):
        sol = solve_ivp(f, (t, t + renorm_interval), y, method="DOP853", rtol=rtol, atol=atol)
        t += renorm_interval
        yk = sol.y[:, -1]
        if not sol.success or not np.all(np.isfinite(yk)):
            raise LyapunovError(f"integration failed at t={t:g}: {sol.message}", np.array(trace))
        Q, R = np.linalg.qr(yk[4:].reshape(4, 4))
        d = np.abs(np.diag(R))
        if np.any(d == 0):
            raise LyapunovError(f"degenerate frame at t={t:g}", np.array(trace))
        sums += np.log(d)
        y = np.concatenate([yk[:4], Q.ravel()])
        if k % every == 0 or k == n:
            trace.append(np.r_[t, sums / t])
    return LyapunovResult(np.sort(sums / t)[::-1], t, renorm_interval, init, p, np.array(trace), field)


def classify_spectrum(r: LyapunovResult) -> SpectrumPattern:
    """Sign/size pattern of a converged spectrum; |l| < 5e-5 counts as zero."""
    if not r.converged:
        return SpectrumPattern.UNKNOWN
    l1, l2, l3, l4 = r.exponents
    zero = [abs(x) < ZERO_TOL for x in r.exponents]
    if r.p.zero_sum and abs(l1 + l4) < 1e-4 and abs(l2 + l3) < 1e-4:
        return SpectrumPattern.HAMILTONIAN_PAIR
    if l1 >= ZERO_TOL and l2 >= ZERO_TOL and l4 <= -ZERO_TOL:
        return SpectrumPattern.TWO_POSITIVE
    if l1 >= ZERO_TOL and zero[1] and zero[2] and l4 <= -ZERO_TOL:
        return SpectrumPattern.TWO_ZERO
    if l1 >= ZERO_TOL and zero[1] and l3 <= -ZERO_TOL:
        return SpectrumPattern.ONE_ZERO_PAIR
    return SpectrumPattern.UNKNOWN


# --- batch ---------------------------------------------------------------------------------


def _run(job):
    i, p, s0, t_total, dt, fld = job
    try:
        r = lyapunov_spectrum(p, s0, t_total, dt, field=fld)
    except (LyapunovError, gc.DomainError) as exc:
        return i, None, str(exc)
    return i, r, ""


def run_batch(jobs: list[dict], workers: int = 1, renorm_interval: float = 1.0, field: str = "derived"):
    """``jobs``: dicts with ``p``, ``s0`` and optional ``t_total``; results keep input order."""
    work = [(i, tuple(j["p"]), tuple(j["s0"]), float(j.get("t_total", T_DEFAULT)), renorm_interval,
             j.get("field", field))
            for i, j in enumerate(jobs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_run, work))
    else:
        out = [_run(w) for w in work]
    return sorted(out, key=lambda x: x[0])


def load_batch(path) -> list[dict]:
    with open(path) as fh:
        jobs = json.load(fh)
    if not isinstance(jobs, list):
        raise gc.DomainError("batch file must hold a JSON list")
    return jobs


def write_batch_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eps_x", "eps_y", "u1", "u2", "v1", "v2", "t_total",
                    "l1", "l2", "l3", "l4", "sum", "pattern", "converged", "error"])
        for i, r, err in results:
            if r is None:
                w.writerow([i] + [""] * 14 + [err])
                continue
            w.writerow([i, r.p.eps_x, r.p.eps_y, *(repr(float(x)) for x in r.initial.vector), r.t_final,
                        *(repr(float(x)) for x in r.exponents), repr(r.total), classify_spectrum(r).value, r.converged, ""])


BENCHMARKS = {
    "red": ((-0.8, -0.9), (-55.6888, 36.3836, -49.0596, -26.4498),
            (2.94135e-4, 2.2451e-5, -1.4441e-4, -1.99052e-4)),
    "white": ((0.7, -0.6), (6.755, -27.374, 58.7936, -12.1726),
              (1.69506e-3, 2.13178e-4, 1.20503e-5, -1.94714e-3)),
    "yellow": ((0.9, 0.4), (1.19127, -44.7834, 99.1464, 75.3413),
               (1.60342e-3, 1.19112e-4, -6.95594e-6, -1.74244e-3)),
}
