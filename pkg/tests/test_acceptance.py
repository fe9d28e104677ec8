"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
come; they are repeated in the terminal summary either way.
"""

import time
import warnings

import numpy as np
import pytest

from rspnet import equilibria as eq
from rspnet import game_core as gc
from rspnet import hetnet as hn
from rspnet import integrator as it
from rspnet import lyapunov as ly
from rspnet import stability as stab
from rspnet import switching as sw

from . import oracles
from ._report import report

warnings.filterwarnings("ignore", category=hn.NonLinearizableWarning)


def random_params(rng, n, cond=lambda ex, ey: True, lo=-0.99, hi=0.99):
    out = []
    while len(out) < n:
        ex, ey = rng.uniform(lo, hi, 2)
        if cond(ex, ey):
            out.append((float(ex), float(ey)))
    return out


def test_01_nash_eigenvalues():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for p in random_params(rng, 200):
        J = oracles.jacobian_reduced(p, np.full(4, 1 / 3))
        worst = max(worst, oracles.match_multiset(eq.nash_eigenvalues(p), np.linalg.eigvals(J)))
    dt = time.time() - t0
    ok = worst < 1e-10 and dt < 5
    assert report(1, ok, f"Nash spectra, 200 params: max error {worst:.2e} (< 1e-10), {dt:.1f} s (< 5 s)")


def test_02_hamiltonian_conservation():
    t0 = time.time()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(10):
        a = rng.uniform(0.05, 1.0, 6)
        s = np.r_[a[:3] / a[:3].sum(), a[3:] / a[3:].sum()]
        tr = it.integrate((0.5, -0.5), s, 1000.0)
        v = np.array([gc.hamiltonian_v(x) for x in tr.states])
        worst = max(worst, float(np.abs(v - v[0]).max()))
    dt = time.time() - t0
    ok = worst < 1e-8 and dt < 120
    assert report(2, ok, f"zero-sum V drift over t<=1000, 10 states: {worst:.2e} (< 1e-8), {dt:.1f} s (< 120 s)")


def test_03_corner_spectra():
    rng = np.random.default_rng(103)
    worst = 0.0
    for p in random_params(rng, 100):
        for v in eq.VERTICES:
            J = oracles.jacobian_reduced(p, oracles.VERTEX_REDUCED[v])
            worst = max(worst, oracles.match_multiset(eq.corner_eigenvalues(p, v), np.linalg.eigvals(J)))
    assert report(3, worst < 1e-10, f"corner spectra, 9 corners x 100 params: max error {worst:.2e} (< 1e-10)")


def test_04_invariant_squares():
    rng = np.random.default_rng(104)
    worst = 0.0
    for sq in hn.SQUARES:
        for _ in range(20):
            p = random_params(rng, 1, lambda a, b: abs(a - b) > 1e-3)[0]
            h = float(rng.choice([1e-2, 1e-3]))
            probe = hn.square_probe(sq, float(rng.uniform(0.05, 0.95)) * h, h)
            worst = max(worst, hn.invariant_square_identity(sq, p, h, probe))
    assert report(4, worst < 1e-12, f"6 squares x 20 draws: max relative residual {worst:.2e} (< 1e-12)")


def test_05_cycle_matrix_consistency():
    rng = np.random.default_rng(105)
    worst = 0.0
    for p in random_params(rng, 100, lambda a, b: abs(a - b) > 1e-3):
        for c in ("C0", "C2"):
            worst = max(worst, float(np.abs(stab.segment_matrix(c, p) - stab.cycle_matrix(c, p).matrix).max()))
    assert report(5, worst < 1e-12, f"segment exponents vs A_C0/A_C2, 100 params: max entry error {worst:.2e} (< 1e-12)")


def test_06_eigen_dichotomy_atlas():
    t0 = time.time()
    violations, labelled = 0, 0
    labels = set(stab.RegionLabel)
    for ex in stab.grid(0.05):
        for ey in stab.grid(0.05):
            lab = stab.classify_region((ex, ey))
            labelled += lab in labels
            # the dichotomy is stated for sums of either sign; the origin is on the equal-eps line too
            if lab == stab.RegionLabel.Boundary or abs(ex + ey) <= stab.TOL_REGION:
                continue
            e = stab.cycle_eigen("C0", (ex, ey))
            l1, m2 = e.eigenvalues[0].real, e.moduli[1]
            ok = (l1 > 1 > m2) if ex + ey < 0 else (l1 < 1 < m2)
            violations += not ok
    dt = time.time() - t0
    ok = violations == 0 and labelled == 39 * 39 and dt < 30
    assert report(6, ok, f"0.05 grid: {violations} C0 violations, {labelled}/1521 points with one label, {dt:.1f} s (< 30 s)")


def test_07_beta_tau():
    b = stab.beta_tau()
    assert report(7, abs(b - 0.915) <= 0.01, f"beta_tau = {b:.5f} (0.915 +- 0.01)")


def test_08_dwld_not_attainable():
    t0 = time.time()
    bad, undecided, n = [], [], 0
    for ex in stab.grid(0.1):
        for ey in stab.grid(0.1):
            for h in (1e-2, 1e-3, 1e-4):
                n += 1
                if sw.check_attainable(sw.DWLD_ITINERARY, (ex, ey), h).outcome != "NotAttainable":
                    bad.append((ex, ey, h))
                if h <= 1e-3 and not sw.dwld_inequality((ex, ey), h)[2]:
                    undecided.append((ex, ey, h))
    dt = time.time() - t0
    ok = not bad and not undecided and dt < 120
    assert report(8, ok, f"{n} (p, h) checks: {len(bad)} not NotAttainable, {len(undecided)} undecided, {dt:.1f} s (< 120 s)")


def test_09_strip_itinerary():
    rng = np.random.default_rng(109)
    ps = random_params(rng, 50, lambda a, b: a < 0)
    out = [sw.check_attainable(sw.STRIP_ITINERARY, p, 1e-3).outcome for p in ps]
    n = sum(o == "NotAttainable" for o in out)
    assert report(9, n == 50, f"seven-corner itinerary, 50 params in the strip: {n}/50 NotAttainable")


def _factor3(got, ref):
    return all(abs(r) / 3 <= abs(g) <= 3 * abs(r) for g, r in zip(got, ref))


def test_10_lyapunov_regressions():
    t0 = time.time()
    parts, ok = [], True
    for name, (p, s0, ref) in ly.BENCHMARKS.items():
        r = ly.lyapunov_spectrum(p, s0, 2000.0, field="printed")
        d = ly.lyapunov_spectrum(p, s0, 2000.0)
        signs = bool(np.array_equal(np.sign(r.exponents), np.sign(ref)))
        band = _factor3(r.exponents, ref)
        ok &= signs and band
        print(f"  {name}: printed-field {np.array2string(r.exponents, precision=4)} "
              f"derived-field {np.array2string(d.exponents, precision=4)} reference {ref}")
        parts.append(f"{name} signs={'ok' if signs else 'MISMATCH'} band={'ok' if band else 'OUT'}")
    z = ly.lyapunov_spectrum((0.5, -0.5), (0.3, -0.2, 0.5, 0.1), 2000.0)
    pair = max(abs(z.exponents[0] + z.exponents[3]), abs(z.exponents[1] + z.exponents[2]))
    ok &= pair < 1e-4
    parts.append(f"zero-sum pairing {pair:.1e} (< 1e-4)")
    rng = np.random.default_rng(110)
    sums = []
    for p in random_params(rng, 20, lambda a, b: abs(a + b) > 0.05 and abs(a - b) > 0.05, -0.95, 0.95):
        s0 = rng.uniform(-2, 2, 4)
        sums.append(ly.lyapunov_spectrum(p, s0, 2000.0).total)
    # the sum must be negative beyond rounding to count as dissipation
    n_diss = sum(s < -1e-10 for s in sums)
    ok &= n_diss == 20
    parts.append(f"dissipative {n_diss}/20 (max |sum| {max(map(abs, sums)):.1e})")
    dt = time.time() - t0
    ok &= dt < 900
    assert report(10, ok, "; ".join(parts) + f"; {dt:.0f} s (< 900 s)")


def test_11_c0_attraction():
    rng = np.random.default_rng(3)
    ps = random_params(rng, 5, lambda a, b: a + b < -0.3 and abs(a - b) > 0.02)
    rows, ok = [], True
    for p in ps:
        f = [stab.basin_fraction(p, "C0", r, 0.05, 64, seed=1).fraction for r in (1e-2, 5e-3, 2.5e-3)]
        good = f[0] <= f[1] <= f[2] and f[2] > 0.9
        ok &= good
        rows.append(f"({p[0]:.3f},{p[1]:.3f})->{'/'.join(f'{x:.2f}' for x in f)}")
    assert report(11, ok, "basin fractions at radii 1e-2/5e-3/2.5e-3: " + ", ".join(rows))


@pytest.mark.slow
def test_12_boundary_limit_sets():
    rng = np.random.default_rng(112)
    ps = random_params(rng, 20, lambda a, b: abs(a - b) > 0.02 and abs(a + b) > 0.02, -0.95, 0.95)
    misses = []
    for p in ps:
        for z in eq.Z_LABELS:
            for d, table in (("forward", eq.OMEGA_UNSTABLE_PLANE), ("backward", eq.ALPHA_STABLE_PLANE)):
                if eq.boundary_limit_check(p, f"Z{z}_{d}").plane != table[z]:
                    misses.append((p, z, d))
    assert report(12, not misses, f"20 params x 12 branches: {240 - len(misses)}/240 planes as tabulated")


def test_13_structural_counts():
    net = hn.build_network()
    counts = (len(net.vertices), len(net.edges), len(hn.ALL_SECTIONS), len(hn.quotient_arrows()))
    ok = counts == (9, 18, 36, 12) and net.sigma_is_automorphism()
    assert report(13, ok, f"vertices/edges/sections/arrows = {counts}, sigma automorphism: {net.sigma_is_automorphism()}")
