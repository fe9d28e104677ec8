import warnings
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspnet import game_core as gc
from rspnet import stability as stab

L = stab.RegionLabel


def a_c0(ex, ey):
    # typed in from the closed form, independent of the package's sympy matrix
    return np.array([
        [-(1 + ex) / 2, 0, (3 + ex**2) / 4],
        [1, 0, (1 - ex) / 2],
        [(1 - ey) / 2, 1, -(1 + ey) / 2 + (1 - ex) * (1 - ey) / 4],
    ])


def test_c0_matrix_at_the_origin():
    assert np.allclose(stab.cycle_matrix("C0", (0, 0)).matrix, [[-0.5, 0, 0.75], [1, 0, 0.5], [0.5, 1, -0.25]])


def test_c2_entry():
    assert stab.cycle_matrix("C2", (0.2, -0.6)).matrix[0, 1] == pytest.approx(2 / 1.6)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-0.95, 0.95), b=st.floats(-0.95, 0.95))
def test_c1_is_c2_with_rewards_swapped(a, b):
    assert np.allclose(stab.cycle_matrix("C1", (a, b)).matrix, stab.cycle_matrix("C2", (b, a)).matrix, atol=1e-15)


def test_c0_boundary_case_has_unit_eigenvalue():
    w = np.linalg.eigvals(a_c0(0.0, 0.0))
    assert np.min(np.abs(w - 1)) < 1e-9
    assert stab.cycle_eigen("C0", (0.0, 0.0)).eigenvalues[0].real == pytest.approx(1.0, abs=1e-9)


def test_c0_dichotomy_on_the_grid():
    g = stab.grid(0.05)
    bad = []
    for ex in g:
        for ey in g:
            s = ex + ey
            if abs(s) <= 1e-9:
                continue
            w = np.linalg.eigvals(a_c0(ex, ey))
            l1 = max(w[np.abs(w.imag) < 1e-12].real)
            m2 = np.abs(w[np.argsort(-np.abs(w - l1))[0]])
            ok = (l1 > 1 > m2) if s < 0 else (l1 < 1 < m2)
            e = stab.cycle_eigen("C0", (ex, ey))
            ok &= abs(e.eigenvalues[0].real - l1) < 1e-12
            if not ok:
                bad.append((ex, ey))
    assert bad == []


def test_eigenvectors_are_normalised():
    e = stab.cycle_eigen("C0", (0.3, -0.6))
    assert np.allclose(e.eigenvectors[2], 1.0)
    A = stab.cycle_matrix("C0", (0.3, -0.6)).matrix
    assert np.allclose(A @ e.eigenvectors, e.eigenvectors * e.eigenvalues, atol=1e-12)


def test_c2_spectrum_above_the_diagonal():
    w = stab.cycle_eigen("C2", (0.7, -0.6)).eigenvalues.real
    assert w[0] > 0 and -1 < w[1] < 0 and w[2] < -1


@pytest.mark.parametrize("p,label", [
    ((0.9, 0.4), L.Yellow),
    ((0.7, -0.6), L.White),
    ((0.5, -0.5), L.Line_ZeroSum),
    ((0.3, 0.3), L.Line_EqualEps),
    ((0.4, 0.9), L.Green),
    ((0.0, -1 / 3), L.BetaCurve),
])
def test_region_examples(p, label):
    assert stab.classify_region(p) == label


def test_region_partition_is_mirror_symmetric():
    rows = stab.region_atlas(0.05)
    assert len(rows) == 39 * 39
    lut = {(r["eps_x"], r["eps_y"]): r["label"] for r in rows}
    swap = {"Yellow": "Green", "Green": "Yellow"}
    for (x, y), lab in lut.items():
        assert lut[(y, x)] == swap.get(lab, lab)
    counts = Counter(lut.values())
    # frozen from this implementation's first full run, cross-checked by the mirror property above
    assert counts == {"White": 476, "Red": 474, "LightRed": 242, "Yellow": 122, "Green": 122,
                      "Line_EqualEps": 39, "Line_ZeroSum": 38, "Boundary": 4, "BetaCurve": 4}


def test_region_predicates_hold_where_labelled():
    for r in stab.region_atlas(0.1):
        p = (r["eps_x"], r["eps_y"])
        if r["label"] not in ("Yellow", "White", "Red", "LightRed"):
            continue
        m = stab.cycle_eigen("C2" if p[0] > p[1] else "C1", p).moduli
        l1, m2, m3 = m
        want = {"Yellow": l1 > max(1, m2, m3), "White": 1 < l1 < m3, "Red": m2 < l1 < 1, "LightRed": l1 < m2}
        assert want[r["label"]], (p, r["label"], m)


def test_beta_curve():
    assert stab.beta_curve(-1 / 3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(gc.DomainError):
        stab.beta_curve(0.0)


def test_beta_tau():
    assert stab.beta_tau() == pytest.approx(0.915, abs=0.01)


def test_ph_projection():
    assert np.allclose(stab.ph_project([1, 1, 1]), [1 / 3] * 3)
    assert np.allclose(stab.ph_project([2, 0, 0]), [1, 0, 0])
    u = np.array([0.3, 2.0, 1.1])
    assert np.allclose(stab.ph_project(stab.ph_project(u) * 7.5), stab.ph_project(u))
    with pytest.raises(gc.DomainError):
        stab.ph_project([1, -1, 0])


def test_yellow_projective_orbit_converges_to_v1():
    p = (0.9, 0.4)
    v1 = stab.ph_project(stab.cycle_eigen("C2", p).eigenvectors[:, 0].real)
    rng = np.random.default_rng(4)
    for _ in range(10):
        orb = stab.projective_orbit("C2", p, rng.uniform(0.1, 1.0, 3), 200)
        assert np.abs(orb.points[-1] - v1).max() < 1e-6
        assert orb.diverges_plus is not None


@pytest.mark.parametrize("t3", [0.05, -0.05])
def test_white_orbit_with_v3_component_leaves_h_plus_at_an_odd_step(t3):
    p = (0.7, -0.6)
    V = stab.cycle_eigen("C2", p).eigenvectors.real
    u0 = V[:, 0] + t3 * V[:, 2]
    assert stab.in_h_plus(stab.ph_project(u0))
    orb = stab.projective_orbit("C2", p, u0, 60)
    assert any(not stab.in_h_plus(orb.points[n]) for n in range(1, 61, 2))


def test_white_backward_orbit_in_the_v1_v3_plane_returns_to_v1():
    p = (0.7, -0.6)
    V = stab.cycle_eigen("C2", p).eigenvectors.real
    # |l2| < 1, so rounding seeds a v2 part that A^-1 amplifies; stop before it shows
    orb = stab.projective_orbit("C2", p, V[:, 0] + 0.3 * V[:, 2], 30, direction="backward")
    assert np.abs(orb.points[-1] - stab.ph_project(V[:, 0])).max() < 1e-4


def test_c0_orbit_diverges_when_sum_is_negative():
    p = (0.2, -0.7)
    v1 = stab.ph_project(stab.cycle_eigen("C0", p).eigenvectors[:, 0].real)
    orb = stab.projective_orbit("C0", p, [0.4, 0.7, 0.2], 400)
    assert orb.diverges_plus is not None
    assert np.abs(orb.points[-1] - v1).max() < 1e-6


@pytest.mark.parametrize("p,want", [
    ((0.9, 0.4), {"W^s(C2)": 4, "W^u(C0)": 4}),
    ((0.7, -0.6), {"W^s(C2)": 3, "W^u(C0)": 4}),
])
def test_manifold_dims(p, want):
    d = stab.manifold_dims(p)
    assert {k: d[k] for k in want} == want
    assert d["W^s(C1)"] is None


def test_manifold_dims_red_and_mirror():
    red = next((x, y) for x in np.arange(-0.9, 0.9, 0.05) for y in np.arange(-0.9, x, 0.05)
               if stab.classify_region((x, y)) == L.Red)
    d = stab.manifold_dims(red)
    assert d["W^u(C2)"] == 3 and d["W^s(C0)"] == 4
    assert stab.manifold_dims((0.4, 0.9))["W^s(C2)"] is None


def test_manifold_dims_reject_bifurcation_set():
    with pytest.raises(gc.DomainError):
        stab.manifold_dims((0.5, -0.5))


def test_distance_to_cycle_vanishes_on_edges():
    segs = stab.cycle_segments("C0")
    mids = segs.mean(axis=1)
    assert np.allclose(stab.distance_to_cycle("C0", mids), 0.0)


def test_ball_samples_are_reproducible_and_inside():
    a = stab.sample_ball(np.full(4, 0.2), 0.1, 50, 3)
    b = stab.sample_ball(np.full(4, 0.2), 0.1, 50, 3)
    assert np.array_equal(a, b)
    assert np.all(np.linalg.norm(a - 0.2, axis=1) <= 0.1)


def test_basin_rejects_empty_requests():
    with pytest.raises(gc.DomainError):
        stab.basin_fraction((-0.4, -0.5), "C0", 1e-2, 0.05, 0)


@pytest.mark.slow
def test_c2_basin_is_not_full_in_the_yellow_region():
    warnings.simplefilter("ignore")
    f = stab.basin_fraction((0.9, 0.4), "C2", 1e-2, 0.05, 32, seed=1).fraction
    assert f < 1.0
