import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspnet import equilibria as eq
from rspnet import game_core as gc

from . import oracles

eps = st.floats(-0.97, 0.97)


@settings(max_examples=50, deadline=None)
@given(ex=eps, ey=eps)
def test_nash_eigenvalues_match_oracle_jacobian(ex, ey):
    J = oracles.jacobian_reduced((ex, ey), np.full(4, 1 / 3))
    assert oracles.match_multiset(eq.nash_eigenvalues((ex, ey)), np.linalg.eigvals(J)) < 1e-10


def test_nash_is_a_2_2_saddle_off_the_zero_sum_line():
    lam = eq.nash_eigenvalues((0.3, 0.1))
    assert (lam.real < 0).sum() == 2 and (lam.real > 0).sum() == 2


def test_nash_spectrum_is_imaginary_in_the_zero_sum_case():
    assert np.allclose(eq.nash_eigenvalues((0.5, -0.5)).real, 0.0, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(ex=eps, ey=eps, v=st.sampled_from(eq.VERTICES))
def test_corner_spectra_match_oracle(ex, ey, v):
    J = oracles.jacobian_reduced((ex, ey), oracles.VERTEX_REDUCED[v])
    assert oracles.match_multiset(eq.corner_eigenvalues((ex, ey), v), np.linalg.eigvals(J)) < 1e-10


@pytest.mark.parametrize("v", eq.VERTICES)
def test_corners_are_2_2_saddles(v):
    assert eq.corner_info((0.2, -0.4), v).signature == (2, 0, 2)


@pytest.mark.parametrize("v", eq.VERTICES)
def test_mac_frames_are_unimodular_inverses(v):
    M, Minv = eq.mac_matrix(v)
    assert np.array_equal(M @ Minv, np.eye(4, dtype=int))
    assert abs(round(np.linalg.det(M))) == 1


@pytest.mark.parametrize("v", eq.VERTICES)
def test_mac_columns_are_eigenvectors(v):
    p = (0.35, -0.6)
    info = eq.corner_info(p, v)
    assert info.residual(p) < 1e-12


@pytest.mark.parametrize("v", eq.VERTICES)
def test_sigma_orbits_of_corners(v):
    assert eq.sigma_vertex(v, 3) == v
    assert eq.quotient_class(eq.sigma_vertex(v)) == eq.quotient_class(v)


@pytest.mark.parametrize("z", eq.Z_LABELS)
def test_z_points_are_equilibria_with_listed_spectra(z):
    p = (0.45, -0.2)
    info = eq.z_equilibria(p)[z]
    assert np.abs(oracles.field_reduced(p, info.location)).max() < 1e-14
    J = oracles.jacobian_reduced(p, info.location)
    assert oracles.match_multiset(info.eigenvalues, np.linalg.eigvals(J)) < 1e-10


def test_nash_tangent_frames_span_invariant_planes():
    p = (0.6, -0.1)
    J = gc.jacobian_reduced(p, eq.NASH_REDUCED)
    w1, w2, w3, w4 = eq.nash_tangent_frames(p)
    assert eq.invariance_residual(J, (w1, w2)) < 1e-10
    assert eq.invariance_residual(J, (w3, w4)) < 1e-10


def test_nash_frames_undefined_at_zero_sum():
    with pytest.raises(gc.DomainError):
        eq.nash_tangent_frames((0.5, -0.5))


def test_newton_finds_nash_and_corners():
    found = eq.newton_equilibria((0.3, -0.45))
    assert np.min(np.linalg.norm(found - eq.NASH_REDUCED, axis=1)) < 1e-10
    for v in ("PP", "RS"):
        assert np.min(np.linalg.norm(found - eq.vertex_location(v), axis=1)) < 1e-10


@pytest.mark.slow
def test_limit_planes_at_one_parameter():
    p = (0.3, -0.6)
    for z in eq.Z_LABELS:
        assert eq.boundary_limit_check(p, f"Z{z}_backward").plane == eq.ALPHA_STABLE_PLANE[z]
        assert eq.boundary_limit_check(p, f"Z{z}_forward").plane == eq.OMEGA_UNSTABLE_PLANE[z]


def test_limit_table_for_za_zb():
    # the two assignments stated explicitly for the x1 = 0 face
    assert eq.OMEGA_UNSTABLE_PLANE["b"] == (1, 3)
    assert eq.ALPHA_STABLE_PLANE["a"] == (1, 2)


def test_heteroclinic_gap_at_the_near_connection_parameter():
    # frozen from an independent run with 2e4 points per branch (0.09095)
    assert eq.heteroclinic_gap((-0.09, -0.79)) == pytest.approx(0.0909, abs=2e-3)


def test_gap_needs_enough_points():
    with pytest.raises(gc.DomainError):
        eq.heteroclinic_gap((-0.09, -0.79), n_points=100)
