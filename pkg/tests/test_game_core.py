import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspnet import game_core as gc

from . import oracles

eps = st.floats(-0.99, 0.99)


@st.composite
def interior(draw):
    a = np.array([draw(st.floats(0.01, 1.0)) for _ in range(6)])
    return np.concatenate([a[:3] / a[:3].sum(), a[3:] / a[3:].sum()])


def test_tie_matrix_entries():
    A = gc.tie_matrix(0.3)
    d, w, l = 0.2, 0.9, -1.1
    assert np.allclose(A, [[d, w, l], [l, d, w], [w, l, d]])


@pytest.mark.parametrize("bad", [1.0, -1.0, 1.5, float("nan")])
def test_params_reject_out_of_range(bad):
    with pytest.raises(gc.DomainError):
        gc.Params(bad, 0.0)


@settings(max_examples=60, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_field_matches_sympy_oracle(ex, ey, s):
    got = gc.field_reduced((ex, ey), gc.reduce(s))
    assert np.allclose(got, oracles.field_reduced((ex, ey), gc.reduce(s)), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_field_is_tangent_to_the_simplices(ex, ey, s):
    f = gc.field_simplex((ex, ey), s)
    assert abs(f[:3].sum()) < 1e-15 and abs(f[3:].sum()) < 1e-15


@settings(max_examples=40, deadline=None)
@given(ex=eps, ey=eps, s=interior(), i=st.integers(0, 5))
def test_faces_are_invariant(ex, ey, s, i):
    s = s.copy()
    s[i] = 0.0
    blk = slice(0, 3) if i < 3 else slice(3, 6)
    s[blk] /= s[blk].sum()
    assert gc.field_simplex((ex, ey), s)[i] == 0.0


@settings(max_examples=60, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_sigma_equivariance(ex, ey, s):
    p = (ex, ey)
    assert np.allclose(gc.field_simplex(p, gc.sigma(s)), gc.sigma(gc.field_simplex(p, s)), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_log_field_is_the_chain_rule_image(ex, ey, s):
    f = gc.field_simplex((ex, ey), s)
    x, y = s[:3], s[3:]
    dx, dy = f[:3], f[3:]
    expect = [dx[1] / x[1] - dx[0] / x[0], dx[2] / x[2] - dx[0] / x[0],
              dy[1] / y[1] - dy[0] / y[0], dy[2] / y[2] - dy[0] / y[0]]
    assert np.allclose(gc.field_log((ex, ey), gc.to_log(s)), expect, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_log_jacobian_against_central_differences(ex, ey, s):
    l = gc.to_log(s)
    J = gc.jacobian_log((ex, ey), l)
    d = 1e-6
    num = np.column_stack([(gc.field_log((ex, ey), l + d * e) - gc.field_log((ex, ey), l - d * e)) / (2 * d)
                           for e in np.eye(4)])
    assert np.allclose(J, num, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(ex=eps, ey=eps, s=interior())
def test_reduced_jacobian_matches_oracle(ex, ey, s):
    r = gc.reduce(s)
    assert np.allclose(gc.jacobian_reduced((ex, ey), r), oracles.jacobian_reduced((ex, ey), r), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(s=interior())
def test_log_chart_round_trip(s):
    assert np.allclose(gc.from_log(gc.to_log(s)), s, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(e=eps, s=interior())
def test_v_is_constant_along_zero_sum_field(e, s):
    f = gc.field_simplex((e, -e), s)
    assert abs(np.sum(f / s) / 3.0) < 1e-13


def test_nash_is_an_equilibrium():
    assert np.allclose(gc.field_simplex((0.4, -0.7), gc.SimplexState.nash().vector), 0.0, atol=1e-16)


def test_v_maximum_at_nash():
    assert gc.hamiltonian_v(gc.SimplexState.nash().vector) == pytest.approx(gc.NASH_V, abs=1e-15)
