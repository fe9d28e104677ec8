import numpy as np
import pytest

from rspnet import game_core as gc
from rspnet import integrator as it

S0 = np.array([0.2, 0.3, 0.5, 0.4, 0.4, 0.2])


def test_nash_stays_put():
    tr = it.integrate((0.3, -0.2), gc.SimplexState.nash().vector, 10.0)
    assert np.abs(tr.states - tr.states[0]).max() < 1e-15


def test_zero_sum_run_conserves_v():
    tr = it.integrate((0.5, -0.5), S0, 200.0)
    v = np.array([gc.hamiltonian_v(s) for s in tr.states])
    assert np.abs(v - v[0]).max() < 1e-9


@pytest.mark.parametrize("chart", ["reduced", "log"])
def test_charts_agree_on_the_end_state(chart):
    p = (0.3, -0.6)
    ref = it.integrate(p, S0, 30.0).final
    tr = it.integrate(p, it.to_chart(S0, chart), 30.0, chart=chart)
    assert np.allclose(it.from_chart(tr.final, chart), ref, atol=1e-9)


def test_vertex_chart_round_trip():
    s = np.array([0.999, 0.0007, 0.0003, 0.998, 0.0011, 0.0009])
    for v in ("PP", "RS", "SR"):
        z = it.to_chart(s, "vertex:" + v)
        assert np.allclose(it.from_chart(z, "vertex:" + v), s, atol=1e-15)


def test_backward_then_forward_returns():
    p = (0.2, 0.1)
    fwd = it.integrate(p, S0, 15.0).final
    back = it.integrate(p, fwd, -15.0).final
    assert np.allclose(back, S0, atol=1e-9)


def test_t_eval_sampling():
    tr = it.integrate((0.2, 0.1), S0, 5.0, t_eval=[0.0, 1.0, 2.5, 5.0])
    assert np.allclose(tr.times, [0, 1, 2.5, 5])


def test_section_events_lie_on_the_section():
    sec = it.coordinate_section("reduced", 0, 1 / 3, direction=1)
    tr = it.integrate((0.5, -0.5), gc.reduce(S0), 200.0, chart="reduced", sections=[sec])
    assert len(tr.events) > 2
    for e in tr.events:
        assert abs(e.state[0] - 1 / 3) < 1e-10


def test_poincare_map_counts():
    sec = it.coordinate_section("reduced", 0, 1 / 3, direction=1)
    hits, complete = it.poincare_map((0.5, -0.5), gc.reduce(S0), sec, 3)
    assert complete and len(hits) == 3


def test_s1_s2_levels():
    s = np.array([0.2, 0.7, 0.1, 0.8, 0.3, -0.1])
    assert it.section_s1("simplex").level(s) == pytest.approx(0.0)
    assert it.section_s2("simplex").level(s) == pytest.approx(0.0)


def test_csv_round_trip_is_exact(tmp_path):
    tr = it.integrate((0.1, 0.4), S0, 3.0)
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    back = it.Trajectory.from_csv(path)
    assert np.array_equal(back.states, tr.states) and np.array_equal(back.times, tr.times)


def test_batch_matches_single_runs():
    p = (-0.3, 0.5)
    logs = gc.to_log(np.array([S0, gc.sigma(S0)]))
    out = it.integrate_batch(p, logs, 20.0)
    for i in range(2):
        single = it.integrate(p, logs[i], 20.0, chart="log").final
        assert np.allclose(out[i], single, atol=1e-8)


def test_config_validation():
    with pytest.raises(gc.DomainError):
        it.IntegratorConfig(rel_tol=0.0)
    with pytest.raises(gc.DomainError):
        it.IntegratorConfig(max_step=-1.0)


def test_simplex_chart_rejects_points_outside():
    with pytest.raises(gc.DomainError):
        it.integrate((0.1, 0.1), [0.5, 0.6, -0.1, 0.3, 0.3, 0.4], 1.0)
