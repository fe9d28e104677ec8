import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspnet import game_core as gc
from rspnet import lyapunov as ly

S0 = (0.3, -0.2, 0.5, 0.1)
eps = st.floats(-0.95, 0.95)
logs = st.lists(st.floats(-6, 6), min_size=4, max_size=4)


@settings(max_examples=50, deadline=None)
@given(ex=eps, ey=eps, l=logs)
def test_variational_system_uses_the_log_field_and_its_jacobian(ex, ey, l):
    p = gc.Params(ex, ey)
    Q = np.random.default_rng(0).standard_normal((4, 4))
    out = ly._variational(p)(0.0, np.r_[l, Q.ravel()])
    assert np.allclose(out[:4], gc.field_log(p, np.array(l)), atol=1e-13)
    assert np.allclose(out[4:].reshape(4, 4), gc.jacobian_log(p, np.array(l)) @ Q, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(ex=eps, ey=eps, l=logs)
def test_log_jacobian_is_trace_free(ex, ey, l):
    assert abs(np.trace(gc.jacobian_log((ex, ey), np.array(l)))) < 1e-15


def test_printed_field_differs_only_in_the_second_rate_row():
    c1d, c2d = ly._rate_rows(0.3, "derived")
    c1p, c2p = ly._rate_rows(0.3, "printed")
    assert np.array_equal(c1d, c1p) and not np.array_equal(c2d, c2p)
    assert sorted(c2d) == sorted(c2p)


def test_exponents_at_nash_are_the_real_parts_of_its_spectrum():
    p = (0.4, -0.1)
    want = np.sort(np.linalg.eigvals(gc.jacobian_log(p, np.zeros(4))).real)[::-1]
    r = ly.lyapunov_spectrum(p, np.zeros(4), t_total=400.0)
    assert np.allclose(r.exponents, want, atol=2e-2)


def test_renormalisation_interval_does_not_matter():
    a = ly.lyapunov_spectrum((0.7, -0.6), S0, t_total=200.0, renorm_interval=1.0)
    b = ly.lyapunov_spectrum((0.7, -0.6), S0, t_total=200.0, renorm_interval=0.5)
    assert np.abs(a.exponents - b.exponents).max() < 1e-5


def test_zero_sum_spectrum_pairs_up():
    r = ly.lyapunov_spectrum((0.5, -0.5), S0, t_total=2000.0)
    l1, l2, l3, l4 = r.exponents
    assert abs(l1 + l4) < 1e-4 and abs(l2 + l3) < 1e-4
    assert abs(r.total) < 1e-10


def test_bad_intervals_are_rejected():
    with pytest.raises(gc.DomainError):
        ly.lyapunov_spectrum((0.1, 0.2), S0, t_total=10.0, renorm_interval=3.0)
    with pytest.raises(gc.DomainError):
        ly.lyapunov_spectrum((0.1, 0.2), S0, t_total=-1.0)
    with pytest.raises(gc.DomainError):
        ly.lyapunov_spectrum((0.1, 0.2), S0, t_total=10.0, field="other")


def fake(exps, p=(0.7, -0.6), drift=0.0):
    t = np.arange(0.0, 2001.0, 10.0)
    tr = np.column_stack([t] + [x + drift * t for x in exps])
    return ly.LyapunovResult(np.array(exps), 2000.0, 1.0, gc.LogState.from_vector(np.zeros(4)), gc.Params(*p), tr)


@pytest.mark.parametrize("exps,p,want", [
    ((3e-4, 2e-4, -2e-4, -3e-4), (0.5, -0.5), ly.SpectrumPattern.HAMILTONIAN_PAIR),
    ((1.7e-3, 2e-4, 1e-5, -1.9e-3), (0.7, -0.6), ly.SpectrumPattern.TWO_POSITIVE),
    ((1.6e-3, 1e-5, -7e-6, -1.7e-3), (0.9, 0.4), ly.SpectrumPattern.TWO_ZERO),
    ((2.9e-4, 2e-5, -1.4e-4, -2e-4), (-0.8, -0.9), ly.SpectrumPattern.ONE_ZERO_PAIR),
    ((-1e-3, -2e-3, -3e-3, -4e-3), (0.7, -0.6), ly.SpectrumPattern.UNKNOWN),
])
def test_spectrum_patterns(exps, p, want):
    assert ly.classify_spectrum(fake(exps, p)) == want


def test_unconverged_spectra_are_unknown():
    r = fake((1.7e-3, 2e-4, 1e-5, -1.9e-3), drift=1e-5)
    assert not r.converged
    assert ly.classify_spectrum(r) == ly.SpectrumPattern.UNKNOWN


def test_batch_keeps_order_and_reports_failures(tmp_path):
    jobs = [{"p": [0.7, -0.6], "s0": list(S0), "t_total": 20},
            {"p": [1.5, 0.0], "s0": list(S0), "t_total": 20},
            {"p": [0.9, 0.4], "s0": list(S0), "t_total": 20, "field": "printed"}]
    path = tmp_path / "jobs.json"
    path.write_text(json.dumps(jobs))
    res = ly.run_batch(ly.load_batch(path))
    assert [i for i, _, _ in res] == [0, 1, 2]
    assert res[1][1] is None and res[1][2]
    assert res[2][1].field == "printed"
    single = ly.lyapunov_spectrum((0.7, -0.6), S0, 20.0)
    assert np.array_equal(res[0][1].exponents, single.exponents)
    out = tmp_path / "out.csv"
    ly.write_batch_csv(res, out)
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3 and rows[1]["error"] and float(rows[0]["l1"]) == single.exponents[0]


def test_batch_file_must_be_a_list(tmp_path):
    path = tmp_path / "jobs.json"
    path.write_text("{}")
    with pytest.raises(gc.DomainError):
        ly.load_batch(path)
