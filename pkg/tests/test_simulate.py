import numpy as np
import pytest

from monotone_sme.errors import DomainError
from monotone_sme.models import ZOO, MarkovMap, make_constant, make_log_growth, make_threshold_jump
from monotone_sme.shocks import ShockSpec, ShockStream, degenerate
from monotone_sme.simulate import (order_violations, read_series_csv, run_chains, simulate_path, simulate_sandwich,
                                   write_path_csv)


def test_constant_path():
    phi = make_constant(0.3)
    p = simulate_path(phi, [0.9], ShockStream(0, 1), [0.5], 50)
    assert np.all(p.states == 0.3)


def test_threshold_degenerate_shock_stays_at_origin():
    base = make_threshold_jump()
    phi = MarkovMap("threshold-fixed", base.state_box, ShockSpec([degenerate(0.0)]), base.param_box, base.rule)
    p = simulate_path(phi, [0.0], ShockStream(0, 1), [0.0], 100)
    assert np.all(p.states == 0.0)


def test_path_reproducible_and_recursive():
    phi = make_threshold_jump()
    a = simulate_path(phi, [1.0], ShockStream(5, 1), [0.1], 500)
    b = simulate_path(phi, [1.0], ShockStream(5, 1), [0.1], 500)
    np.testing.assert_array_equal(a.states, b.states)
    eps = phi.shock_spec.transform(ShockStream(5, 1).matrix(500), np.array([0.1]))
    prev = np.vstack([[[1.0]], a.states[:-1]])
    np.testing.assert_array_equal(phi.step(prev, eps, np.array([0.1])), a.states)


def test_clamp_count_matches_recount():
    phi = make_threshold_jump()
    p = simulate_path(phi, [1.0], ShockStream(1, 1), [0.2], 2000)
    assert p.clamp_count > 0
    assert p.clamp_count == p.recount_clamps(phi)


def test_bad_inputs():
    phi = make_threshold_jump()
    with pytest.raises(DomainError):
        simulate_path(phi, [1.0], ShockStream(0, 1), [0.0], 0)
    with pytest.raises(DomainError):
        simulate_path(phi, [20.0], ShockStream(0, 1), [0.0], 10)
    with pytest.raises(DomainError):
        simulate_path(phi, [1.0], ShockStream(0, 1), [2.0], 10)


def test_sandwich_zero_kappa_identical():
    phi = make_threshold_jump()
    up, mid, down = simulate_sandwich(phi, 0.0, [1.0], ShockStream(2, 1), [0.0], [0.0], 1000)
    np.testing.assert_array_equal(up.states, mid.states)
    np.testing.assert_array_equal(down.states, mid.states)


@pytest.mark.parametrize("seed", range(5))
def test_sandwich_ordered(seed):
    phi = make_threshold_jump()
    up, mid, down = simulate_sandwich(phi, 0.2, [1.0], ShockStream(seed, 1), [0.0], [0.0], 10_000)
    assert order_violations(up.states, mid.states) == 0
    assert order_violations(mid.states, down.states) == 0


@pytest.mark.parametrize("name", ["threshold", "log-growth", "adoption"])
def test_corner_paths_stay_ordered(name):
    phi = ZOO[name]()
    box = phi.state_box
    st = ShockStream(9, phi.shock_spec.dim)
    th = phi.default_theta
    top = simulate_path(phi, box.upper, st, th, 2000)
    bottom = simulate_path(phi, box.lower, st, th, 2000)
    assert order_violations(top.states, bottom.states) == 0


def test_run_chains_matches_single_paths_and_prefix_means():
    phi = make_log_growth()
    thetas = np.array([[0.3, 0.1], [0.5, 0.2]])
    streams = [ShockStream(4, 1, r) for r in range(3)]
    res = run_chains(phi, thetas, [-2.0], streams, 3000, observe=lambda s: s, burn=100,
                     keep_states=True, checkpoints=(1000, 3000), keep_running=True, block=512)
    for m, th in enumerate(thetas):
        for r, st in enumerate(streams):
            p = simulate_path(phi, [-2.0], st, th, 3000)
            np.testing.assert_array_equal(res.states[:, m, r], p.states)
            np.testing.assert_allclose(res.means[m, r], p.states[100:].mean(axis=0), rtol=1e-12)
            np.testing.assert_allclose(res.prefix[0, m, r], p.states[100:1000].mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(res.running[-1], res.means, rtol=1e-12)
    assert res.running.shape == (2900, 2, 3, 1)


def test_path_csv_round_trip(tmp_path):
    phi = make_threshold_jump()
    p = simulate_path(phi, [1.0], ShockStream(0, 1), [0.0], 20)
    f = tmp_path / "path.csv"
    write_path_csv(p, f)
    header, rows = read_series_csv(f)
    assert f.read_text().splitlines()[0] == "n,s_1"
    assert header == ["s_1"]
    np.testing.assert_array_equal(rows, p.states)
