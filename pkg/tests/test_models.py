import numpy as np
import pytest

from monotone_sme.errors import ConfigError, DomainError
from monotone_sme.models import (ZOO, adoption_fixed_point, check_feller, check_monotone, eval_map, get_model,
                                 make_adoption_diffusion, make_constant, make_decreasing, make_log_growth,
                                 make_threshold_jump)
from monotone_sme.moments import coordinate, MomentSpec


@pytest.mark.parametrize("s, eps, theta, expected", [
    (1.0, 0.5, 0.3, 1.8),
    (1.7, 0.3, 0.2, 7.2),
    (1.9, 0.2, 0.0, 7.1),
    (6.0, 0.0, 0.0, 10.0),
    (0.0, 0.0, 0.0, 0.0),
])
def test_threshold_hand_values(s, eps, theta, expected):
    out = eval_map(make_threshold_jump(), [s], [eps], [theta])
    assert out[0] == pytest.approx(expected, abs=1e-12)


def test_eval_rejects_points_outside_boxes():
    phi = make_threshold_jump()
    with pytest.raises(DomainError):
        eval_map(phi, [11.0], [0.0], [0.0])
    with pytest.raises(DomainError):
        eval_map(phi, [1.0], [0.0], [0.9])


def test_constant_map_ignores_inputs():
    phi = make_constant(0.25)
    assert eval_map(phi, [0.9], [0.3], [0.7])[0] == 0.25


def test_log_growth_fixed_point_at_zero_shock():
    phi = make_log_growth()
    alpha = 0.3
    x_star = np.log(alpha * 0.95) / (1 - alpha)
    out = eval_map(phi, [x_star], [0.0], [alpha, 0.1])
    assert out[0] == pytest.approx(x_star, abs=1e-12)


def test_adoption_deterministic_steady_state():
    phi = make_adoption_diffusion()
    lam = 0.2
    z, a = adoption_fixed_point(lam)
    out = eval_map(phi, [0.0, z, a], [0.0], [0.5, 0.1, lam])
    np.testing.assert_allclose(out, [0.0, z, a], rtol=1e-12)


def test_unknown_model_and_override():
    with pytest.raises(ConfigError):
        get_model("nope")
    assert get_model("threshold", upper=12.0).state_box.upper[0] == 12.0


@pytest.mark.parametrize("name", ["threshold", "log-growth", "adoption", "constant", "bistable"])
def test_zoo_maps_are_monotone(name):
    rep = check_monotone(ZOO[name](), 10_000, seed=0)
    assert rep.violations == 0


def test_decreasing_map_reports_witness():
    rep = check_monotone(make_decreasing(), 10_000, seed=0)
    assert rep.violations > 0
    w = rep.witness
    assert w["phi_low"][0] > w["phi_high"][0]
    assert np.all(np.array(w["s_high"]) >= np.array(w["s_low"]))


def test_feller_gaps_linear_in_step_for_log_growth():
    phi = make_log_growth()
    spec = MomentSpec((coordinate(0),))
    rep = check_feller(phi, spec, [0.3, 0.1], [-2.0], n_dirs=1, mc_draws=2000, seed=0, n_steps=8)
    np.testing.assert_allclose(rep.gaps, 0.3 * rep.steps, rtol=1e-9)


def test_feller_constant_map_is_zero():
    phi = make_constant()
    rep = check_feller(phi, MomentSpec((coordinate(0),)), [0.5], [0.5], mc_draws=100, n_steps=4)
    assert np.all(rep.gaps == 0)


def test_feller_threshold_gaps_decay():
    phi = make_threshold_jump()
    rep = check_feller(phi, MomentSpec((coordinate(0, scale=0.1),)), [0.0], [1.0], mc_draws=20_000, seed=1)
    assert rep.decays
    assert rep.gaps[-1] < rep.gaps[0]
