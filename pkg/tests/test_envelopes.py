import numpy as np
import pytest

from monotone_sme.envelopes import (ShiftFamily, check_dominance, check_nesting, check_parameter_neighborhood,
                                    majorize, minorize)
from monotone_sme.errors import DomainError
from monotone_sme.models import ZOO, make_log_growth, make_threshold_jump
from monotone_sme.shocks import ShockStream


@pytest.mark.parametrize("name", ["threshold", "log-growth", "adoption", "constant", "bistable"])
@pytest.mark.parametrize("kappa", [0.4, 0.025])
def test_dominance_exact(name, kappa):
    rep = check_dominance(ZOO[name](), kappa, 5000, seed=1)
    assert rep.violations == 0


def test_zero_kappa_envelopes_equal_map():
    rep = check_dominance(make_threshold_jump(), 0.0, 2000, seed=0)
    assert rep.passed and rep.equal_everywhere


def test_negative_kappa_rejected():
    with pytest.raises(DomainError):
        check_dominance(make_threshold_jump(), -0.1, 10, seed=0)


def test_envelopes_stay_monotone():
    phi = make_threshold_jump()
    s = np.linspace(0, 10, 2001)[:, None]
    eps = np.full((2001, 1), 0.1)
    th = np.zeros((2001, 1))
    for env in (majorize(phi, 0.2), minorize(phi, 0.2)):
        assert np.all(np.diff(env.step(s, eps, th)[:, 0]) >= 0)


def test_log_growth_majorant_gap_formula():
    # projection never binds near the mean, so the majorant adds kappa (1 + alpha)
    phi = make_log_growth()
    s, eps, th = np.array([-1.8]), np.array([0.0]), np.array([0.3, 0.1])
    gap = majorize(phi, 0.1).step(s, eps, th) - phi.step(s, eps, th)
    assert gap[0] == pytest.approx(0.1 * 1.3, abs=1e-12)


def test_nesting_across_kappas():
    assert check_nesting(make_threshold_jump(), [0.4, 0.2, 0.1, 0.05, 0.025], 5000, seed=0) == 0


def test_neighborhood_center_always_passes():
    rep = check_parameter_neighborhood(make_threshold_jump(), [0.0], 0.2, 0.0, 5000, seed=0)
    assert rep.passed


def test_shift_family_matches_envelopes_bitwise():
    phi = make_log_growth()
    fam = ShiftFamily(phi, 0.4)
    u = ShockStream(3, 1).matrix(1000)
    rng = np.random.default_rng(0)
    s = rng.uniform(-6, 2, (1000, 1))
    th = phi.param_box.sample(rng, 1000)
    for kappa in (0.4, 0.1, 0.025):
        for env, sign in ((majorize(phi, kappa), 1.0), (minorize(phi, kappa), -1.0)):
            tagged = np.hstack([th, np.full((1000, 1), sign * kappa)])
            a = fam.step(s, fam.shock_spec.transform(u, tagged), tagged)
            b = env.step(s, env.shock_spec.transform(u, th), th)
            np.testing.assert_array_equal(a, b)
