import numpy as np
import pytest

from monotone_sme.approx import InterpolantFamily, approx_error_curve, build_interpolant
from monotone_sme.errors import GridTooLarge
from monotone_sme.models import make_adoption_diffusion, make_log_growth, make_threshold_jump
from monotone_sme.shocks import ShockStream
from monotone_sme.state_space import lattice_grid


def test_node_exactness():
    phi = make_threshold_jump()
    interp = build_interpolant(phi, 9)
    nodes = lattice_grid(phi.state_box, 9)
    eps = np.linspace(-1, 1, len(nodes))[:, None]
    th = np.full((len(nodes), 1), 0.1)
    np.testing.assert_array_equal(interp.step(nodes, eps, th), phi.step(nodes, eps, th))


def test_affine_reproduction():
    phi = make_log_growth()
    interp = build_interpolant(phi, 5)
    s = np.linspace(-6, 2, 1001)[:, None]
    eps = np.full((1001, 1), 0.05)
    th = np.tile([0.4, 0.1], (1001, 1))
    np.testing.assert_allclose(interp.step(s, eps, th), phi.step(s, eps, th), atol=1e-13)


def test_interpolant_monotone_in_state():
    phi = make_threshold_jump()
    interp = build_interpolant(phi, 9)
    s = np.linspace(0, 10, 5001)[:, None]
    for e in (-0.7, 0.0, 0.4):
        out = interp.step(s, np.full((5001, 1), e), np.zeros((5001, 1)))
        assert np.all(np.diff(out[:, 0]) >= 0)


def test_grid_cap():
    with pytest.raises(GridTooLarge):
        build_interpolant(make_adoption_diffusion(), 100)
    with pytest.raises(ValueError):
        build_interpolant(make_threshold_jump(), 1)


@pytest.mark.parametrize("make", [make_threshold_jump, make_log_growth])
def test_family_matches_interpolants_bitwise(make):
    phi = make()
    res = (5, 9, 17)
    fam = InterpolantFamily(phi, res)
    rng = np.random.default_rng(0)
    box = phi.state_box
    s = box.lower + rng.random((3000, 1)) * box.width
    s[:17, 0] = np.linspace(box.lower[0], box.upper[0], 17)  # exact nodes
    th = phi.param_box.sample(rng, 3000)
    eps = phi.shock_spec.transform(ShockStream(0, 1).matrix(3000), th)
    for r, n in enumerate(res):
        tagged = np.hstack([th, np.full((3000, 1), float(r))])
        np.testing.assert_array_equal(fam.step(s, eps, tagged), build_interpolant(phi, n).step(s, eps, th))


def test_error_curve_affine_zero_and_threshold_decreasing():
    zero = approx_error_curve(make_log_growth(), [[0.3, 0.1]], [5, 9], mc_draws=500)
    assert all(r.d < 1e-12 for r in zero)
    rows = approx_error_curve(make_threshold_jump(), [[0.0]], [9, 17, 33], mc_draws=5000)
    d = [r.d for r in rows]
    assert d[0] > d[1] > d[2] > 0
