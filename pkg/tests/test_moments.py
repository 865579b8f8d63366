import numpy as np
import pytest

from monotone_sme.errors import ConfigError, DomainError
from monotone_sme.models import make_log_growth, make_threshold_jump
from monotone_sme.approx import build_interpolant
from monotone_sme.moments import (Derived, MomentSpec, coordinate, map_distance, mean_variance_spec,
                                  oracle_expectation, path_statistics, power, sample_moments, scaled_level_spec)
from monotone_sme.state_space import lattice_grid


def test_mean_variance_statistics():
    spec = mean_variance_spec(shift=-6.0)
    x = np.array([[-2.0], [-1.0], [0.0], [1.0]])
    stats = spec.statistics(spec.evaluate(x).mean(axis=0))
    assert spec.statistic_names == ["mean", "m2", "variance", "sd"]
    assert stats[0] == pytest.approx(-0.5)
    assert stats[2] == pytest.approx(1.25)
    assert stats[3] == pytest.approx(np.sqrt(1.25))


def test_spec_round_trip():
    spec = mean_variance_spec(shift=-6.0)
    assert MomentSpec.from_dict(spec.to_dict()) == spec


def test_spec_validation():
    with pytest.raises(ConfigError):
        MomentSpec((coordinate(0, name="a"), coordinate(0, name="a")))
    with pytest.raises(ConfigError):
        MomentSpec((coordinate(0),), (0,), (Derived("v", "variance", ("s1", "missing")),))
    with pytest.raises(ConfigError):
        coordinate(0, scale=-1.0)


def test_primitives_increasing_on_box():
    box = make_log_growth().state_box
    assert mean_variance_spec(shift=-6.0).check_increasing(box) == 0
    bad = MomentSpec((power(0, 2, 0.0),))
    assert bad.check_increasing(box) > 0


def test_sample_moments_burn_window():
    spec = scaled_level_spec(0.1)
    mv = sample_moments(np.arange(10.0), spec, burn=5)
    assert mv.values[0] == pytest.approx(0.7)
    with pytest.raises(DomainError):
        sample_moments(np.arange(10.0), spec, burn=10)


def test_path_statistics_batch_error():
    spec = scaled_level_spec(1.0)
    vals = np.random.default_rng(0).normal(size=(40_000, 1))
    stats, se = path_statistics(vals, spec, 20)
    assert abs(stats[0]) < 4 * se[0]
    assert se[0] == pytest.approx(1 / 200, rel=0.5)


def test_log_growth_oracle_frozen():
    phi = make_log_growth()
    mv = oracle_expectation(phi, [0.3, 0.1], mean_variance_spec(shift=-6.0), n_oracle=100_000, burn=1000,
                            R=4, seed=0)
    mean = np.log(0.285) / 0.7
    assert abs(mv.values[0] - mean) < 4 * mv.std_errors[0] + 1e-3
    assert mv.spread[0] < 0.01


def test_map_distance_self_is_zero():
    phi = make_threshold_jump()
    r = map_distance(phi, phi, [0.0], lattice_grid(phi.state_box, 11), mc_draws=100)
    assert r.value == 0.0


def test_map_distance_positive_for_interpolant():
    phi = make_threshold_jump()
    r = map_distance(phi, build_interpolant(phi, 9), [0.0], lattice_grid(phi.state_box, 101), mc_draws=2000)
    assert r.value > 0
