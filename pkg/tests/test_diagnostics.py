import numpy as np
import pytest

from monotone_sme.diagnostics import (StudyReport, approx_study, coupling_violations, dominance_study,
                                      monotone_study, neighborhood_thetas, sandwich_study, uniqueness_study)
from monotone_sme.estimator import OracleConfig
from monotone_sme.models import make_bistable, make_constant, make_decreasing, make_log_growth, make_threshold_jump
from monotone_sme.moments import scaled_level_spec


def test_report_requires_cited_rows(tmp_path):
    rep = StudyReport("demo", {}, ("a", "b"))
    i = rep.add_row(1, 0.5)
    with pytest.raises(ValueError):
        rep.judge("x", True, 0.0, 1.0, [3])
    rep.judge("x", True, 0.0, 1.0, i)
    rep.judge("y", False, 2.0, 1.0, i)
    assert rep.exit_code == 1
    files = rep.write(tmp_path)
    assert (tmp_path / "demo.csv").read_text() == "a,b\n1,0.5\n"
    text = files[1].read_text()
    assert "PASS x" in text and "FAIL y" in text and "overall: FAIL" in text


def test_dominance_study_passes_on_threshold():
    rep = dominance_study(make_threshold_jump(), n_samples=2000)
    assert rep.passed and rep.exit_code == 0


def test_monotone_study_flags_decreasing_map():
    rep = monotone_study(make_decreasing(), n_pairs=2000, coupling_pairs=50, coupling_steps=50)
    assert rep.exit_code != 0
    assert rep.extra.get("witness") or any("witness" in str(r) for r in rep.rows)


def test_coupling_violations_zero_for_monotone_map():
    violations, _ = coupling_violations(make_threshold_jump(), 100, 200, seed=0)
    assert violations == 0


def test_approx_study_affine_rows_zero():
    # away from the box faces the clamp never binds and the map is affine in the state
    rep = approx_study(make_log_growth(), [[0.3, 0.1]], resolutions=(9, 17, 33), mc_draws=500)
    assert rep.passed
    assert np.all(rep.column("d_j") < 1e-12)


def test_neighborhood_thetas_start_at_center():
    phi = make_threshold_jump()
    th = neighborhood_thetas(phi, np.array([0.0]), 0.1, 5, np.random.default_rng(0))
    assert th[0][0] == 0.0
    assert np.all(np.abs(th) <= 0.1)


def test_sandwich_study_small():
    phi = make_threshold_jump()
    rep = sandwich_study(phi, np.array([0.0]), [0.2], 0.1, 2000, 2, scaled_level_spec(0.1), n_theta=4)
    assert rep.passed


def test_uniqueness_flags_bistable_and_accepts_constant():
    oracle = OracleConfig(20_000, 1000, 2, seed=0)
    spec = scaled_level_spec(1.0)
    assert not uniqueness_study(make_bistable(), [[0.0]], spec, oracle).passed
    assert uniqueness_study(make_constant(), [[0.5]], spec, oracle).passed
