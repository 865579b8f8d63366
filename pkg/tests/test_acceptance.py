"""End-to-end acceptance runs through the command-line interface.

Each test drives one criterion, prints a single PASS/FAIL line and records it
for the terminal summary. Every run writes a manifest into a session
directory; the last test replays all of them.
"""

import csv
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from monotone_sme.cli import main

MONOTONE_MODELS = ("threshold", "log-growth", "adoption", "constant", "bistable")


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def run_cli(workdir, name, command, cfg, *extra):
    """Run one CLI command with ``cfg`` written to a file; returns (exit code, seconds, output dir)."""
    cfg_file = workdir / f"{name}.json"
    cfg_file.write_text(json.dumps(cfg))
    out = workdir / name
    start = time.perf_counter()
    code = main([*command, "--config", str(cfg_file), "--out", str(out), *extra])
    return code, time.perf_counter() - start, out


def read_rows(file):
    with open(file, newline="") as fh:
        return list(csv.DictReader(fh))


def verdict_lines(out, study):
    return [l for l in (out / f"{study}_verdicts.txt").read_text().splitlines() if l[:4] in ("PASS", "FAIL")]


def record(log, number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    log.append(line)


def test_exact_dominance(workdir, acceptance_log):
    total, failed = 0.0, []
    for model in MONOTONE_MODELS:
        cfg = {"model": {"name": model}, "diagnostics": {"n_samples": 10_000,
                                                        "kappas": [0.4, 0.2, 0.1, 0.05, 0.025]}}
        code, secs, out = run_cli(workdir, f"c1_{model}", ["diagnose", "dominance"], cfg)
        total += secs
        if code != 0:
            failed.append(model)
    ok = not failed and total < 60
    record(acceptance_log, 1, ok, f"dominance violations-free on {len(MONOTONE_MODELS) - len(failed)}/"
                                  f"{len(MONOTONE_MODELS)} models over 5 kappas x 1e4 draws; {total:.1f} s (< 60)")
    assert ok, failed


def test_pathwise_sandwich(workdir, acceptance_log):
    cfg = {"model": {"name": "threshold"},
           "diagnostics": {"N": 10_000, "n_seeds": 10, "n_theta": 20, "kappa": 0.2, "radius": 0.1}}
    code, secs, out = run_cli(workdir, "c2", ["diagnose", "sandwich"], cfg)
    violations = sum(int(float(r["violations"])) for r in read_rows(out / "sandwich.csv"))
    ok = code == 0 and violations == 0 and secs < 120
    record(acceptance_log, 2, ok, f"{violations} ordering violations over 10 seeds x 20 thetas x N=1e4; "
                                  f"{secs:.1f} s (< 120)")
    assert ok, verdict_lines(out, "sandwich")


def test_monotone_coupling(workdir, acceptance_log):
    total, failed = 0.0, []
    for model in MONOTONE_MODELS:
        cfg = {"model": {"name": model}, "diagnostics": {"coupling_pairs": 1000, "coupling_steps": 1000}}
        code, secs, out = run_cli(workdir, f"c3_{model}", ["diagnose", "monotone"], cfg)
        total += secs
        if code != 0:
            failed.append(model)
    ok = not failed and total < 60
    record(acceptance_log, 3, ok, f"coupled paths ordered on {len(MONOTONE_MODELS) - len(failed)}/"
                                  f"{len(MONOTONE_MODELS)} models, 1e3 pairs x N=1e3; {total:.1f} s (< 60)")
    assert ok, failed


def test_log_growth_analytic_oracle(workdir, acceptance_log):
    cfg = {"model": {"name": "log-growth"},
           "simulate": {"theta": [0.3, 0.1], "N": 1_010_000, "burn": 10_000, "batches": 20}}
    code, secs, out = run_cli(workdir, "c4", ["simulate"], cfg)
    stats = {r["name"]: (float(r["value"]), float(r["std_error"])) for r in read_rows(out / "moments.csv")}
    mean_exact = math.log(0.3 * 0.95) / 0.7
    var_exact = 0.01 / 0.91
    (m, m_se), (v, v_se) = stats["mean"], stats["variance"]
    ok = code == 0 and abs(m - mean_exact) <= 4 * m_se and abs(v - var_exact) <= 4 * v_se and secs < 60
    record(acceptance_log, 4, ok, f"mean {m:.6f} vs {mean_exact:.6f} ({abs(m - mean_exact) / m_se:.2f} SE), "
                                  f"variance {v:.6f} vs {var_exact:.6f} ({abs(v - var_exact) / v_se:.2f} SE); "
                                  f"{secs:.1f} s (< 60)")
    assert ok


def test_envelope_moment_gap(workdir, acceptance_log):
    cfg = {"model": {"name": "threshold"}, "diagnostics": {"kappas": [0.4, 0.2, 0.1, 0.05, 0.025]}}
    code, secs, out = run_cli(workdir, "c5", ["diagnose", "envelope-continuity"], cfg)
    rows = read_rows(out / "envelope-continuity.csv")
    gaps = {float(r["kappa"]): float(r["gap"]) for r in rows if r["kappa"] not in ("", "nan")}
    ok = code == 0 and secs < 300
    record(acceptance_log, 5, ok, f"g(0.025)={gaps.get(0.025, float('nan')):.4g} (<= 0.02), trend over "
                                  f"{len(gaps)} kappas; {secs:.1f} s (< 300)")
    assert ok, verdict_lines(out, "envelope-continuity")


def test_uniform_law_of_large_numbers(workdir, acceptance_log):
    cfg = {"model": {"name": "threshold"},
           "diagnostics": {"grid_points": 21, "N_ladder": [2 ** j for j in range(10, 19)]}}
    code, secs, out = run_cli(workdir, "c6", ["diagnose", "ulln"], cfg)
    lines = verdict_lines(out, "ulln")
    ok = code == 0 and secs < 600
    record(acceptance_log, 6, ok, f"{'; '.join(lines)}; {secs:.1f} s (< 600)")
    assert ok, lines


N_LADDER = [4096, 8192, 16384, 32768, 65536, 100_000, 131_072]


def test_estimator_consistency(workdir, acceptance_log):
    total, parts, ok = 0.0, [], True
    for model, theta0 in (("threshold", [0.1]), ("log-growth", [0.3, 0.1])):
        cfg = {"model": {"name": model}, "estimation": {"N": N_LADDER, "data": {"theta0": theta0}}}
        code, secs, out = run_cli(workdir, f"c7_{model}", ["estimate"], cfg)
        total += secs
        rows = {int(r["N"]): r for r in read_rows(out / "results.csv")}
        theta = np.array([float(rows[100_000][f"theta_{i + 1}"]) for i in range(len(theta0))])
        err = np.abs(theta - theta0)
        slope = json.loads((out / "manifest.json").read_text())["error_slope"]
        # a flat error sequence gives a slope of zero up to rounding
        good = code == 0 and bool(np.all(err <= 0.02)) and slope <= 1e-9
        ok &= good
        parts.append(f"{model} |err| at N=1e5 {np.round(err, 5).tolist()} (<= 0.02), log-log error slope "
                     f"{slope:.3g} (<= 0)")
    ok &= total < 900
    record(acceptance_log, 7, ok, f"{'; '.join(parts)}; {total:.1f} s (< 900)")
    assert ok


def test_interpolant_study(workdir, acceptance_log):
    cfg = {"model": {"name": "threshold"}, "estimation": {"data": {"theta0": [0.1]}},
           "diagnostics": {"resolutions": [9, 17, 33, 65, 129]}}
    code, secs, out = run_cli(workdir, "c8", ["approx-study"], cfg)
    rows = read_rows(out / "study.csv")
    se = json.loads((out / "manifest.json").read_text())["d_std_errors"]
    d = [float(r["d_j"]) for r in rows]
    err = [float(r["err"]) for r in rows]
    improving = all(b <= 0.75 * a + 2 * math.hypot(sa, sb) for a, b, sa, sb in zip(d, d[1:], se, se[1:]))
    nonincreasing = all(b <= a for a, b in zip(err, err[1:]))
    ok = code == 0 and improving and nonincreasing and err[-1] <= 0.05 and secs < 900
    record(acceptance_log, 8, ok, f"d_j {np.round(d, 4).tolist()} (each <= 75% of previous: {improving}), "
                                  f"|theta_j - theta0| {np.round(err, 4).tolist()} (nonincreasing: "
                                  f"{nonincreasing}, final <= 0.05); {secs:.1f} s (< 900)")
    assert ok


def test_volatility_preset(workdir, acceptance_log):
    # hand evaluation: 1.58^2/0.0091 + 1.85^2/0.0035 + 26.07^2/0.0315
    hand = 2.4964 / 0.0091 + 3.4225 / 0.0035 + 679.6449 / 0.0315
    values = []
    for name, sigmas in (("c9_inputs", [10.44, 1.46, 5.34]), ("c9_data", [8.86, 3.31, 31.41])):
        cfg = {"estimation": {"distance": {"preset": "volatility", "sigmas": sigmas}}}
        code, _, out = run_cli(workdir, name, ["estimate"], cfg)
        assert code == 0
        values.append(float(read_rows(out / "preset.csv")[0]["objective"]))
    ok = math.isclose(values[0], hand, rel_tol=1e-9) and values[1] == 0.0
    record(acceptance_log, 9, ok, f"objective {values[0]:.6f} vs hand {hand:.6f}; data triple gives {values[1]}")
    assert ok


def test_replay_reproduces_every_run(workdir, acceptance_log):
    manifests = sorted(p for p in workdir.glob("*/manifest.json") if not p.parent.name.startswith("replay_"))
    mismatched = []
    for m in manifests:
        out = workdir / f"replay_{m.parent.name}"
        main(["replay", str(m), "--out", str(out), "--no-check"])
        for name in json.loads(m.read_text())["files"]:
            if (m.parent / name).read_bytes() != (out / name).read_bytes():
                mismatched.append(f"{m.parent.name}/{name}")
    ok = bool(manifests) and not mismatched
    record(acceptance_log, 10, ok, f"{len(manifests)} manifests replayed, byte mismatches: {mismatched or 'none'}")
    assert ok
