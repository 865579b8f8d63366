"""Command-line entry points.

Every command writes its outputs plus ``manifest.json`` into the output
directory. The manifest holds the normalized config, the command arguments
and a SHA-256 checksum per output file; ``replay`` re-runs a manifest and
compares checksums.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .approx import approx_error_curve, approx_estimation_study
from .diagnostics import (STUDY_IDS, StudyReport, approx_study, dominance_study, envelope_continuity_study,
                          feller_study, monotone_study, neighborhood_study, sandwich_study, ulln_study,
                          uniqueness_study)
from .errors import ConfigError, SMEError
from .estimator import DataSeries, bootstrap_weights, consistency_study, volatility_objective_preset
from .moments import path_statistics
from .shocks import ShockStream
from .simulate import format_float, path_manifest, read_series_csv, simulate_path, write_path_csv

COMMANDS = ("simulate", "estimate", "diagnose", "approx-study")


def sha256(file) -> str:
    return hashlib.sha256(Path(file).read_bytes()).hexdigest()


def write_rows(file, header, rows):
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_run_manifest(out: Path, command, args, cfg, files, extra=None):
    manifest = {"tool": "monotone_sme", "version": __version__, "command": command, "args": args,
                "config": cfg, "seeds": cfg["seeds"],
                "files": {Path(f).name: sha256(f) for f in sorted(files)}}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# --- commands --------------------------------------------------------------

def cmd_simulate(cfg, out: Path, args):
    model = cfgmod.build_model(cfg)
    sim = cfg["simulate"]
    stream = ShockStream(cfg["seeds"]["sim_seed"], model.shock_spec.dim, 0)
    path = simulate_path(model, sim["s0"], stream, sim["theta"], sim["N"])
    f = out / "path.csv"
    write_path_csv(path, f)
    spec = cfgmod.build_moments(cfg)
    kept = spec.evaluate(path.states[sim["burn"]:])
    batches = min(sim["batches"], len(kept))  # short paths get fewer batches
    if batches >= 2:
        stats, se = path_statistics(kept, spec, batches)
    else:
        stats, se = spec.statistics(kept.mean(axis=0)), np.full(len(spec.statistic_names), np.nan)
    mf = out / "moments.csv"
    write_rows(mf, ["name", "value", "std_error"],
               [[n, float(v), float(s)] for n, v, s in zip(spec.statistic_names, stats, se)])
    write_run_manifest(out, "simulate", args, cfg, [f, mf], {"path": path_manifest(path)})
    print(f"wrote {sim['N']} rows to {f} ({path.clamp_count} clamped steps)")
    return 0


def _load_data(cfg, model, spec):
    d = cfg["estimation"]["data"]
    if d["source"] == "synthetic":
        return DataSeries.synthetic(model, spec, d["theta0"], d["N"], cfg["seeds"]["data_seed"], d["s0"], d["burn"])
    file = Path(d["csv"])
    if not file.exists():
        raise ConfigError(f"estimation.data.csv: missing data source {file}")
    _, obs = read_series_csv(file, d["columns"])
    data = DataSeries.from_observations(obs, spec, {"kind": "csv", "file": str(file), "sha256": sha256(file)})
    return data


def _distance(cfg, spec, data):
    """Configured distance; bootstrap weights use the first max(N) data rows and the data seed."""
    d = cfg["estimation"]["distance"]
    if d["weights"] != "bootstrap":
        return cfgmod.build_distance(cfg)
    w = bootstrap_weights(data, spec, d["names"], max(cfg["estimation"]["N"]), seed=cfg["seeds"]["data_seed"])
    return cfgmod.build_distance(cfg, w)


def cmd_estimate(cfg, out: Path, args):
    est = cfg["estimation"]
    dist = est["distance"]
    if dist["preset"] == "volatility":
        value = volatility_objective_preset(dist["sigmas"])
        f = out / "preset.csv"
        write_rows(f, ["sigma_1", "sigma_2", "sigma_3", "objective"], [[*map(float, dist["sigmas"]), value]])
        write_run_manifest(out, "estimate", args, cfg, [f])
        print(f"volatility objective {value:.17g}")
        return 0
    model = cfgmod.build_model(cfg)
    spec = cfgmod.build_moments(cfg)
    data = _load_data(cfg, model, spec)
    if len(data) < max(est["N"]):
        raise ConfigError(f"estimation.N: data has {len(data)} rows, need {max(est['N'])}")
    theta0 = est["data"]["theta0"] if est["data"]["source"] == "synthetic" else None
    distance = _distance(cfg, spec, data)
    trace = consistency_study(model, spec, distance, cfgmod.build_horizon(cfg), data, est["s0"],
                              cfg["seeds"]["sim_seed"], est["N"], cfgmod.build_search(cfg), theta0)
    l = model.param_box.dim
    theta_cols = [f"theta_{i + 1}" for i in range(l)]
    results = out / "results.csv"
    write_rows(results, ["N", *theta_cols, "objective"],
               [[e.N, *map(float, e.theta), float(e.objective)] for e in trace.entries])
    tr = out / "trace.csv"
    write_rows(tr, ["N", "level", *theta_cols, "objective"],
               [[e.N, h["level"], *map(float, h["best"]), float(h["value"])]
                for e in trace.entries for h in e.manifest["levels"]])
    extra = {"data": data.source, "weights": list(distance.weights)}
    if trace.slope is not None:
        extra["error_slope"] = trace.slope
    write_run_manifest(out, "estimate", args, cfg, [results, tr], extra)
    last = trace.entries[-1]
    print(f"N={last.N} theta={[float(t) for t in last.theta]} objective={last.objective:.6g}")
    return 0


def _ar_shift_bound(theta):
    a = float(theta[0])
    return lambda k: k * (1 + a) / (1 - a)


def run_study(cfg, study: str) -> StudyReport:
    if study not in STUDY_IDS:
        raise ConfigError(f"unknown study {study!r}; valid ids: {', '.join(STUDY_IDS)}")
    model = cfgmod.build_model(cfg)
    spec = cfgmod.build_moments(cfg)
    dg = cfg["diagnostics"]
    tol = dg["tolerances"]
    seed = cfg["seeds"]["sim_seed"]
    theta = np.array(dg["theta"])
    oracle = cfgmod.build_oracle(cfg)
    if study == "monotone":
        return monotone_study(model, dg["n_samples"], seed, dg["n_theta_monotone"], dg["coupling_pairs"],
                              dg["coupling_steps"])
    if study == "feller":
        return feller_study(model, spec, theta, None, dg["feller_dirs"], dg["mc_draws"], seed, dg["feller_steps"],
                            tol["feller"])
    if study == "dominance":
        return dominance_study(model, dg["kappas"], dg["n_samples"], seed)
    if study == "neighborhood":
        return neighborhood_study(model, theta, dg["kappa"], dg["radii"], dg["n_samples"], seed)
    if study == "sandwich":
        return sandwich_study(model, theta, [dg["kappa"]], dg["radius"], dg["N"], dg["n_seeds"], spec, dg["n_theta"],
                              seed, dg["starts"])
    if study == "envelope-continuity":
        bound = _ar_shift_bound(theta) if dg["continuity_bound"] == "ar-shift" else None
        return envelope_continuity_study(model, theta, dg["kappas"], spec, oracle, tol["continuity"],
                                         tol["se_mult"], bound=bound)
    if study == "ulln":
        return ulln_study(model, spec, theta_grid(model.param_box, dg["grid_points"]), dg["N_ladder"], dg["starts"],
                          seed, oracle, tol["sup_gap"], tol["slope"])
    if study == "uniqueness":
        return uniqueness_study(model, theta[None], spec, oracle, dg["random_starts"], dg["batches"], tol["k_se"],
                                seed)
    return approx_study(model, theta[None], dg["resolutions"], dg["mc_draws"], seed, tol["improve"])


def theta_grid(box, points):
    """Product grid with ``points`` values along every free coordinate."""
    axes = [np.array([lo]) if lo == hi else np.linspace(lo, hi, points) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def cmd_diagnose(cfg, out: Path, args):
    rep = run_study(cfg, args["study"])
    files = rep.write(out, rep.study)
    write_run_manifest(out, "diagnose", args, cfg, files, {"study_inputs": _jsonable(rep.inputs),
                                                           "study_extra": _jsonable(rep.extra)})
    sys.stdout.write(rep.summary())
    return rep.exit_code


def approx_probe(box, theta0):
    """Parameter probes for the max over theta: box corners, midpoint and ``theta0``."""
    pts = [box.midpoint(), np.asarray(theta0, dtype=float)]
    if box.dim <= 4:
        pts += [np.array(c) for c in np.array(np.meshgrid(*zip(box.lower, box.upper), indexing="ij")).reshape(
            box.dim, -1).T]
    return np.unique(np.array(pts), axis=0)


def cmd_approx_study(cfg, out: Path, args):
    model = cfgmod.build_model(cfg)
    spec = cfgmod.build_moments(cfg)
    dg = cfg["diagnostics"]
    theta0 = np.array(cfg["estimation"]["data"]["theta0"])
    curve = approx_error_curve(model, approx_probe(model.param_box, theta0), dg["resolutions"], dg["mc_draws"],
                               cfg["seeds"]["sim_seed"])
    data = DataSeries.synthetic(model, spec, theta0, max(cfg["estimation"]["N"]), cfg["seeds"]["data_seed"],
                                cfg["estimation"]["data"]["s0"], cfg["estimation"]["data"]["burn"])
    distance = _distance(cfg, spec, data)
    rows, target = approx_estimation_study(model, spec, distance, theta0, cfgmod.build_oracle(cfg),
                                           cfgmod.build_search(cfg), dg["resolutions"])
    l = model.param_box.dim
    f = out / "study.csv"
    write_rows(f, ["resolution", "d_j", *[f"theta_j_{i + 1}" for i in range(l)], "err"],
               [[c.resolution, c.d, *map(float, r.theta), float(r.error.max())] for c, r in zip(curve, rows)])
    write_run_manifest(out, "approx-study", args, cfg, [f], {"target": [float(t) for t in target],
                                                            "weights": list(distance.weights),
                                                            "d_std_errors": [c.std_error for c in curve]})
    for c, r in zip(curve, rows):
        print(f"resolution {c.resolution}: d_j={c.d:.6g} theta_j={[float(t) for t in r.theta]} "
              f"err={float(r.error.max()):.6g}")
    return 0


def _jsonable(x):
    return json.loads(json.dumps(x, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


HANDLERS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "diagnose": cmd_diagnose,
            "approx-study": cmd_approx_study}


def run(command, cfg, out, args) -> int:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}") from None
    return HANDLERS[command](cfg, out, args)


def replay(manifest_file, out, check=True) -> int:
    """Re-run the command recorded in a manifest; with ``check``, compare output checksums."""
    manifest = json.loads(Path(manifest_file).read_text())
    cfg = cfgmod.normalize(manifest["config"])
    code = run(manifest["command"], cfg, out, manifest["args"])
    if not check:
        return code
    fresh = json.loads((Path(out) / "manifest.json").read_text())["files"]
    bad = [name for name, digest in manifest["files"].items() if fresh.get(name) != digest]
    if bad:
        print(f"checksum mismatch: {bad}", file=sys.stderr)
        return 1
    print(f"all {len(manifest['files'])} output file(s) reproduced byte for byte")
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="monotone-sme", description="Simulated moments for monotone Markov maps.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (or a run manifest)")
        sp.add_argument("--out", help="output directory (default: output.directory from the config)")
        sp.add_argument("--seed", type=int, help="base seed; data, sim and oracle seeds become seed, seed+1, seed+2")
        sp.add_argument("--threads", type=int, default=1, help="thread cap (computation is single-threaded)")

    sp = sub.add_parser("simulate", help="simulate one path and write it as CSV")
    common(sp)
    sp.add_argument("--theta", type=float, nargs="+")
    sp.add_argument("--N", type=int)
    sp = sub.add_parser("estimate", help="run the estimator on synthetic or CSV data")
    common(sp)
    sp = sub.add_parser("diagnose", help="run one diagnostic study")
    common(sp)
    sp.add_argument("study", help=f"one of: {', '.join(STUDY_IDS)}")
    sp = sub.add_parser("approx-study", help="interpolant distances and estimates per lattice resolution")
    common(sp)
    sp = sub.add_parser("replay", help="re-run a manifest and verify output checksums")
    sp.add_argument("manifest")
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-check", action="store_true")
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "replay":
            return replay(ns.manifest, ns.out, not ns.no_check)
        if ns.threads < 1:
            raise ConfigError("--threads must be >= 1")
        raw = {}
        if ns.config:
            raw = cfgmod.load(ns.config)
        args = {}
        if ns.command == "simulate":
            raw = dict(raw)
            sim = dict(raw.get("simulate", {}))
            if ns.N is not None:
                if ns.N < 1:
                    raise ConfigError("N must be >= 1")
                sim["N"] = ns.N
            if ns.theta is not None:
                sim["theta"] = ns.theta
            raw["simulate"] = sim
        if ns.command == "diagnose":
            args["study"] = ns.study
            if ns.study not in STUDY_IDS:
                raise ConfigError(f"unknown study {ns.study!r}; valid ids: {', '.join(STUDY_IDS)}")
        cfg = cfgmod.normalize(raw)
        if ns.seed is not None:
            cfg = cfgmod.override_seed(cfg, ns.seed)
        out = ns.out or cfg["output"]["directory"]
        return run(ns.command, cfg, out, args)
    except SMEError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
