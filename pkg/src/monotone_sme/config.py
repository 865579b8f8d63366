"""Experiment configuration: a JSON document with fixed sections.

``normalize`` validates a raw document and fills every default explicitly,
including the ones that depend on the chosen model (parameter box, shocks,
moments, default theta). Unknown keys are errors. Normalizing a normalized
document returns it unchanged.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from pathlib import Path

import numpy as np

from . import shocks as shock_mod
from .errors import ConfigError, SMEError
from .estimator import DistanceSpec, HorizonRule, OracleConfig, SearchConfig
from .models import ZOO, MarkovMap, ParameterBox, get_model
from .moments import Derived, MomentSpec, Primitive, coordinate, mean_variance_spec, power, scaled_level_spec

# None marks a default that normalization fills from the model.
SCHEMA = {
    "model": {"name": "threshold", "overrides": {}},
    "shocks": {"coords": None},
    "theta_box": {"lower": None, "upper": None, "names": None},
    "moments": {"observable": None, "primitives": None, "derived": None},
    "simulate": {"theta": None, "N": 1000, "s0": None, "burn": 0, "batches": 20},
    "estimation": {
        "N": [100_000],
        "horizon_c": 1.0,
        "distance": {"preset": "quadratic", "names": None, "weights": None, "weight_decay": 0.0,
                     "sigmas": None},
        "search": {"levels": 3, "points": 11, "shrink": 0.2, "polish": False, "tie_break": "lexicographic"},
        "fixed": {},
        "s0": None,
        "data": {"source": "synthetic", "theta0": None, "N": None, "burn": 0, "s0": None, "csv": None,
                 "columns": None},
    },
    "diagnostics": {
        "theta": None,
        "n_samples": 10_000,
        "n_theta_monotone": 8,
        "coupling_pairs": 1000,
        "coupling_steps": 1000,
        "kappas": [0.4, 0.2, 0.1, 0.05, 0.025],
        "kappa": 0.2,
        "radius": 0.1,
        "radii": [0.01, 0.02, 0.05, 0.1, 0.2],
        "N": 10_000,
        "n_seeds": 10,
        "n_theta": 20,
        "grid_points": 21,
        "N_ladder": [2 ** j for j in range(10, 19)],
        "starts": None,
        "resolutions": [9, 17, 33, 65, 129],
        "mc_draws": 20_000,
        "feller_dirs": 8,
        "feller_steps": 12,
        "random_starts": 4,
        "batches": 20,
        "continuity_bound": None,
        "oracle": {"n_oracle": 1_000_000, "burn": 10_000, "R": 8},
        "tolerances": {"sup_gap": 0.01, "slope": -0.3, "continuity": 0.02, "k_se": 4.0, "se_mult": 2.0,
                       "feller": 0.01, "improve": 0.25},
    },
    "seeds": {"data_seed": 1, "sim_seed": 2, "oracle_seed": 3},
    "output": {"directory": "out", "formats": ["csv"]},
}

FREE_FORM = {("model", "overrides"), ("estimation", "fixed")}
CONTINUITY_BOUNDS = ("ar-shift",)
FORMATS = ("csv",)


def default_moments(model: MarkovMap) -> MomentSpec:
    """Moments used when the config does not list any; primitives are increasing on the box."""
    name = model.name
    if name == "threshold":
        return scaled_level_spec(0.1)
    if name == "log-growth":
        return mean_variance_spec(shift=float(model.state_box.lower[0]))
    if name == "adoption":
        lo = float(model.state_box.lower[0])
        return MomentSpec((coordinate(0, name="lnx_mean"), power(0, 2, lo, name="lnx_m2"),
                           coordinate(1, scale=0.01, name="A_mean")), (0, 2),
                          (Derived("lnx_variance", "variance", ("lnx_mean", "lnx_m2"), lo),))
    return scaled_level_spec(1.0)


def _merge(raw, schema, path):
    if not isinstance(raw, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'} must be an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        where = ".".join(path) or "top level"
        raise ConfigError(f"unknown key(s) {unknown} in {where}; valid: {sorted(schema)}")
    out = {}
    for key, default in schema.items():
        sub = path + (key,)
        if isinstance(default, dict) and sub not in FREE_FORM:
            out[key] = _merge(raw.get(key, {}), default, sub)
        else:
            out[key] = copy.deepcopy(raw[key]) if key in raw else copy.deepcopy(default)
    return out


def _floats(x, field_name, n=None):
    try:
        v = [float(a) for a in x]
    except (TypeError, ValueError):
        raise ConfigError(f"{field_name} must be a list of numbers, got {x!r}") from None
    if n is not None and len(v) != n:
        raise ConfigError(f"{field_name} must have {n} entries, got {len(v)}")
    return v


def _pos_int(x, field_name, minimum=1):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x or x < minimum:
        raise ConfigError(f"{field_name} must be an integer >= {minimum}, got {x!r}")
    return int(x)


def _check_theta(box: ParameterBox, theta, field_name):
    theta = _floats(theta, field_name, box.dim)
    if not box.contains(theta):
        raise ConfigError(f"{field_name} {theta} lies outside the parameter box "
                          f"{box.lower.tolist()} / {box.upper.tolist()}")
    return theta


def _check_state(model, s, field_name):
    s = _floats(s, field_name, model.k)
    if not model.state_box.contains(s):
        raise ConfigError(f"{field_name} {s} lies outside the state box")
    return s


def normalize(raw: dict) -> dict:
    """Validate ``raw`` and return a fully explicit copy."""
    cfg = _merge(raw, SCHEMA, ())
    name = cfg["model"]["name"]
    if name not in ZOO:
        raise ConfigError(f"model.name: unknown model {name!r}; valid: {sorted(ZOO)}")
    try:
        base = get_model(name, **cfg["model"]["overrides"])
    except TypeError as e:
        raise ConfigError(f"model.overrides: {e}") from None

    # shocks
    if cfg["shocks"]["coords"] is None:
        cfg["shocks"]["coords"] = [c.to_dict() for c in base.shock_spec.coords]
    coords = cfg["shocks"]["coords"]
    if not isinstance(coords, list) or len(coords) != base.shock_spec.dim:
        raise ConfigError(f"shocks.coords must list {base.shock_spec.dim} shock(s)")
    norm = []
    for i, c in enumerate(coords):
        if not isinstance(c, dict) or set(c) - {"family", "params", "link"}:
            raise ConfigError(f"shocks.coords[{i}] must have keys family, params and optionally link")
        shock = shock_mod.Shock(c.get("family"), {k: float(v) for k, v in c.get("params", {}).items()},
                                {k: int(v) for k, v in c.get("link", {}).items()})
        norm.append(shock.to_dict())
    cfg["shocks"]["coords"] = norm

    # parameter box
    tb = cfg["theta_box"]
    pb = base.param_box
    tb["lower"] = pb.lower.tolist() if tb["lower"] is None else _floats(tb["lower"], "theta_box.lower", pb.dim)
    tb["upper"] = pb.upper.tolist() if tb["upper"] is None else _floats(tb["upper"], "theta_box.upper", pb.dim)
    tb["names"] = list(pb.names) if tb["names"] is None else [str(n) for n in tb["names"]]
    model = build_model(cfg)
    box = model.param_box

    # moments
    m = cfg["moments"]
    if m["primitives"] is None:
        if m["observable"] is not None or m["derived"] is not None:
            raise ConfigError("moments: give primitives when setting observable or derived")
        m.update(default_moments(model).to_dict())
    m["observable"] = [0] if m["observable"] is None else m["observable"]
    m["derived"] = [] if m["derived"] is None else m["derived"]
    spec = build_moments(cfg)
    bad = [i for i in spec.observable if not 0 <= i < model.k]
    if bad:
        raise ConfigError(f"moments.observable has indices {bad} outside the state dimension {model.k}")
    cfg["moments"] = spec.to_dict()

    # simulate
    sim = cfg["simulate"]
    sim["theta"] = model.default_theta.tolist() if sim["theta"] is None else _check_theta(box, sim["theta"],
                                                                                           "simulate.theta")
    sim["N"] = _pos_int(sim["N"], "simulate.N")
    mid = model.state_box.midpoint().tolist()
    sim["s0"] = mid if sim["s0"] is None else _check_state(model, sim["s0"], "simulate.s0")
    sim["burn"] = _pos_int(sim["burn"], "simulate.burn", 0)
    sim["batches"] = _pos_int(sim["batches"], "simulate.batches", 2)
    if sim["burn"] >= sim["N"]:
        raise ConfigError("simulate.burn must be smaller than simulate.N")

    # estimation
    est = cfg["estimation"]
    Ns = est["N"] if isinstance(est["N"], list) else [est["N"]]
    est["N"] = [_pos_int(n, "estimation.N") for n in Ns]
    if not est["N"] or any(b <= a for a, b in zip(est["N"], est["N"][1:])):
        raise ConfigError("estimation.N must be a nonempty strictly increasing list")
    est["horizon_c"] = float(est["horizon_c"])
    if not est["horizon_c"] > 0:
        raise ConfigError("estimation.horizon_c must be > 0")
    dist = est["distance"]
    if dist["preset"] not in ("quadratic", "volatility"):
        raise ConfigError(f"estimation.distance.preset must be 'quadratic' or 'volatility', got {dist['preset']!r}")
    names = spec.statistic_names if dist["names"] is None else [str(n) for n in dist["names"]]
    unknown = [n for n in names if n not in spec.statistic_names]
    if unknown:
        raise ConfigError(f"estimation.distance.names {unknown} are not statistics; valid: {spec.statistic_names}")
    dist["names"] = names
    if dist["weights"] is None:
        dist["weights"] = "bootstrap"
    if dist["weights"] != "bootstrap":
        dist["weights"] = _floats(dist["weights"], "estimation.distance.weights", len(names))
    dist["weight_decay"] = float(dist["weight_decay"])
    if dist["sigmas"] is not None:
        dist["sigmas"] = _floats(dist["sigmas"], "estimation.distance.sigmas", 3)
    if dist["preset"] == "volatility" and dist["sigmas"] is None:
        raise ConfigError("estimation.distance.sigmas is required by the volatility preset")
    build_distance(cfg)
    sr = est["search"]
    if sr["tie_break"] != "lexicographic":
        raise ConfigError("estimation.search.tie_break: only 'lexicographic' is supported")
    sr["levels"] = _pos_int(sr["levels"], "estimation.search.levels")
    sr["points"] = _pos_int(sr["points"], "estimation.search.points", 2)
    sr["shrink"] = float(sr["shrink"])
    sr["polish"] = bool(sr["polish"])
    fixed = {}
    for k, v in est["fixed"].items():
        if k not in box.names:
            raise ConfigError(f"estimation.fixed: unknown parameter {k!r}; valid: {list(box.names)}")
        fixed[k] = float(v)
    est["fixed"] = fixed
    build_search(cfg)
    est["s0"] = mid if est["s0"] is None else _check_state(model, est["s0"], "estimation.s0")
    data = est["data"]
    if data["source"] not in ("synthetic", "csv"):
        raise ConfigError(f"estimation.data.source must be 'synthetic' or 'csv', got {data['source']!r}")
    data["theta0"] = model.default_theta.tolist() if data["theta0"] is None else _check_theta(
        box, data["theta0"], "estimation.data.theta0")
    data["N"] = max(est["N"]) if data["N"] is None else _pos_int(data["N"], "estimation.data.N")
    data["burn"] = _pos_int(data["burn"], "estimation.data.burn", 0)
    data["s0"] = mid if data["s0"] is None else _check_state(model, data["s0"], "estimation.data.s0")
    if data["columns"] is None:
        data["columns"] = [f"s_{i + 1}" for i in spec.observable]
    if len(data["columns"]) != len(spec.observable):
        raise ConfigError(f"estimation.data.columns must name {len(spec.observable)} column(s), "
                          f"one per observable coordinate")
    if data["source"] == "csv" and not data["csv"]:
        raise ConfigError("estimation.data.csv: missing data source (csv path required when source is 'csv')")

    # diagnostics
    dg = cfg["diagnostics"]
    dg["theta"] = model.default_theta.tolist() if dg["theta"] is None else _check_theta(box, dg["theta"],
                                                                                        "diagnostics.theta")
    for key in ("n_samples", "n_theta_monotone", "coupling_pairs", "coupling_steps", "N", "n_seeds", "n_theta",
                "grid_points", "mc_draws", "feller_dirs", "feller_steps", "batches"):
        dg[key] = _pos_int(dg[key], f"diagnostics.{key}")
    dg["random_starts"] = _pos_int(dg["random_starts"], "diagnostics.random_starts", 0)
    dg["kappas"] = _floats(dg["kappas"], "diagnostics.kappas")
    dg["kappa"], dg["radius"] = float(dg["kappa"]), float(dg["radius"])
    dg["radii"] = _floats(dg["radii"], "diagnostics.radii")
    dg["N_ladder"] = [_pos_int(n, "diagnostics.N_ladder") for n in dg["N_ladder"]]
    dg["resolutions"] = [_pos_int(n, "diagnostics.resolutions", 2) for n in dg["resolutions"]]
    if dg["starts"] is None:
        dg["starts"] = [model.state_box.lower.tolist(), model.state_box.upper.tolist()]
    dg["starts"] = [_check_state(model, s, "diagnostics.starts") for s in dg["starts"]]
    if dg["continuity_bound"] is not None and dg["continuity_bound"] not in CONTINUITY_BOUNDS:
        raise ConfigError(f"diagnostics.continuity_bound must be null or one of {CONTINUITY_BOUNDS}")
    oc = dg["oracle"]
    oc["n_oracle"] = _pos_int(oc["n_oracle"], "diagnostics.oracle.n_oracle")
    oc["burn"] = _pos_int(oc["burn"], "diagnostics.oracle.burn", 0)
    oc["R"] = _pos_int(oc["R"], "diagnostics.oracle.R", 2)
    tol = dg["tolerances"]
    for k, v in tol.items():
        tol[k] = None if v is None and k == "continuity" else float(v)

    # seeds and output
    for k in cfg["seeds"]:
        cfg["seeds"][k] = _pos_int(cfg["seeds"][k], f"seeds.{k}", 0)
    out = cfg["output"]
    out["directory"] = str(out["directory"])
    bad = [f for f in out["formats"] if f not in FORMATS]
    if bad:
        raise ConfigError(f"output.formats {bad} unsupported; valid: {list(FORMATS)}")
    out["formats"] = list(out["formats"])
    return cfg


# --- builders (expect a normalized config) ----------------------------------

def build_model(cfg) -> MarkovMap:
    base = get_model(cfg["model"]["name"], **cfg["model"]["overrides"])
    coords = cfg["shocks"]["coords"]
    spec = base.shock_spec if coords is None else shock_mod.ShockSpec(
        [shock_mod.Shock(c["family"], c.get("params", {}), c.get("link", {})) for c in coords])
    tb = cfg["theta_box"]
    try:
        box = ParameterBox(tb["lower"], tb["upper"], tuple(tb["names"]))
        if box.dim != base.param_box.dim:
            raise ConfigError(f"theta_box has {box.dim} coordinates, model {base.name!r} needs "
                              f"{base.param_box.dim}")
        defaults = tuple(box.clip(np.asarray(base.defaults))) if base.defaults else ()
        return dataclasses.replace(base, shock_spec=spec, param_box=box, defaults=defaults)
    except SMEError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"theta_box: {e}") from None


def build_moments(cfg) -> MomentSpec:
    m = cfg["moments"]
    try:
        return MomentSpec(tuple(Primitive.from_dict(p) for p in m["primitives"]), tuple(m["observable"]),
                          tuple(Derived(d["name"], d["kind"], tuple(d["refs"]), float(d.get("shift", 0.0)))
                                for d in m["derived"]))
    except (TypeError, KeyError) as e:
        raise ConfigError(f"moments: malformed entry ({e})") from None


def build_distance(cfg, weights=None) -> DistanceSpec:
    """Distance from the config; ``weights`` replaces the ``"bootstrap"`` placeholder."""
    d = cfg["estimation"]["distance"]
    w = d["weights"] if weights is None else weights
    if isinstance(w, str):
        w = [1.0] * len(d["names"])  # placeholder, validated only
    try:
        return DistanceSpec(tuple(d["names"]), tuple(w), d["weight_decay"])
    except SMEError as e:
        raise ConfigError(f"estimation.distance: {e}") from None


def build_search(cfg) -> SearchConfig:
    sr = cfg["estimation"]["search"]
    names = cfg["theta_box"]["names"]
    fixed = {names.index(k): v for k, v in cfg["estimation"]["fixed"].items()}
    return SearchConfig(sr["levels"], sr["points"], sr["shrink"], sr["polish"], fixed)


def build_horizon(cfg) -> HorizonRule:
    return HorizonRule(cfg["estimation"]["horizon_c"])


def build_oracle(cfg) -> OracleConfig:
    oc = cfg["diagnostics"]["oracle"]
    return OracleConfig(oc["n_oracle"], oc["burn"], oc["R"], cfg["seeds"]["oracle_seed"])


def override_seed(cfg, seed: int) -> dict:
    """Derive all named seeds from one base seed: data = seed, sim = seed + 1, oracle = seed + 2."""
    cfg = copy.deepcopy(cfg)
    cfg["seeds"] = {"data_seed": seed, "sim_seed": seed + 1, "oracle_seed": seed + 2}
    return cfg


def load(path) -> dict:
    """Read a config file, or the config snapshot inside a run manifest."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    if isinstance(raw, dict) and "tool" in raw and "config" in raw:
        raw = raw["config"]
    return normalize(raw)


def dumps(cfg) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
