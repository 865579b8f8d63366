"""Simulated moments estimation over a compact parameter box.

The finite-sample problem minimises ``G_N(sim stats at theta, data stats)``
where the simulated statistics are averages over ``tau_N`` steps of one
fixed shock stream, so the objective is a deterministic function of theta.
The population problem replaces the simulated averages by oracle
expectations. Both are solved by a deterministic coarse-to-fine grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, DomainError
from .models import TransitionMap
from .moments import MomentSpec, oracle_batch
from .shocks import ShockStream
from .simulate import run_chains

VOLATILITY_TARGETS = (8.86, 3.31, 31.41)
VOLATILITY_TARGET_SDS = (0.0091, 0.0035, 0.0315)


def volatility_objective_preset(sigmas, targets=VOLATILITY_TARGETS, target_sds=VOLATILITY_TARGET_SDS) -> float:
    """Volatility-matching criterion for (investment, hours, stock) volatilities.

    Each squared deviation from the data volatility is weighted by the inverse
    of the standard deviation of that data estimate.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.shape != (3,):
        raise DomainError(f"expected 3 volatilities, got shape {sigmas.shape}")
    if np.any(sigmas < 0):
        raise DomainError(f"volatilities must be nonnegative, got {sigmas.tolist()}")
    total = 0.0
    for s, t, sd in zip(sigmas, targets, target_sds):
        total += (s - t) ** 2 / sd
    return float(total)


@dataclass(frozen=True)
class DistanceSpec:
    """Weighted quadratic ``G(x, y) = sum_i w_i (x_i - y_i)^2`` over named statistics.

    ``weight_decay`` gives the finite-sample sequence
    ``w_i(N) = w_i (1 + weight_decay / N)``, which converges uniformly to G on
    bounded sets; 0 means ``G_N = G``.
    """

    names: tuple
    weights: tuple
    weight_decay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.names) != len(self.weights) or not self.names:
            raise ConfigError("distance needs one weight per statistic")
        if any(not w > 0 for w in self.weights):
            raise ConfigError(f"distance weights must be > 0, got {self.weights}")

    @classmethod
    def uniform(cls, names):
        return cls(tuple(names), (1.0,) * len(names))

    def index(self, spec: MomentSpec):
        stats = spec.statistic_names
        missing = [n for n in self.names if n not in stats]
        if missing:
            raise ConfigError(f"distance refers to unknown statistics {missing}; available {stats}")
        return [stats.index(n) for n in self.names]

    def weights_at(self, N=None):
        w = np.array(self.weights)
        if N is None or self.weight_decay == 0:
            return w
        return w * (1.0 + self.weight_decay / N)

    def __call__(self, x, y, N=None):
        """``x``, ``y``: arrays ``(..., len(names))`` of selected statistics."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.sum(self.weights_at(N) * d * d, axis=-1)

    def scaled(self, c):
        return DistanceSpec(self.names, tuple(c * w for w in self.weights), self.weight_decay)


def check_distance_convergence(distance: DistanceSpec, N_list, probe, targets) -> dict:
    """Sup over probe points of ``|G_N - G|`` for each N (should go to 0)."""
    probe = np.atleast_2d(probe)
    g = distance(probe, targets)
    sup = [float(np.max(np.abs(distance(probe, targets, N) - g))) for N in N_list]
    ok = all(b <= a for a, b in zip(sup, sup[1:]))
    return {"N": list(N_list), "sup_gap": sup, "nonincreasing": ok}


@dataclass(frozen=True)
class HorizonRule:
    """Simulation length ``tau_N = ceil(c N)``, optionally capped."""

    c: float = 1.0
    cap: int | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"horizon c must be > 0, got {self.c}")

    def __call__(self, N: int) -> int:
        tau = max(1, math.ceil(self.c * N - 1e-12))
        return min(tau, self.cap) if self.cap else tau


@dataclass(frozen=True)
class SearchConfig:
    """Coarse-to-fine grid over the free coordinates of theta.

    ``fixed`` pins coordinates: ``{index: value}``.
    """

    levels: int = 3
    points: int = 11
    shrink: float = 0.2
    polish: bool = False
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.levels < 1 or self.points < 2:
            raise ConfigError("search needs levels >= 1 and points >= 2")
        if not 0 < self.shrink < 1:
            raise ConfigError(f"shrink must lie in (0, 1), got {self.shrink}")


def _level_grid(lo, hi, points):
    axes = [np.array([a]) if a == b else np.linspace(a, b, points) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def lexicographic_argmin(thetas, values) -> int:
    """Index of the smallest value; exact ties go to the lexicographically smallest theta."""
    keys = tuple(thetas[:, ::-1].T) + (values,)
    return int(np.lexsort(keys)[0])


def _pinned_box(param_box, fixed):
    lo, hi = param_box.lower.copy(), param_box.upper.copy()
    for i, v in fixed.items():
        if not param_box.lower[i] <= v <= param_box.upper[i]:
            raise DomainError(f"fixed value {v} for {param_box.names[i]} lies outside the parameter box")
        lo[i] = hi[i] = v
    return lo, hi


@dataclass
class SearchResult:
    theta: np.ndarray
    value: float
    runner_up_gap: float
    spacing: np.ndarray
    history: list = field(default_factory=list)


def _next_window(best, lo, hi, box_lo, box_hi, shrink):
    width = shrink * (hi - lo)
    new_lo = np.maximum(best - width / 2, box_lo)
    new_hi = np.minimum(new_lo + width, box_hi)
    new_lo = np.maximum(new_hi - width, box_lo)
    return new_lo, new_hi


def _runner_up_gap(thetas, values, best, spacing):
    far = np.any(np.abs(thetas - best) > spacing * 1.5 + 1e-15, axis=1)
    if not far.any():
        return float("nan")
    return float(values[far].min() - values.min())


def grid_search(objective_batch, param_box, search: SearchConfig) -> SearchResult:
    """Minimise ``objective_batch(thetas[M, l]) -> values[M]`` over the box."""
    return grid_search_many(lambda grids: [objective_batch(grids[0])], param_box, search, 1,
                            polish_batches=[objective_batch])[0]


def grid_search_many(objective_batches, param_box, search: SearchConfig, n_problems: int, polish_batches=None):
    """Run ``n_problems`` coarse-to-fine searches in lockstep.

    ``objective_batches(grids)`` receives one ``(M_i, l)`` grid per problem and
    returns one value array per problem, so the caller can evaluate all of a
    level in a single batch. ``polish_batches`` (one single-problem objective
    per problem) is needed only when ``search.polish`` is set.
    """
    box_lo, box_hi = _pinned_box(param_box, search.fixed)
    windows = [(box_lo.copy(), box_hi.copy()) for _ in range(n_problems)]
    states = [{"history": [], "gap": float("nan")} for _ in range(n_problems)]
    for level in range(search.levels):
        grids = [_level_grid(lo, hi, search.points) for lo, hi in windows]
        all_values = objective_batches(grids)
        for p, (thetas, values) in enumerate(zip(grids, all_values)):
            values = np.asarray(values, dtype=float)
            lo, hi = windows[p]
            i = lexicographic_argmin(thetas, values)
            st = states[p]
            st.update(best=thetas[i].copy(), value=float(values[i]), spacing=(hi - lo) / (search.points - 1))
            if level == 0:
                st["gap"] = _runner_up_gap(thetas, values, st["best"], st["spacing"])
            st["history"].append({"level": level, "thetas": thetas, "values": values, "best": st["best"].copy(),
                                  "value": st["value"]})
            if level + 1 < search.levels:
                windows[p] = _next_window(st["best"], lo, hi, box_lo, box_hi, search.shrink)
    out = []
    for p, st in enumerate(states):
        best, val = st["best"], st["value"]
        if search.polish:
            best, val = _polish(polish_batches[p], best, val, box_lo, box_hi)
        out.append(SearchResult(best.copy(), val, st["gap"], st["spacing"], st["history"]))
    return out


def _polish(objective_batch, start, start_val, lo, hi):
    free = lo < hi
    if not free.any():
        return start, start_val

    def fun(x):
        theta = start.copy()
        theta[free] = np.clip(x, lo[free], hi[free])
        return float(objective_batch(theta[None])[0])

    res = minimize(fun, start[free], method="Nelder-Mead", bounds=list(zip(lo[free], hi[free])),
                   options={"xatol": 1e-6, "fatol": 1e-12, "maxfev": 400})
    if res.fun < start_val:
        theta = start.copy()
        theta[free] = np.clip(res.x, lo[free], hi[free])
        return theta, float(res.fun)
    return start, start_val


# --- data ----------------------------------------------------------------

@dataclass
class DataSeries:
    """Observed primitive values ``f(s~_n)``, one row per period."""

    values: np.ndarray
    source: dict = field(default_factory=dict)

    def __len__(self):
        return self.values.shape[0]

    def means(self, N: int) -> np.ndarray:
        if not 1 <= N <= len(self):
            raise DomainError(f"data has {len(self)} rows, cannot average the first {N}")
        return self.values[:N].mean(axis=0)

    @classmethod
    def from_observations(cls, obs, spec: MomentSpec, source=None):
        obs = np.asarray(obs, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.shape[1] != len(spec.observable):
            raise DomainError(f"data has {obs.shape[1]} columns, observable mask has {len(spec.observable)}")
        return cls(spec.evaluate_observed(obs), dict(source or {}))

    @classmethod
    def synthetic(cls, phi: TransitionMap, spec: MomentSpec, theta0, N: int, seed: int, s0=None, burn=0):
        """Data path at ``theta0`` on its own stream (independent of simulation streams)."""
        theta0 = phi.param_box.check(theta0)
        s0 = phi.state_box.midpoint() if s0 is None else phi.state_box.check(s0, "s0")
        stream = ShockStream(seed, phi.shock_spec.dim, stream_id=0)
        res = run_chains(phi, theta0[None], s0, [stream], N + burn, keep_states=True)
        states = res.states[burn:, 0, 0, :]
        return cls(spec.evaluate(states), {"kind": "synthetic", "theta0": theta0.tolist(), "seed": int(seed),
                                           "s0": np.asarray(s0).tolist(), "burn": int(burn)})


def bootstrap_weights(data: DataSeries, spec: MomentSpec, names, N=None, n_boot=200, seed=0):
    """Inverse variances of the selected statistics by moving-block bootstrap.

    Block length is ``ceil(N**(1/3))``.
    """
    vals = data.values[: N or len(data)]
    n = vals.shape[0]
    b = max(1, math.ceil(n ** (1 / 3)))
    n_blocks = math.ceil(n / b)
    rng = np.random.default_rng(seed)
    cols = [spec.statistic_names.index(x) for x in names]
    reps = np.empty((n_boot, len(cols)))
    for i in range(n_boot):
        starts = rng.integers(0, n - b + 1, size=n_blocks)
        idx = (starts[:, None] + np.arange(b)).ravel()[:n]
        reps[i] = spec.statistics(vals[idx].mean(axis=0))[cols]
    var = reps.var(axis=0, ddof=1)
    floor = 1e-12 * max(1.0, float(np.max(var)))
    return tuple(1.0 / np.maximum(var, floor))


# --- finite-sample and population problems ------------------------------

def simulated_statistics(phi, spec, thetas, s0, stream, taus):
    """Statistics at each theta averaged over the first ``tau`` steps, for every tau.

    Returns ``(len(taus), M, n_stats)``.
    """
    taus = sorted(set(int(t) for t in taus))
    res = run_chains(phi, thetas, s0, [stream], max(taus), observe=spec.evaluate, checkpoints=taus)
    return spec.statistics(res.prefix[:, :, 0, :]), taus


def finite_sample_objective(phi, spec, distance: DistanceSpec, theta, s0, stream, N, horizon: HorizonRule,
                            data: DataSeries) -> float:
    theta = phi.param_box.check(theta)
    s0 = phi.state_box.check(s0, "s0")
    tau = horizon(N)
    stats, _ = simulated_statistics(phi, spec, theta[None], s0, stream, [tau])
    cols = distance.index(spec)
    target = spec.statistics(data.means(N))[cols]
    return float(distance(stats[0, 0, cols], target, N))


@dataclass
class Estimate:
    N: int
    tau: int
    theta: np.ndarray
    objective: float
    runner_up_gap: float
    spacing: np.ndarray
    manifest: dict = field(default_factory=dict)


def estimate_many(phi, spec, distance: DistanceSpec, horizon: HorizonRule, data: DataSeries, s0, seed: int,
                  N_list, search: SearchConfig, stream_id: int = 0):
    """Estimates for several sample sizes sharing one simulation stream and one data series.

    Windows are nested: estimate N uses the first N data rows and the first
    ``tau_N`` simulated steps. Each grid level is simulated once for all N.
    """
    N_list = [int(n) for n in N_list]
    if any(n < 1 for n in N_list):
        raise DomainError("N must be >= 1")
    s0 = phi.state_box.check(s0, "s0")
    stream = ShockStream(seed, phi.shock_spec.dim, stream_id)
    cols = distance.index(spec)
    targets = {N: spec.statistics(data.means(N))[cols] for N in N_list}
    taus = {N: horizon(N) for N in N_list}
    box_lo, box_hi = _pinned_box(phi.param_box, search.fixed)
    windows = {N: (box_lo.copy(), box_hi.copy()) for N in N_list}
    state = {N: {"history": []} for N in N_list}
    for level in range(search.levels):
        grids = {N: _level_grid(*windows[N], search.points) for N in N_list}
        shared = level == 0
        if shared:
            all_thetas = grids[N_list[0]]
        else:
            all_thetas = np.concatenate([grids[N] for N in N_list])
        stats, tau_sorted = simulated_statistics(phi, spec, all_thetas, s0, stream, list(taus.values()))
        offset = 0
        for N in N_list:
            g = grids[N]
            block = stats[tau_sorted.index(taus[N])]
            sel = block if shared else block[offset:offset + len(g)]
            if not shared:
                offset += len(g)
            values = distance(sel[:, cols], targets[N], N)
            i = lexicographic_argmin(g, values)
            lo, hi = windows[N]
            spacing = (hi - lo) / (search.points - 1)
            st = state[N]
            st.update(best=g[i].copy(), value=float(values[i]), spacing=spacing)
            if level == 0:
                st["gap"] = _runner_up_gap(g, values, g[i], spacing)
            st["history"].append({"level": level, "best": g[i].tolist(), "value": float(values[i])})
            if level + 1 < search.levels:
                windows[N] = _next_window(g[i], lo, hi, box_lo, box_hi, search.shrink)
    out = []
    for N in N_list:
        st = state[N]
        best, val = st["best"], st["value"]
        if search.polish:
            def batch(thetas, N=N):
                s, _ = simulated_statistics(phi, spec, thetas, s0, stream, [taus[N]])
                return distance(s[0][:, cols], targets[N], N)
            best, val = _polish(batch, best, val, box_lo, box_hi)
        manifest = {"sim_seed": int(seed), "stream_id": int(stream_id), "s0": s0.tolist(), "N": N,
                    "tau": taus[N], "data": data.source, "levels": st["history"]}
        out.append(Estimate(N, taus[N], best, val, st["gap"], st["spacing"], manifest))
    return out


def estimate(phi, spec, distance, horizon, data, s0, seed, N, search: SearchConfig) -> Estimate:
    """``arg inf`` over the parameter box of the finite-sample objective at sample size N."""
    return estimate_many(phi, spec, distance, horizon, data, s0, seed, [N], search)[0]


@dataclass
class TraceEntry:
    N: int
    theta: np.ndarray
    objective: float
    error: np.ndarray | None
    manifest: dict


@dataclass
class EstimateTrace:
    entries: list
    theta0: np.ndarray | None
    slope: float | None
    objective_floor: float
    misspecified: bool

    @property
    def final(self):
        return self.entries[-1].theta

    def errors(self):
        return np.array([e.error for e in self.entries])


def loglog_slope(x, y) -> float:
    x, y = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def consistency_study(phi, spec, distance, horizon, data, s0, seed, N_list, search, theta0=None,
                      floor_tol=1e-6) -> EstimateTrace:
    """Estimates along an increasing ladder of N with nested windows.

    Errors are measured against ``theta0``; the log-log slope of the max
    coordinate error uses the final grid spacing as a floor so exact hits do
    not produce log(0). ``misspecified`` is raised when the objective stays
    above ``floor_tol`` over the upper half of the ladder.
    """
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("N_list must be strictly increasing")
    ests = estimate_many(phi, spec, distance, horizon, data, s0, seed, N_list, search)
    entries, errs = [], []
    for e in ests:
        err = None if theta0 is None else np.abs(e.theta - np.asarray(theta0, dtype=float))
        entries.append(TraceEntry(e.N, e.theta, e.objective, err, e.manifest))
        if err is not None:
            errs.append(float(err.max()))
    slope = None
    if theta0 is not None and len(N_list) >= 2:
        floor = float(np.max(ests[-1].spacing))
        slope = loglog_slope(N_list, np.array(errs) + floor)
    upper = [e.objective for e in ests[len(ests) // 2:]]
    floor_val = float(min(upper))
    return EstimateTrace(entries, None if theta0 is None else np.asarray(theta0, dtype=float), slope,
                         floor_val, floor_val > floor_tol)


@dataclass
class OracleConfig:
    n_oracle: int = 10 ** 6
    burn: int = 10 ** 4
    R: int = 8
    seed: int = 0


@dataclass
class PopulationResult:
    theta: np.ndarray
    value: float
    runner_up_gap: float
    spacing: np.ndarray
    history: list


def population_objective_batch(phi, spec, distance, data_stats, oracle: OracleConfig):
    cols = distance.index(spec)
    target = np.asarray(data_stats, dtype=float)

    def batch(thetas):
        means, _, _, _ = oracle_batch(phi, thetas, spec, oracle.n_oracle, oracle.burn, oracle.R, oracle.seed)
        return distance(spec.statistics(means)[:, cols], target)

    return batch


def population_solve(phi, spec, distance: DistanceSpec, data_stats, oracle: OracleConfig,
                     search: SearchConfig) -> PopulationResult:
    """Minimise ``G(E_theta(f), f_bar)`` with oracle expectations.

    ``data_stats`` are the selected statistics (the distance's names) of the
    data-generating process.
    """
    res = grid_search(population_objective_batch(phi, spec, distance, data_stats, oracle), phi.param_box,
                      search)
    return PopulationResult(res.theta, res.value, res.runner_up_gap, res.spacing, res.history)
