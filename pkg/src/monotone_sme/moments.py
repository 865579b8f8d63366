"""Functions of interest, sample and oracle moments, and the map distance.

A :class:`MomentSpec` holds increasing *primitives* of the observable
coordinates plus derived statistics (variance, standard deviation) that are
continuous functions of the primitive means. Primitive indices refer to
positions inside the observable sub-vector, so the same spec applies to a
simulated state and to a row of observed data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .models import TransitionMap, ordered_pairs
from .shocks import ShockStream
from .simulate import run_chains
from .state_space import Box


@dataclass(frozen=True)
class Primitive:
    """Increasing scalar function of the observable vector.

    kinds: ``coord`` (``scale * (s_i - shift)``, scale > 0), ``power``
    (``(s_i - shift)**order`` with shift at or below the box's lower bound),
    ``min`` and ``combo`` (nonnegative combination) of other primitives.
    """

    name: str
    kind: str
    index: int = 0
    scale: float = 1.0
    shift: float = 0.0
    order: int = 1
    parts: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind not in ("coord", "power", "min", "combo"):
            raise ConfigError(f"unknown primitive kind {self.kind!r}")
        if self.kind == "coord" and not self.scale > 0:
            raise ConfigError(f"primitive {self.name!r}: scale must be > 0")
        if self.kind == "power" and (int(self.order) != self.order or self.order < 1):
            raise ConfigError(f"primitive {self.name!r}: order must be a positive integer")
        if self.kind == "combo" and (len(self.weights) != len(self.parts) or min(self.weights, default=0) < 0):
            raise ConfigError(f"primitive {self.name!r}: needs one nonnegative weight per part")
        if self.kind in ("min", "combo") and not self.parts:
            raise ConfigError(f"primitive {self.name!r}: needs parts")

    def __call__(self, obs):
        if self.kind == "coord":
            return self.scale * (obs[..., self.index] - self.shift)
        if self.kind == "power":
            return (obs[..., self.index] - self.shift) ** int(self.order)
        vals = [p(obs) for p in self.parts]
        if self.kind == "min":
            return np.minimum.reduce(vals)
        return sum(w * v for w, v in zip(self.weights, vals))

    def indices(self):
        if self.kind in ("coord", "power"):
            return {self.index}
        return set().union(*(p.indices() for p in self.parts))

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.kind in ("coord", "power"):
            d.update(index=self.index, shift=self.shift)
            if self.kind == "coord":
                d["scale"] = self.scale
            else:
                d["order"] = int(self.order)
        else:
            d["parts"] = [p.to_dict() for p in self.parts]
            if self.kind == "combo":
                d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "parts" in d:
            d["parts"] = tuple(cls.from_dict(p) for p in d["parts"])
        if "weights" in d:
            d["weights"] = tuple(d["weights"])
        return cls(**d)


def coordinate(index, scale=1.0, shift=0.0, name=None):
    return Primitive(name or f"s{index + 1}", "coord", index=index, scale=scale, shift=shift)


def power(index, order, shift, name=None):
    return Primitive(name or f"s{index + 1}^{order}", "power", index=index, order=order, shift=shift)


@dataclass(frozen=True)
class Derived:
    """Statistic computed from primitive means.

    ``variance``/``std`` use a first-moment primitive ``refs[0]`` giving the
    raw mean of a coordinate and a second-moment primitive ``refs[1]`` for
    ``(s_i - shift)**2``: variance = m2 - (m1 - shift)**2.
    """

    name: str
    kind: str
    refs: tuple
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("mean", "variance", "std"):
            raise ConfigError(f"unknown derived statistic kind {self.kind!r}")
        need = 1 if self.kind == "mean" else 2
        if len(self.refs) != need:
            raise ConfigError(f"derived {self.name!r} of kind {self.kind} needs {need} refs")

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "refs": list(self.refs), "shift": self.shift}


@dataclass(frozen=True)
class MomentSpec:
    primitives: tuple
    observable: tuple = (0,)
    derived: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "observable", tuple(int(i) for i in self.observable))
        object.__setattr__(self, "derived", tuple(self.derived))
        if not self.primitives:
            raise ConfigError("moment spec needs at least one primitive")
        names = [p.name for p in self.primitives]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate primitive names {names}")
        for p in self.primitives:
            bad = [i for i in p.indices() if not 0 <= i < len(self.observable)]
            if bad:
                raise ConfigError(f"primitive {p.name!r} reads observable index {bad}, "
                                  f"only {len(self.observable)} observable coordinates")
        for d in self.derived:
            for r in d.refs:
                if r not in names:
                    raise ConfigError(f"derived {d.name!r} references unknown primitive {r!r}")
        all_names = names + [d.name for d in self.derived]
        if len(set(all_names)) != len(all_names):
            raise ConfigError(f"duplicate statistic names {all_names}")

    @property
    def p(self) -> int:
        return len(self.primitives)

    @property
    def primitive_names(self):
        return [p.name for p in self.primitives]

    @property
    def statistic_names(self):
        return self.primitive_names + [d.name for d in self.derived]

    def evaluate_observed(self, obs):
        obs = np.asarray(obs, dtype=float)
        return np.stack([p(obs) for p in self.primitives], axis=-1)

    def evaluate(self, states):
        """Primitive values ``(..., p)`` at full states ``(..., k)``."""
        states = np.asarray(states, dtype=float)
        return self.evaluate_observed(states[..., list(self.observable)])

    __call__ = evaluate

    def statistics(self, prim_means):
        """Append derived statistics to a ``(..., p)`` array of primitive means."""
        prim_means = np.asarray(prim_means, dtype=float)
        idx = {n: i for i, n in enumerate(self.primitive_names)}
        cols = [prim_means[..., i] for i in range(self.p)]
        for d in self.derived:
            m1 = prim_means[..., idx[d.refs[0]]]
            if d.kind == "mean":
                cols.append(m1)
                continue
            var = prim_means[..., idx[d.refs[1]]] - (m1 - d.shift) ** 2
            cols.append(var if d.kind == "variance" else np.sqrt(np.maximum(var, 0.0)))
        return np.stack(cols, axis=-1)

    def check_increasing(self, box: Box, n_pairs=10_000, seed=0) -> int:
        """Count ordered pairs on which some primitive decreases."""
        hi, lo = ordered_pairs(box, np.random.default_rng(seed), n_pairs)
        return int(np.any(self.evaluate(hi) < self.evaluate(lo), axis=-1).sum())

    def to_dict(self):
        return {"observable": list(self.observable),
                "primitives": [p.to_dict() for p in self.primitives],
                "derived": [d.to_dict() for d in self.derived]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Primitive.from_dict(p) for p in d["primitives"]),
                   tuple(d.get("observable", (0,))),
                   tuple(Derived(x["name"], x["kind"], tuple(x["refs"]), x.get("shift", 0.0))
                         for x in d.get("derived", ())))


def mean_variance_spec(index=0, shift=0.0, observable=None, scale=1.0):
    """Mean of one coordinate and its second moment about ``shift``, plus variance and sd."""
    observable = tuple(observable) if observable is not None else (index,)
    j = observable.index(index)
    m1 = coordinate(j, name="mean")
    m2 = power(j, 2, shift, name="m2")
    return MomentSpec((m1, m2), observable,
                      (Derived("variance", "variance", ("mean", "m2"), shift),
                       Derived("sd", "std", ("mean", "m2"), shift)))


def scaled_level_spec(scale=0.1, index=0):
    """Single primitive ``scale * s_index``, e.g. ``s/10`` on the threshold map."""
    return MomentSpec((coordinate(0, scale=scale, name="level"),), (index,))


@dataclass
class MomentVector:
    values: np.ndarray
    n_used: int
    std_errors: np.ndarray | None = None
    names: tuple = ()
    spread: np.ndarray | None = None
    replications: np.ndarray | None = None

    def __post_init__(self):
        if self.n_used < 1:
            raise DomainError("n_used must be >= 1")


def sample_moments(path, spec: MomentSpec, burn: int = 0) -> MomentVector:
    """Mean of each primitive over steps ``burn + 1 .. N`` of the path."""
    states = getattr(path, "states", path)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if burn < 0 or burn >= states.shape[0]:
        raise DomainError(f"empty averaging window: burn={burn}, path length={states.shape[0]}")
    vals = spec.evaluate(states[burn:])
    return MomentVector(vals.mean(axis=0), states.shape[0] - burn, names=tuple(spec.primitive_names))


def path_statistics(prim_values, spec: MomentSpec, n_batches: int = 20):
    """Statistics of a run of primitive values ``(n, p)`` and their batch-means standard errors.

    The run is cut into ``n_batches`` contiguous batches of near-equal length;
    the standard error of each statistic is the spread of its batch values
    over ``sqrt(n_batches)``.
    """
    prim_values = np.asarray(prim_values, dtype=float)
    if n_batches < 2 or prim_values.shape[0] < n_batches:
        raise DomainError(f"need at least 2 batches and one row per batch, got {n_batches} batches "
                          f"for {prim_values.shape[0]} rows")
    stats = spec.statistics(prim_values.mean(axis=0))
    batches = np.array([spec.statistics(b.mean(axis=0)) for b in np.array_split(prim_values, n_batches)])
    return stats, batches.std(axis=0, ddof=1) / np.sqrt(n_batches)


def initial_conditions(box: Box, R: int) -> np.ndarray:
    """``R`` starts on the diagonal of the box, both corners included."""
    t = np.linspace(0.0, 1.0, R)[:, None]
    return box.lower + t * box.width


def oracle_batch(phi: TransitionMap, thetas, spec: MomentSpec, n_oracle: int, burn: int, R: int,
                 seed: int, s0s=None):
    """Replicated long-run averages for many thetas at once.

    Returns ``(means, std_errors, spread, reps)`` with shapes ``(M, p)`` and
    ``reps`` of shape ``(M, R, p)``. Replication r uses stream r of ``seed``
    and the r-th start of :func:`initial_conditions`; all thetas share them.
    """
    if R < 2:
        raise DomainError("oracle needs R >= 2 replications")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    streams = [ShockStream(seed, phi.shock_spec.dim, r) for r in range(R)]
    s0 = initial_conditions(phi.state_box, R) if s0s is None else np.asarray(s0s, dtype=float)
    res = run_chains(phi, thetas, s0[None], streams, n_oracle + burn, observe=spec.evaluate, burn=burn)
    reps = res.means
    means = reps.mean(axis=1)
    se = reps.std(axis=1, ddof=1) / np.sqrt(R)
    spread = reps.max(axis=1) - reps.min(axis=1)
    return means, se, spread, reps


def oracle_expectation(phi: TransitionMap, theta, spec: MomentSpec, n_oracle=10 ** 6, burn=10 ** 4,
                       R=8, seed=0) -> MomentVector:
    """Approximate ``E_theta(f)`` under the invariant law by replicated long runs.

    ``spread`` (max minus min across replications) doubles as a uniqueness
    diagnostic: distinct starts converging to distinct limits show up there.
    """
    theta = phi.param_box.check(theta)
    means, se, spread, reps = oracle_batch(phi, theta[None], spec, n_oracle, burn, R, seed)
    return MomentVector(means[0], n_oracle, se[0], tuple(spec.primitive_names), spread[0], reps[0])


@dataclass
class DistanceResult:
    value: float
    std_error: float
    argmax: np.ndarray
    n_points: int
    mc_draws: int


def map_distance(map1: TransitionMap, map2: TransitionMap, theta, s_points, mc_draws=20_000, seed=0,
                 chunk=64) -> DistanceResult:
    """Max over ``s_points`` of ``E_eps || map1(s, eps) - map2(s, eps) ||_max``.

    One shock sample is shared by every point and both maps.
    """
    s_points = np.atleast_2d(np.asarray(s_points, dtype=float))
    if s_points.shape[0] == 0:
        raise DomainError("s_points must be nonempty")
    if mc_draws < 1:
        raise DomainError("mc_draws must be >= 1")
    theta = map1.param_box.check(theta)
    st = ShockStream(seed, map1.shock_spec.dim)
    eps = map1.shock_spec.transform(st.matrix(mc_draws), theta)
    means = np.empty(s_points.shape[0])
    sds = np.empty(s_points.shape[0])
    for i in range(0, s_points.shape[0], chunk):
        s = s_points[i:i + chunk, None, :]
        diff = np.abs(map1.step(s, eps[None], theta) - map2.step(s, eps[None], theta)).max(axis=-1)
        means[i:i + chunk] = diff.mean(axis=1)
        sds[i:i + chunk] = diff.std(axis=1)
    j = int(np.argmax(means))
    return DistanceResult(float(means[j]), float(sds[j] / np.sqrt(mc_draws)), s_points[j].copy(),
                          s_points.shape[0], mc_draws)
