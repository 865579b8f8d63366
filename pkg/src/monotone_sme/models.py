"""Random dynamical systems ``s' = phi(s, eps, theta)`` and a zoo of monotone maps.

Every map is written as a vectorised *rule* producing the unprojected next
state; the transition is the rule followed by the projection onto the state
box. All arrays carry arbitrary leading batch axes, with the state, shock and
parameter vectors on the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import shocks
from .errors import ConfigError, DimensionError, DomainError
from .shocks import ShockSpec
from .state_space import Box, point, project


@dataclass(frozen=True, eq=False)
class ParameterBox:
    """Compact parameter set; ``lower == upper`` in a coordinate pins it."""

    lower: np.ndarray
    upper: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        lo = point(self.lower, what="parameter lower bound")
        hi = point(self.upper, what="parameter upper bound")
        if lo.size != hi.size:
            raise DimensionError(lo.size, hi.size, "parameter upper bound")
        if not np.all(lo <= hi):
            raise DomainError(f"parameter box needs lower <= upper, got {lo.tolist()} / {hi.tolist()}")
        names = tuple(self.names) or tuple(f"theta_{i + 1}" for i in range(lo.size))
        if len(names) != lo.size:
            raise DimensionError(lo.size, len(names), "parameter names")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return self.lower.size

    def check(self, theta) -> np.ndarray:
        theta = point(theta, self.dim, "theta")
        if not (np.all(theta >= self.lower) and np.all(theta <= self.upper)):
            raise DomainError(f"theta {theta.tolist()} lies outside the parameter box "
                              f"{self.lower.tolist()} / {self.upper.tolist()}")
        return theta

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def clip(self, theta):
        return np.clip(theta, self.lower, self.upper)

    def sample(self, rng, n):
        return self.lower + rng.random((n, self.dim)) * (self.upper - self.lower)

    def midpoint(self):
        return 0.5 * (self.lower + self.upper)


class TransitionMap:
    """Shared behaviour of base maps, envelopes and interpolants.

    Subclasses provide ``state_box``, ``shock_spec``, ``param_box``, ``name``
    and ``raw``.
    """

    monotone = True

    def raw(self, s, eps, theta):
        raise NotImplementedError

    def step(self, s, eps, theta):
        return project(self.state_box, self.raw(s, eps, theta))

    def evaluate(self, s, eps, theta) -> np.ndarray:
        """Validated single-point evaluation of the transition."""
        s = self.state_box.check(s, "state")
        theta = self.param_box.check(theta)
        eps = point(eps, self.shock_spec.dim, "shock")
        return self.step(s, eps, theta)

    def shocks_from_uniforms(self, u, theta):
        return self.shock_spec.transform(u, theta)

    @property
    def k(self) -> int:
        return self.state_box.dim


@dataclass(frozen=True, eq=False)
class MarkovMap(TransitionMap):
    name: str
    state_box: Box
    shock_spec: ShockSpec
    param_box: ParameterBox
    rule: Callable = field(repr=False)
    monotone: bool = True
    defaults: tuple = ()
    state_names: tuple = ()

    def __post_init__(self):
        for i in self.shock_spec.linked_indices():
            if i >= self.param_box.dim:
                raise ConfigError(f"shock link refers to theta index {i}, but l = {self.param_box.dim}")
        if not self.state_names:
            object.__setattr__(self, "state_names",
                               tuple(f"s_{i + 1}" for i in range(self.state_box.dim)))
        if len(self.defaults):
            object.__setattr__(self, "defaults", tuple(self.param_box.check(self.defaults)))

    def raw(self, s, eps, theta):
        return self.rule(np.asarray(s, dtype=float), np.asarray(eps, dtype=float),
                         np.asarray(theta, dtype=float))

    @property
    def default_theta(self) -> np.ndarray:
        if self.defaults:
            return np.array(self.defaults)
        return self.param_box.midpoint()


def eval_map(phi: TransitionMap, s, eps, theta) -> np.ndarray:
    return phi.evaluate(s, eps, theta)


# --- zoo -----------------------------------------------------------------

THRESHOLD_LEVEL = 2.0
THRESHOLD_JUMP = 5.0


def _threshold_rule(s, eps, theta):
    t = s + eps[..., :1] + theta[..., :1]
    return np.where(t > THRESHOLD_LEVEL, t + THRESHOLD_JUMP, t)


def make_threshold_jump(lower=0.0, upper=10.0, theta_range=(-0.5, 0.5), sd=0.5):
    """Scalar map ``s + eps + theta``, plus 5 once the sum exceeds 2."""
    return MarkovMap(
        name="threshold",
        state_box=Box([lower], [upper]),
        shock_spec=ShockSpec([shocks.gaussian(0.0, sd)]),
        param_box=ParameterBox([theta_range[0]], [theta_range[1]], ("theta",)),
        rule=_threshold_rule,
        defaults=(0.0,),
    )


GROWTH_BETA = 0.95


def _log_growth_rule(x, eps, theta):
    alpha = theta[..., :1]
    return np.log(alpha * GROWTH_BETA) + alpha * x + eps[..., :1]


def make_log_growth():
    """Log capital of the stochastic growth model with full depreciation.

    ``x' = ln(alpha beta) + alpha x + sigma u`` with ``u`` standard normal and
    sigma read from theta through the shock link.
    """
    return MarkovMap(
        name="log-growth",
        state_box=Box([-6.0], [2.0]),
        shock_spec=ShockSpec([shocks.gaussian(0.0, link={"sd": 1})]),
        param_box=ParameterBox([0.1, 0.01], [0.9, 0.5], ("alpha", "sigma")),
        rule=_log_growth_rule,
        defaults=(0.3, 0.1),
        state_names=("x",),
    )


ADOPTION_PHI = 0.97


def _adoption_rule(s, eps, theta):
    lnx, z, a = s[..., 0], s[..., 1], s[..., 2]
    phi_x, lam = theta[..., 0], theta[..., 2]
    lnx_next = phi_x * lnx + eps[..., 0]
    z_next = ADOPTION_PHI * z + np.exp(lnx_next)
    # lam (z - a) + phi a, grouped so each term is a nonnegative multiple of one
    # coordinate; rounding is then monotone too
    a_next = lam * z + (ADOPTION_PHI - lam) * a
    return np.stack(np.broadcast_arrays(lnx_next, z_next, a_next), axis=-1)


def make_adoption_diffusion():
    """Technology arrival and adoption with a constant adoption probability.

    State ``(ln x, Z, A)``: log arrival rate, stock of created technologies
    and stock of adopted ones. theta = ``(phi_x, sigma_x, lambda)``.
    """
    return MarkovMap(
        name="adoption",
        state_box=Box([-4.0, 0.0, 0.0], [4.0, 600.0, 600.0]),
        shock_spec=ShockSpec([shocks.gaussian(0.0, link={"sd": 1})]),
        param_box=ParameterBox([0.1, 0.01, 0.01], [0.99, 0.5, 0.5], ("phi_x", "sigma_x", "lambda")),
        rule=_adoption_rule,
        defaults=(0.5, 0.1, 0.1),
        state_names=("lnx", "Z", "A"),
    )


def adoption_fixed_point(lam, phi=ADOPTION_PHI, x=1.0):
    """Deterministic steady state ``(Z*, A*)`` with the arrival rate frozen at ``x``."""
    z = x / (1.0 - phi)
    return z, lam * z / (1.0 - phi + lam)


def make_constant(c=0.5, lower=0.0, upper=1.0):
    c = float(c)

    def rule(s, eps, theta):
        return np.full(np.broadcast_shapes(np.shape(s), np.shape(eps)[:-1] + (1,),
                                           np.shape(theta)[:-1] + (1,)), c)

    return MarkovMap("constant", Box([lower], [upper]), ShockSpec([shocks.uniform(0.0, 1.0)]),
                     ParameterBox([0.0], [1.0], ("theta",)), rule)


def _decreasing_rule(s, eps, theta):
    return -s + eps[..., :1] + theta[..., :1]


def make_decreasing():
    """Order-reversing map, used to show the diagnostics catch a map that is not increasing."""
    return MarkovMap("decreasing", Box([-1.0], [1.0]), ShockSpec([shocks.uniform(-0.1, 0.1)]),
                     ParameterBox([-0.1], [0.1], ("theta",)), _decreasing_rule, monotone=False)


def _bistable_rule(s, eps, theta):
    return 2.0 * s - 0.5 + eps[..., :1] + theta[..., :1]


def make_bistable():
    """Monotone map with two absorbing clamp regions (no unique invariant law)."""
    return MarkovMap("bistable", Box([0.0], [1.0]), ShockSpec([shocks.uniform(-0.1, 0.1)]),
                     ParameterBox([-0.05], [0.05], ("theta",)), _bistable_rule, defaults=(0.0,))


ZOO = {
    "threshold": make_threshold_jump,
    "log-growth": make_log_growth,
    "adoption": make_adoption_diffusion,
    "constant": make_constant,
    "decreasing": make_decreasing,
    "bistable": make_bistable,
}

MONOTONE_ZOO = ("threshold", "log-growth", "adoption")


def get_model(name: str, **overrides) -> MarkovMap:
    try:
        factory = ZOO[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; valid: {sorted(ZOO)}") from None
    return factory(**overrides)


# --- monotonicity and Feller diagnostics -----------------------------------

@dataclass
class MonotoneReport:
    n_pairs: int
    violations: int
    worst: float
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def ordered_pairs(box: Box, rng, n):
    """``n`` pairs ``hi >= lo`` in the box, with exact ties in some coordinates."""
    lo = box.lower + rng.random((n, box.dim)) * box.width
    delta = rng.random((n, box.dim)) * box.width * rng.choice([0.0, 0.01, 0.1, 1.0], size=(n, box.dim))
    return project(box, lo + delta), lo


def check_monotone(phi: TransitionMap, n_pairs: int, seed: int, thetas=None) -> MonotoneReport:
    """Sample ordered pairs ``s >= s'`` and test ``phi(s) >= phi(s')``.

    Each pair gets its own shock and theta; ``thetas`` restricts theta to the
    given rows (cycled over pairs).
    """
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    hi, lo = ordered_pairs(phi.state_box, rng, n_pairs)
    if thetas is None:
        theta = phi.param_box.sample(rng, n_pairs)
    else:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        theta = thetas[np.arange(n_pairs) % len(thetas)]
    u = rng.random((n_pairs, phi.shock_spec.dim)) * (1 - 2e-12) + 1e-12
    eps = phi.shock_spec.transform(u, theta)
    gap = phi.step(lo, eps, theta) - phi.step(hi, eps, theta)
    worst_per_pair = gap.max(axis=-1)
    bad = worst_per_pair > 0
    witness = None
    if bad.any():
        i = int(np.argmax(worst_per_pair))
        witness = {"s_high": hi[i].tolist(), "s_low": lo[i].tolist(), "eps": eps[i].tolist(),
                   "theta": theta[i].tolist(), "phi_high": phi.step(hi[i], eps[i], theta[i]).tolist(),
                   "phi_low": phi.step(lo[i], eps[i], theta[i]).tolist()}
    return MonotoneReport(n_pairs, int(bad.sum()), float(max(worst_per_pair.max(), 0.0)), witness)


@dataclass
class FellerReport:
    steps: np.ndarray
    gaps: np.ndarray
    tol: float

    @property
    def decays(self) -> bool:
        return bool(self.gaps[-1] <= self.tol)


def check_feller(phi: TransitionMap, f, theta, s, n_dirs=8, mc_draws=20_000, seed=0,
                 n_steps=12, tol=1e-2) -> FellerReport:
    """Finite-difference look at the Feller property at one state.

    For steps ``h_j = 2**-j`` and random unit directions ``d`` computes
    ``|mean f(phi(s + h_j d, eps)) - mean f(phi(s, eps))|`` with one shared shock
    sample, maximised over directions and components of ``f``.
    """
    f = getattr(f, "evaluate", f)  # callable: states[..., k] -> values[..., p]
    theta = phi.param_box.check(theta)
    s = phi.state_box.check(s, "state")
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, phi.k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = (rng.integers(0, 2 ** 53, size=(mc_draws, phi.shock_spec.dim)) + 0.5) / 2.0 ** 53
    eps = phi.shock_spec.transform(u, theta)
    base = f(phi.step(s, eps, theta)).mean(axis=0)
    steps = 2.0 ** -np.arange(1, n_steps + 1)
    gaps = np.empty(n_steps)
    for j, h in enumerate(steps):
        moved = project(phi.state_box, s + h * dirs)
        vals = f(phi.step(moved[:, None, :], eps[None], theta))
        vals = vals.reshape(n_dirs, mc_draws, -1).mean(axis=1)
        gaps[j] = np.max(np.abs(vals - base))
    return FellerReport(steps, gaps, tol)
