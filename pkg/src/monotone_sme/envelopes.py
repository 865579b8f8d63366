"""Majorizing and minorizing maps built by shifting along the unit vector.

The majorant is ``proj[phi(proj[s + k e], eps, theta) + k e]`` and the
minorant ``proj[phi(proj[s - k e], eps, theta) - k e]``; both inherit
monotonicity in ``s`` from ``phi`` because the clamp preserves order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .models import ParameterBox, TransitionMap
from .state_space import project

MAJORANT = "majorant"
MINORANT = "minorant"


@dataclass(frozen=True, eq=False)
class EnvelopeMap(TransitionMap):
    base: TransitionMap
    kappa: float
    side: str

    def __post_init__(self):
        if not self.kappa >= 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.side not in (MAJORANT, MINORANT):
            raise DomainError(f"side must be {MAJORANT!r} or {MINORANT!r}, got {self.side!r}")

    @property
    def state_box(self):
        return self.base.state_box

    @property
    def shock_spec(self):
        return self.base.shock_spec

    @property
    def param_box(self):
        return self.base.param_box

    @property
    def name(self):
        return f"{self.base.name}^{self.side}({self.kappa:g})"

    @property
    def monotone(self):
        return self.base.monotone

    def raw(self, s, eps, theta):
        shift = self.kappa if self.side == MAJORANT else -self.kappa
        if shift == 0:
            return self.base.raw(s, eps, theta)
        inner = project(self.state_box, np.asarray(s, dtype=float) + shift)
        return self.base.step(inner, eps, theta) + shift


@dataclass(frozen=True, eq=False)
class ShiftFamily(TransitionMap):
    """Majorants and minorants of one map as a single family.

    The parameter is ``(theta, shift)``: a positive shift gives the majorant
    with ``kappa = shift``, a negative one the minorant with ``kappa = -shift``
    and zero the map itself. Outputs match :class:`EnvelopeMap` bit for bit,
    so many envelopes can run side by side in one batch.
    """

    base: TransitionMap
    max_shift: float

    @property
    def state_box(self):
        return self.base.state_box

    @property
    def shock_spec(self):
        return self.base.shock_spec

    @property
    def param_box(self):
        pb = self.base.param_box
        return ParameterBox(np.append(pb.lower, -self.max_shift), np.append(pb.upper, self.max_shift),
                            tuple(pb.names) + ("shift",))

    @property
    def name(self):
        return f"{self.base.name}^shift"

    def raw(self, s, eps, theta):
        theta = np.asarray(theta, dtype=float)
        shift = theta[..., -1:]
        inner = project(self.state_box, np.asarray(s, dtype=float) + shift)
        return self.base.step(inner, eps, theta[..., :-1]) + shift


def majorize(phi: TransitionMap, kappa: float) -> EnvelopeMap:
    return EnvelopeMap(phi, float(kappa), MAJORANT)


def minorize(phi: TransitionMap, kappa: float) -> EnvelopeMap:
    return EnvelopeMap(phi, float(kappa), MINORANT)


@dataclass
class DominanceReport:
    kappa: float
    n_samples: int
    violations: int
    worst: float
    witness: dict | None = None
    equal_everywhere: bool = False

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _sample_inputs(phi, rng, n):
    box = phi.state_box
    s = box.lower + rng.random((n, box.dim)) * box.width
    # include the faces of the box, where the projections bind
    face = rng.random((n, box.dim))
    s = np.where(face < 0.05, box.lower, np.where(face > 0.95, box.upper, s))
    theta = phi.param_box.sample(rng, n)
    u = (rng.integers(0, 2 ** 53, size=(n, phi.shock_spec.dim)) + 0.5) / 2.0 ** 53
    return s, u, theta


def check_dominance(phi: TransitionMap, kappa: float, n_samples: int, seed: int) -> DominanceReport:
    """Check ``majorant >= phi >= minorant`` exactly on random ``(s, eps, theta)``."""
    if not kappa >= 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    rng = np.random.default_rng(seed)
    s, u, theta = _sample_inputs(phi, rng, n_samples)
    eps = phi.shock_spec.transform(u, theta)
    base = phi.step(s, eps, theta)
    up = majorize(phi, kappa).step(s, eps, theta)
    down = minorize(phi, kappa).step(s, eps, theta)
    gap = np.maximum((base - up).max(axis=-1), (down - base).max(axis=-1))
    bad = gap > 0
    witness = None
    if bad.any():
        i = int(np.argmax(gap))
        witness = {"s": s[i].tolist(), "eps": eps[i].tolist(), "theta": theta[i].tolist(),
                   "majorant": up[i].tolist(), "base": base[i].tolist(), "minorant": down[i].tolist()}
    equal = bool(np.array_equal(up, base) and np.array_equal(down, base))
    return DominanceReport(float(kappa), n_samples, int(bad.sum()), float(max(gap.max(), 0.0)),
                           witness, equal)


@dataclass
class NeighborhoodReport:
    theta: list
    kappa: float
    radii: list
    violations: list
    witness: dict | None
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(v == 0 for v in self.violations)

    @property
    def largest_passing_radius(self) -> float:
        best = 0.0
        for r, v in zip(self.radii, self.violations):
            if v:
                break
            best = r
        return best


def check_parameter_neighborhood(phi: TransitionMap, theta, kappa: float, radius, n_samples: int,
                                 seed: int) -> NeighborhoodReport:
    """Sampled check of ``phi^k(., ., theta) >= phi(., ., theta') >= phi_k(., ., theta)``.

    ``theta'`` ranges over the max-norm ball of the given radius around
    ``theta`` intersected with the parameter box. ``radius`` may be a single
    value or an increasing sequence; the report gives violation counts per
    radius and the largest radius (from the start of the sequence) that
    passed.
    """
    theta = phi.param_box.check(theta)
    radii = sorted(float(r) for r in np.atleast_1d(radius))
    if radii[0] < 0:
        raise DomainError("radius must be >= 0")
    rng = np.random.default_rng(seed)
    up_map, down_map = majorize(phi, kappa), minorize(phi, kappa)
    violations, witness = [], None
    for r in radii:
        s, u, _ = _sample_inputs(phi, rng, n_samples)
        lo = phi.param_box.clip(theta - r)
        hi = phi.param_box.clip(theta + r)
        theta_p = lo + rng.random((n_samples, theta.size)) * (hi - lo)
        # one base uniform per sample; each map reads it through its own theta
        eps = phi.shock_spec.transform(u, theta)
        up = up_map.step(s, eps, theta)
        down = down_map.step(s, eps, theta)
        mid = phi.step(s, phi.shock_spec.transform(u, theta_p), theta_p)
        gap = np.maximum((mid - up).max(axis=-1), (down - mid).max(axis=-1))
        bad = gap > 0
        violations.append(int(bad.sum()))
        if bad.any() and witness is None:
            i = int(np.argmax(gap))
            witness = {"radius": r, "s": s[i].tolist(), "eps": eps[i].tolist(),
                       "theta_prime": theta_p[i].tolist(), "majorant": up[i].tolist(),
                       "base": mid[i].tolist(), "minorant": down[i].tolist()}
    return NeighborhoodReport(theta.tolist(), float(kappa), radii, violations, witness, n_samples)


def check_nesting(phi: TransitionMap, kappas, n_samples: int, seed: int) -> int:
    """Count samples where a larger kappa gives a smaller majorant (or larger minorant)."""
    kappas = sorted(kappas)
    rng = np.random.default_rng(seed)
    s, u, theta = _sample_inputs(phi, rng, n_samples)
    eps = phi.shock_spec.transform(u, theta)
    ups = [majorize(phi, k).step(s, eps, theta) for k in kappas]
    downs = [minorize(phi, k).step(s, eps, theta) for k in kappas]
    bad = 0
    for a, b in zip(ups, ups[1:]):
        bad += int(np.any(b < a, axis=-1).sum())
    for a, b in zip(downs, downs[1:]):
        bad += int(np.any(b > a, axis=-1).sum())
    return bad


__all__ = ["EnvelopeMap", "ShiftFamily", "majorize", "minorize", "check_dominance", "check_parameter_neighborhood",
           "check_nesting", "DominanceReport", "NeighborhoodReport"]
