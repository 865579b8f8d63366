"""Shock laws as increasing quantile transforms, and seeded uniform streams.

A shock vector is produced from a vector of base uniforms ``u`` in (0, 1)
through a strictly increasing quantile function. Parameters of the shock
law that depend on theta enter only through this transform, so one base
stream can be reused for every theta (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DomainError

FAMILIES = {
    "uniform": ("lo", "hi"),
    "gaussian": ("mean", "sd"),
    "truncated_gaussian": ("mean", "sd", "lo", "hi"),
    # test-only: every quantile maps to the same value
    "degenerate": ("value",),
}


@dataclass(frozen=True)
class Shock:
    """One coordinate of the shock vector.

    ``link`` maps a parameter name of the family to an index of theta; that
    parameter is then read from theta instead of ``params``.
    """

    family: str
    params: dict = field(default_factory=dict)
    link: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown shock family {self.family!r}; valid: {sorted(FAMILIES)}")
        names = FAMILIES[self.family]
        for key in list(self.params) + list(self.link):
            if key not in names:
                raise ConfigError(f"shock family {self.family!r} has no parameter {key!r}")
        missing = [n for n in names if n not in self.params and n not in self.link]
        if missing:
            raise ConfigError(f"shock family {self.family!r} is missing {missing}")
        p = self.params
        if "sd" in p and not p["sd"] > 0:
            raise DomainError(f"shock sd must be > 0, got {p['sd']}")
        if "lo" in p and "hi" in p and not p["lo"] < p["hi"]:
            raise DomainError(f"shock needs lo < hi, got {p['lo']}, {p['hi']}")

    def _param(self, name, theta):
        if name in self.link:
            return theta[..., self.link[name]]
        return self.params[name]

    def quantile(self, u, theta):
        f = self.family
        if f == "uniform":
            lo, hi = self._param("lo", theta), self._param("hi", theta)
            return lo + (hi - lo) * u
        if f == "gaussian":
            return self._param("mean", theta) + self._param("sd", theta) * ndtri(u)
        if f == "truncated_gaussian":
            mean, sd = self._param("mean", theta), self._param("sd", theta)
            lo, hi = self._param("lo", theta), self._param("hi", theta)
            plo, phi = ndtr((lo - mean) / sd), ndtr((hi - mean) / sd)
            return np.clip(mean + sd * ndtri(plo + u * (phi - plo)), lo, hi)
        return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(theta)[:-1])) + self.params["value"]

    def to_dict(self):
        out = {"family": self.family, "params": dict(self.params)}
        if self.link:
            out["link"] = dict(self.link)
        return out


@dataclass(frozen=True)
class ShockSpec:
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ConfigError("shock spec needs at least one coordinate")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def linked_indices(self):
        return sorted({i for c in self.coords for i in c.link.values()})

    def transform(self, u, theta):
        """Map base uniforms ``u[..., dim]`` to shocks, broadcasting with ``theta[..., l]``."""
        u = np.asarray(u, dtype=float)
        theta = np.asarray(theta, dtype=float)
        cols = [c.quantile(u[..., i], theta) for i, c in enumerate(self.coords)]
        shape = np.broadcast_shapes(*(np.shape(c) for c in cols))
        return np.stack([np.broadcast_to(c, shape) for c in cols], axis=-1)

    def median(self, theta):
        return self.transform(np.full(self.dim, 0.5), theta)


def gaussian(mean=0.0, sd=1.0, link=None):
    return Shock("gaussian", {"mean": mean, "sd": sd} if not link else {"mean": mean}, link or {})


def uniform(lo, hi):
    return Shock("uniform", {"lo": lo, "hi": hi})


def truncated_gaussian(mean, sd, lo, hi):
    return Shock("truncated_gaussian", {"mean": mean, "sd": sd, "lo": lo, "hi": hi})


def degenerate(value=0.0):
    return Shock("degenerate", {"value": value})


_TWO_53 = float(2 ** 53)


@dataclass(frozen=True)
class ShockStream:
    """Reproducible sequence of base uniforms in the open interval (0, 1).

    Streams with the same ``seed`` but different ``stream_id`` are drawn from
    independent PCG64 generators spawned from one ``SeedSequence``. Reading
    is sequential, so a stream of length N is a prefix of any longer stream
    with the same identity.
    """

    seed: int
    dim: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def blocks(self, length: int, block: int = 4096):
        """Yield consecutive ``(n, dim)`` blocks covering ``length`` draws."""
        rng = self.generator()
        done = 0
        while done < length:
            n = min(block, length - done)
            yield _open_uniforms(rng, (n, self.dim))
            done += n

    def matrix(self, length: int) -> np.ndarray:
        if length <= 0:
            return np.empty((0, self.dim))
        return np.concatenate(list(self.blocks(length)), axis=0)

    def child(self, stream_id: int) -> "ShockStream":
        return ShockStream(self.seed, self.dim, stream_id)


def _open_uniforms(rng, shape):
    # integers on [0, 2^53) shifted by one half: never exactly 0 or 1
    return (rng.integers(0, 2 ** 53, size=shape, dtype=np.int64) + 0.5) / _TWO_53
