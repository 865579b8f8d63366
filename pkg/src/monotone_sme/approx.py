"""Lattice interpolants of a map in the state and the approximation study.

The interpolant calls the true map at the lattice nodes with the queried
``(eps, theta)`` and interpolates multilinearly in ``s`` only. Each 1-D
interpolation step is written as ``a + w (b - a)`` clipped to the segment
``[min(a, b), max(a, b)]``; in floating point this keeps the interpolant
exactly equal to the map on the nodes and exactly increasing in ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooLarge
from .estimator import DistanceSpec, OracleConfig, SearchConfig, grid_search_many
from .models import ParameterBox, TransitionMap
from .moments import map_distance, oracle_batch
from .state_space import MAX_GRID_POINTS, axis_nodes, lattice_grid, latin_hypercube

MAX_NODES = 1 << 16


def _lerp(a, b, w):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.clip(a + w * (b - a), lo, hi)


@dataclass(frozen=True, eq=False)
class InterpolatedMap(TransitionMap):
    base: TransitionMap
    points_per_dim: int
    nodes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.points_per_dim < 2:
            raise ValueError("points_per_dim must be >= 2")
        total = self.points_per_dim ** self.base.k
        if total > MAX_NODES:
            raise GridTooLarge(f"interpolation lattice {self.points_per_dim}^{self.base.k} = {total} "
                               f"exceeds cap {MAX_NODES}")
        object.__setattr__(self, "nodes", tuple(axis_nodes(self.base.state_box, self.points_per_dim)))

    state_box = property(lambda self: self.base.state_box)
    shock_spec = property(lambda self: self.base.shock_spec)
    param_box = property(lambda self: self.base.param_box)
    name = property(lambda self: f"{self.base.name}@{self.points_per_dim}")

    def _locate(self, s):
        idx, wts = [], []
        for j, x in enumerate(self.nodes):
            sj = s[..., j]
            i = np.clip(np.searchsorted(x, sj, side="right") - 1, 0, len(x) - 2)
            w = np.clip((sj - x[i]) / (x[i + 1] - x[i]), 0.0, 1.0)
            idx.append(i)
            wts.append(w)
        return idx, wts

    def raw(self, s, eps, theta):
        s = np.asarray(s, dtype=float)
        idx, wts = self._locate(s)
        return _multilinear(self.base, eps, theta, wts,
                            [lambda b, j=j: self.nodes[j][idx[j] + b] for j in range(self.k)])


def _multilinear(base, eps, theta, wts, node_at):
    """Blend ``base`` at the ``2**k`` surrounding nodes; ``node_at[j](bit)`` gives axis-j node coordinates."""
    k = len(wts)
    # corner c has bit j set when it takes the upper node along axis j
    vals = {}
    for c in range(1 << k):
        corner = np.stack([node_at[j]((c >> j) & 1) for j in range(k)], axis=-1)
        vals[c] = base.step(corner, eps, theta)
    # reduce along axis 0 first, then 1, ...; w broadcast over the output coordinates
    for j in range(k):
        w = wts[j][..., None]
        vals = {c: _lerp(vals[c], vals[c | (1 << j)], w) for c in vals if not (c >> j) & 1}
    return vals[0]


@dataclass(frozen=True, eq=False)
class InterpolantFamily(TransitionMap):
    """Interpolants of one map at several resolutions, run side by side.

    The parameter is ``(theta, r)`` where ``r`` indexes ``resolutions``.
    Outputs match :class:`InterpolatedMap` at that resolution bit for bit.
    """

    base: TransitionMap
    resolutions: tuple
    tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolutions)
        for r in res:
            InterpolatedMap(self.base, r)  # validates size
        object.__setattr__(self, "resolutions", res)
        width = max(res)
        tables = []
        for j in range(self.base.k):
            tab = np.full((len(res), width), np.inf)
            for i, r in enumerate(res):
                tab[i, :r] = axis_nodes(self.base.state_box, r)[j]
            tables.append(tab)
        object.__setattr__(self, "tables", tuple(tables))

    state_box = property(lambda self: self.base.state_box)
    shock_spec = property(lambda self: self.base.shock_spec)
    name = property(lambda self: f"{self.base.name}@{list(self.resolutions)}")

    @property
    def param_box(self):
        pb = self.base.param_box
        return ParameterBox(np.append(pb.lower, 0.0), np.append(pb.upper, len(self.resolutions) - 1.0),
                            tuple(pb.names) + ("resolution",))

    def raw(self, s, eps, theta):
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        r = theta[..., -1].astype(np.intp)
        n = np.asarray(self.resolutions)[r]
        box = self.state_box
        idx, wts = [], []
        for j, tab in enumerate(self.tables):
            sj = s[..., j]
            # uniform-spacing guess, then step to the node bracket used by searchsorted
            i = np.clip(np.floor((sj - box.lower[j]) / box.width[j] * (n - 1)).astype(np.intp), 0, n - 2)
            i = np.maximum(i - (tab[r, i] > sj), 0)
            i = i + ((tab[r, i + 1] <= sj) & (i < n - 2))
            x0, x1 = tab[r, i], tab[r, i + 1]
            idx.append(i)
            wts.append(np.clip((sj - x0) / (x1 - x0), 0.0, 1.0))
        return _multilinear(self.base, eps, theta[..., :-1], wts,
                            [lambda b, j=j: self.tables[j][r, idx[j] + b] for j in range(self.k)])


def build_interpolant(phi: TransitionMap, points_per_dim: int) -> InterpolatedMap:
    return InterpolatedMap(phi, int(points_per_dim))


def distance_points(phi: TransitionMap, resolutions, seed=0, refine=4, lhs_points=1024):
    """Points for the max over S: a lattice ``refine`` times finer than the finest
    interpolation lattice (k <= 2), a Latin hypercube otherwise."""
    box = phi.state_box
    if box.dim <= 2:
        per_dim = (max(resolutions) - 1) * refine + 1
        if per_dim ** box.dim <= MAX_GRID_POINTS:
            return lattice_grid(box, per_dim)
    return latin_hypercube(box, lhs_points, np.random.default_rng(seed))


@dataclass
class ErrorRow:
    resolution: int
    d: float
    std_error: float
    theta: np.ndarray
    argmax: np.ndarray


def approx_error_curve(phi: TransitionMap, theta_probe, resolutions, mc_draws=20_000, seed=0, s_points=None):
    """``d_j = max_theta d(phi, phi^j)`` for each lattice resolution ``j``."""
    resolutions = [int(r) for r in resolutions]
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be increasing")
    theta_probe = np.atleast_2d(np.asarray(theta_probe, dtype=float))
    if s_points is None:
        s_points = distance_points(phi, resolutions, seed)
    rows = []
    for j in resolutions:
        interp = build_interpolant(phi, j)
        best = None
        for th in theta_probe:
            r = map_distance(phi, interp, th, s_points, mc_draws, seed)
            if best is None or r.value > best[0].value:
                best = (r, th)
        rows.append(ErrorRow(j, best[0].value, best[0].std_error, best[1].copy(), best[0].argmax))
    return rows


@dataclass
class ApproxEstimateRow:
    resolution: int
    theta: np.ndarray
    error: np.ndarray
    objective: float
    spread: float


def approx_estimation_study(phi: TransitionMap, spec, distance: DistanceSpec, theta0, oracle: OracleConfig,
                            search: SearchConfig, resolutions):
    """Population estimates ``theta^j`` under each interpolant, data moments from ``phi`` at ``theta0``.

    All resolutions are searched in lockstep and each grid level is simulated
    in one batch. ``spread`` is the largest across-start spread of the oracle
    moments under the interpolant at ``theta^j``; interpolants need not have a
    unique invariant law.
    """
    theta0 = phi.param_box.check(theta0)
    resolutions = [int(r) for r in resolutions]
    cols = distance.index(spec)
    means, _, _, _ = oracle_batch(phi, theta0[None], spec, oracle.n_oracle, oracle.burn, oracle.R, oracle.seed)
    target = spec.statistics(means)[0, cols]
    family = InterpolantFamily(phi, tuple(resolutions))

    def tag(thetas, r):
        return np.hstack([thetas, np.full((len(thetas), 1), float(r))])

    def tagged(grids):
        return np.vstack([tag(g, r) for r, g in enumerate(grids)])

    def run(thetas):
        m, _, spread, _ = oracle_batch(family, thetas, spec, oracle.n_oracle, oracle.burn, oracle.R, oracle.seed)
        return spec.statistics(m)[:, cols], spread

    def objectives(grids):
        stats, _ = run(tagged(grids))
        values = distance(stats, target)
        return np.split(values, np.cumsum([len(g) for g in grids])[:-1])

    polish = [lambda th, r=r: distance(run(tag(th, r))[0], target) for r in range(len(resolutions))]
    results = grid_search_many(objectives, phi.param_box, search, len(resolutions), polish)
    _, spreads = run(tagged([r.theta[None] for r in results]))
    rows = []
    for j, res, spread in zip(resolutions, results, spreads):
        rows.append(ApproxEstimateRow(j, res.theta, np.abs(res.theta - theta0), res.value, float(np.max(spread))))
    return rows, target
