"""Path simulation under common random numbers.

The engine advances a rectangular batch of chains: ``M`` parameter vectors
times ``R`` shock streams. Chains that share a stream index see the same
base uniforms whatever their theta, which is what makes simulated averages
a deterministic function of theta for a fixed stream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .envelopes import majorize, minorize
from .errors import DomainError
from .models import TransitionMap
from .shocks import ShockStream
from .state_space import project

BLOCK = 2048


@dataclass
class ChainResult:
    """Output of :func:`run_chains`; arrays are indexed ``[m, r, ...]``."""

    final: np.ndarray
    sums: np.ndarray | None
    n_used: int
    clamp_counts: np.ndarray | None = None
    states: np.ndarray | None = None  # (N, M, R, k)
    prefix: np.ndarray | None = None  # (len(checkpoints), M, R, p), running means
    checkpoints: tuple = ()
    running: np.ndarray | None = None  # (N - burn, M, R, p), running mean after every step

    @property
    def means(self) -> np.ndarray:
        return self.sums / self.n_used


def _stack_blocks(iters):
    return np.stack([next(it) for it in iters], axis=1)


def run_chains(phi: TransitionMap, thetas, s0, streams, n_steps: int, observe=None, burn: int = 0,
               keep_states=False, checkpoints=(), count_clamps=False, keep_running=False,
               block: int = BLOCK) -> ChainResult:
    """Advance ``M x R`` chains for ``n_steps`` steps.

    Parameters
    ----------
    thetas : array (M, l)
    s0 : array broadcastable to (M, R, k)
    streams : sequence of R ShockStream
    observe : callable ``states[..., k] -> values[..., p]``; its values are
        summed over steps ``burn + 1 .. n_steps``.
    checkpoints : step counts N at which the running mean over steps
        ``burn + 1 .. N`` is recorded (``observe`` required).
    keep_running : record that running mean after every step.
    """
    if n_steps < 1:
        raise DomainError("N must be >= 1")
    if burn < 0 or burn >= n_steps:
        raise DomainError(f"burn must satisfy 0 <= burn < N, got burn={burn}, N={n_steps}")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    M, R, k = thetas.shape[0], len(streams), phi.k
    for st in streams:
        if st.dim != phi.shock_spec.dim:
            raise DomainError(f"stream dimension {st.dim} != shock dimension {phi.shock_spec.dim}")
    s = np.array(np.broadcast_to(np.asarray(s0, dtype=float), (M, R, k)))
    th = thetas[:, None, :]
    checkpoints = tuple(sorted(int(c) for c in checkpoints))
    if checkpoints and (checkpoints[0] <= burn or checkpoints[-1] > n_steps):
        raise DomainError("checkpoints must lie in (burn, N]")
    iters = [st.blocks(n_steps, block) for st in streams]
    states = np.empty((n_steps, M, R, k)) if keep_states else None
    clamps = np.zeros((M, R), dtype=np.int64) if count_clamps else None
    sums = None
    prefix = []
    running = []
    done = 0
    buf = np.empty((block, M, R, k))
    while done < n_steps:
        u = _stack_blocks(iters)  # (n, R, d)
        n = u.shape[0]
        eps = phi.shock_spec.transform(u[:, None, :, :], th[None])
        eps = np.broadcast_to(eps, (n, M, R, eps.shape[-1]))
        for t in range(n):
            if count_clamps:
                raw = phi.raw(s, eps[t], th)
                s = project(phi.state_box, raw)
                clamps += np.any(raw != s, axis=-1)
            else:
                s = phi.step(s, eps[t], th)
            buf[t] = s
        if keep_states:
            states[done:done + n] = buf[:n]
        if observe is not None:
            lo = max(burn - done, 0)
            if lo < n:
                vals = observe(buf[lo:n])
                csum = np.cumsum(vals, axis=0)
                base = sums if sums is not None else 0.0
                if keep_running:
                    count = np.arange(done + lo + 1, done + n + 1) - burn
                    running.append((base + csum) / count.reshape((-1,) + (1,) * (csum.ndim - 1)))
                for c in checkpoints:
                    if done + lo < c <= done + n:
                        prefix.append((base + csum[c - done - lo - 1]) / (c - burn))
                sums = base + csum[-1]
        done += n
    return ChainResult(final=s, sums=sums, n_used=n_steps - burn, clamp_counts=clamps, states=states,
                       prefix=np.array(prefix) if checkpoints else None, checkpoints=checkpoints,
                       running=np.concatenate(running) if keep_running else None)


@dataclass
class Path:
    states: np.ndarray
    s0: np.ndarray
    theta: np.ndarray
    stream: ShockStream
    clamp_count: int
    model: str = ""

    def __len__(self):
        return self.states.shape[0]

    def recount_clamps(self, phi: TransitionMap) -> int:
        """Recount projection events by replaying the stored path."""
        prev = np.vstack([self.s0[None], self.states[:-1]])
        u = self.stream.matrix(len(self))
        eps = phi.shock_spec.transform(u, self.theta)
        raw = phi.raw(prev, eps, self.theta)
        return int(np.any(raw != project(phi.state_box, raw), axis=-1).sum())


def simulate_path(phi: TransitionMap, s0, stream: ShockStream, theta, n_steps: int) -> Path:
    """``s_n = phi(s_{n-1}, eps_n, theta)`` for ``n = 1..N`` on one stream."""
    s0 = phi.state_box.check(s0, "s0")
    theta = phi.param_box.check(theta)
    res = run_chains(phi, theta[None], s0, [stream], n_steps, keep_states=True, count_clamps=True)
    return Path(res.states[:, 0, 0, :], s0, theta, stream, int(res.clamp_counts[0, 0]), phi.name)


def simulate_sandwich(phi: TransitionMap, kappa: float, s0, stream: ShockStream, theta, theta_center,
                      n_steps: int):
    """Majorant path at ``theta_center``, base path at ``theta``, minorant at ``theta_center``.

    All three start from ``s0`` and read the same base uniforms.
    """
    up = simulate_path(majorize(phi, kappa), s0, stream, theta_center, n_steps)
    mid = simulate_path(phi, s0, stream, theta, n_steps)
    down = simulate_path(minorize(phi, kappa), s0, stream, theta_center, n_steps)
    return up, mid, down


def order_violations(upper: np.ndarray, lower: np.ndarray) -> int:
    """Number of rows where ``upper >= lower`` fails in some coordinate."""
    return int(np.any(upper < lower, axis=-1).sum())


def write_path_csv(path: Path, file) -> None:
    file = FsPath(file)
    k = path.states.shape[1]
    with file.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + [f"s_{i + 1}" for i in range(k)])
        for n, row in enumerate(path.states, start=1):
            w.writerow([n] + [format_float(v) for v in row])


def path_manifest(path: Path) -> dict:
    return {"model": path.model, "seed": int(path.stream.seed), "stream_id": int(path.stream.stream_id),
            "theta": [float(v) for v in path.theta], "s0": [float(v) for v in path.s0],
            "N": len(path), "clamp_count": path.clamp_count}


def format_float(v) -> str:
    return format(float(v), ".17g")


def read_series_csv(file, columns=None) -> tuple[list, np.ndarray]:
    """Read a numeric CSV with a header row. Returns ``(header, rows)``.

    A leading ``n`` column is dropped. When ``columns`` is given, those
    columns are returned in that order.
    """
    with open(file, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    if header and header[0] == "n":
        header, data = header[1:], data[:, 1:]
    if columns is not None:
        missing = [c for c in columns if c not in header]
        if missing:
            raise DomainError(f"data columns {missing} not found; header has {header}")
        idx = [header.index(c) for c in columns]
        header, data = list(columns), data[:, idx]
    return header, data


def write_manifest(obj: dict, file) -> None:
    FsPath(file).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
