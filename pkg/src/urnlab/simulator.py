"""Monte Carlo simulation of the interacting urn process.

Randomness contract
-------------------
A trajectory seeded with ``seed`` draws from
``numpy.random.Generator(PCG64(seed))``.  Every step consumes exactly N
uniforms, one per node in internal order (flexible nodes first), and all
draws of a step are taken before any urn is reinforced.  Replication ``r``
of an ensemble with base seed ``s`` uses :func:`replication_seed` ``(s, r)``,
so ensembles are bit-identical regardless of the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .netmodel import DerivedMatrices, derive

INT64_MAX = np.iinfo(np.int64).max
UNIFORMS_PER_BLOCK = 1 << 18
DEFAULT_CHECKPOINTS = 20


class SimulationError(ValueError):
    pass


class ZeroVariance(SimulationError):
    pass


@dataclass(frozen=True)
class UrnState:
    t: int
    white: np.ndarray     # int64, internal order
    totals: np.ndarray    # int64, internal order

    @property
    def black(self) -> np.ndarray:
        return self.totals - self.white

    @property
    def z(self) -> np.ndarray:
        return self.white / self.totals


def _dm(model) -> DerivedMatrices:
    return model if isinstance(model, DerivedMatrices) else derive(model)


def init_state(model) -> UrnState:
    dm = _dm(model)
    nodes = dm.nodes
    white = np.array([nd.w0 for nd in nodes], dtype=np.int64)
    totals = np.array([nd.w0 + nd.b0 for nd in nodes], dtype=np.int64)
    return UrnState(0, white, totals)


def _draw_one(u: float, white: int, total: int, preferential: bool) -> int:
    # degenerate urns are decided exactly, never by comparing u to 0 or 1
    if white == 0:
        return 0 if preferential else 1
    if white == total:
        return 1 if preferential else 0
    if preferential:
        return 1 if u < white / total else 0
    return 1 if u < (total - white) / total else 0


def draw(state: UrnState, dm: DerivedMatrices, rng: np.random.Generator) -> np.ndarray:
    """Colour indicators (1 = white) of the balls drawn at every node."""
    u = rng.random(dm.n)
    pref = dm.I_signs > 0
    return np.array(
        [_draw_one(u[i], int(state.white[i]), int(state.totals[i]), bool(pref[i])) for i in range(dm.n)],
        dtype=np.int64,
    )


def reinforce(state: UrnState, dm: DerivedMatrices, chi, order=None) -> UrnState:
    """Add the balls prescribed by the draws *chi* to every out-neighbour.

    *order* permutes the sequence in which source nodes are processed; the
    result does not depend on it.
    """
    nodes = dm.nodes
    white = state.white.copy()
    totals = state.totals.copy()
    sources = range(dm.n) if order is None else order
    for i in sources:
        nd = nodes[i]
        add_white = nd.alpha if chi[i] else nd.m - nd.beta
        for j in np.flatnonzero(dm.A[i]):
            white[j] += add_white
            totals[j] += nd.m
    return UrnState(state.t + 1, white, totals)


def step(state: UrnState, dm: DerivedMatrices, rng: np.random.Generator) -> UrnState:
    return reinforce(state, dm, draw(state, dm, rng))


@numba.njit(nogil=True, cache=True)
def _advance(white, totals, pref, gain_if_white, gain_if_black, src, dst, mbar, uniforms, chi):
    steps, n = uniforms.shape
    for s in range(steps):
        for i in range(n):
            w = white[i]
            tot = totals[i]
            if w == 0:
                chi[i] = 0 if pref[i] else 1
            elif w == tot:
                chi[i] = 1 if pref[i] else 0
            elif pref[i]:
                chi[i] = 1 if uniforms[s, i] < w / tot else 0
            else:
                chi[i] = 1 if uniforms[s, i] < (tot - w) / tot else 0
        for e in range(src.shape[0]):
            i = src[e]
            if chi[i]:
                white[dst[e]] += gain_if_white[i]
            else:
                white[dst[e]] += gain_if_black[i]
        for j in range(n):
            totals[j] += mbar[j]


class _Tables:
    def __init__(self, dm: DerivedMatrices):
        nodes = dm.nodes
        self.n = dm.n
        self.pref = (dm.I_signs > 0).astype(np.uint8)
        self.gain_if_white = np.array([nd.alpha for nd in nodes], dtype=np.int64)
        self.gain_if_black = np.array([nd.m - nd.beta for nd in nodes], dtype=np.int64)
        src, dst = np.nonzero(dm.A)
        self.src = src.astype(np.int64)
        self.dst = dst.astype(np.int64)
        self.mbar = np.array(dm.mbar, dtype=np.int64)


def _check_overflow(state: UrnState, dm: DerivedMatrices, steps: int) -> None:
    for total, mbar in zip(state.totals.tolist(), dm.mbar):
        if total + steps * mbar > INT64_MAX:
            raise SimulationError(f"ball counts would exceed int64 within {steps} steps")


def _check_points(steps: int, checkpoints) -> list[int]:
    if steps < 1:
        raise SimulationError("steps must be >= 1")
    if checkpoints is None:
        return default_checkpoints(steps)
    points = sorted({int(t) for t in checkpoints})
    if points and (points[0] < 0 or points[-1] > steps):
        raise SimulationError(f"checkpoints must lie in [0, {steps}]")
    return points


def default_checkpoints(steps: int, count: int = DEFAULT_CHECKPOINTS) -> list[int]:
    """*count* log-spaced times in [1, steps] (fewer after rounding collisions)."""
    grid = np.logspace(0.0, math.log10(steps), count)
    return sorted({int(round(x)) for x in grid} | {steps})


def _simulate(dm: DerivedMatrices, tables: _Tables, steps: int, seed: int, points: list[int]) -> np.ndarray:
    """z at every checkpoint, shape (len(points), N), internal order."""
    state = init_state(dm)
    _check_overflow(state, dm, steps)
    white = state.white.copy()
    totals = state.totals.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    chi = np.zeros(tables.n, dtype=np.uint8)
    out = np.empty((len(points), tables.n))
    block = max(1, UNIFORMS_PER_BLOCK // max(tables.n, 1))
    t = 0
    for k, target in enumerate(points):
        while t < target:
            todo = min(block, target - t)
            uniforms = rng.random((todo, tables.n))
            _advance(white, totals, tables.pref, tables.gain_if_white, tables.gain_if_black,
                     tables.src, tables.dst, tables.mbar, uniforms, chi)
            t += todo
        out[k] = white / totals
    return out


def run_trajectory(model, steps: int, seed: int, checkpoints=None) -> list[tuple[int, np.ndarray]]:
    """Deterministic in ``(model, steps, seed)``; z vectors are in internal order."""
    dm = _dm(model)
    points = _check_points(steps, checkpoints)
    zs = _simulate(dm, _Tables(dm), steps, seed, points)
    return [(t, zs[k]) for k, t in enumerate(points)]


def replication_seed(base_seed: int, r: int) -> int:
    """64-bit seed of replication *r*: first word of SeedSequence(base_seed, spawn_key=(r,))."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(r,))
    return int(ss.generate_state(1, np.uint64)[0])


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("URNLAB_THREADS", "0") or 0)
    if threads < 0:
        raise SimulationError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


@dataclass(frozen=True)
class EnsembleStats:
    ids: tuple[int, ...]                # user ids, internal order
    n_flexible: int
    checkpoints: list[int]
    mean: np.ndarray                    # (C, N)
    variance: np.ndarray                # (C, N), ddof = 1
    samples: np.ndarray                 # (R, C, N)
    replications: int
    covariance_at_end: np.ndarray | None = None

    @property
    def final(self) -> np.ndarray:
        return self.samples[:, -1, :]


def run_ensemble(model, steps: int, replications: int, base_seed: int, checkpoints=None,
                 z_star=None, threads: int | None = None) -> EnsembleStats:
    if replications < 2:
        raise SimulationError("need at least 2 replications")
    dm = _dm(model)
    points = _check_points(steps, checkpoints)
    if not points:
        raise SimulationError("no checkpoints")
    tables = _Tables(dm)
    samples = np.empty((replications, len(points), dm.n))

    def one(r: int) -> None:
        samples[r] = _simulate(dm, tables, steps, replication_seed(base_seed, r), points)

    workers = min(thread_count(threads), replications)
    if workers == 1:
        for r in range(replications):
            one(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one, range(replications)))

    cov = None
    if z_star is not None:
        f = dm.n_flexible
        t_end = points[-1]
        scaled = math.sqrt(t_end) * (samples[:, -1, :f] - np.asarray(z_star, dtype=float)[:f])
        cov = np.atleast_2d(np.cov(scaled, rowvar=False, ddof=1))
    return EnsembleStats(
        ids=dm.ids,
        n_flexible=dm.n_flexible,
        checkpoints=points,
        mean=samples.mean(axis=0),
        variance=samples.var(axis=0, ddof=1),
        samples=samples,
        replications=replications,
        covariance_at_end=cov,
    )


def fit_decay_slope(stats: EnsembleStats, node: int, window) -> float:
    """Least-squares slope of log Var(Z_node) against log t over *window*.

    *node* is a user id.
    """
    t_lo, t_hi = window
    k = stats.ids.index(node)
    ts = np.array(stats.checkpoints, dtype=float)
    sel = (ts >= t_lo) & (ts <= t_hi) & (ts > 0)
    if sel.sum() < 3:
        raise SimulationError(f"need >= 3 checkpoints in [{t_lo}, {t_hi}], have {int(sel.sum())}")
    var = stats.variance[sel, k]
    if np.any(var <= 0):
        raise ZeroVariance(f"node {node}: zero variance in window (deterministic dynamics)")
    slope, _ = np.polyfit(np.log(ts[sel]), np.log(var), 1)
    return float(slope)

