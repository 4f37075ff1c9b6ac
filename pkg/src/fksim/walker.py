"""Continuous-time Markov walks with local times and jump-count tail bounds."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from math import ceil, exp, log, log1p
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class MarkovSpec:
    """Site-dependent jump rates q(v) <= sup_rate and a row-stochastic jump kernel.

    ``kernel(v)`` returns ``(targets, cumulative_probs)`` over the neighbors
    of v (no self-transitions).
    """

    rate: Callable
    sup_rate: float
    kernel: Callable


def symmetric_walk(graph, q=1.0):
    """Constant-rate walk jumping uniformly to a neighbor."""
    if q <= 0:
        raise ConfigError("jump rate must be positive")
    cache = {}

    def kernel(v):
        hit = cache.get(v)
        if hit is not None:
            return hit
        targets = graph.neighbors(v)
        k = len(targets)
        cum = [(i + 1) / k for i in range(k)]
        entry = (targets, cum)
        cache[v] = entry
        return entry

    # Isolated vertices get rate 0 (nowhere to jump, so the walker sits).
    return MarkovSpec(rate=lambda v: q if graph.neighbors(v) else 0.0,
                      sup_rate=q, kernel=kernel)


def validate_markov_spec(graph, spec, vertices, tol=1e-12):
    """Check the kernel is row-stochastic, edge-supported and rate-bounded."""
    for v in vertices:
        if spec.rate(v) > spec.sup_rate + tol:
            raise ConfigError(f"rate at {v} exceeds declared supremum")
        targets, cum = spec.kernel(v)
        if not targets:
            if spec.rate(v) != 0.0:
                raise ConfigError(f"isolated vertex {v} must have rate 0")
            continue
        if abs(cum[-1] - 1.0) > tol:
            raise ConfigError(f"jump probabilities at {v} do not sum to 1")
        nbrs = set(graph.neighbors(v))
        for u in targets:
            if u == v:
                raise ConfigError(f"self-transition at {v}")
            if u not in nbrs:
                raise ConfigError(f"kernel at {v} puts mass on non-neighbor {u}")


@dataclass
class PathRecord:
    """One sampled trajectory up to a fixed horizon.

    ``local_time`` maps each visited vertex to its occupation time; the values
    sum to the horizon.  ``exit_time`` is None when no kill radius was given or
    the walker stayed inside over the whole horizon.
    """

    start: object
    horizon: float
    endpoint: object
    jumps: int
    local_time: dict
    exit_time: Optional[float] = None
    jump_times: Optional[list] = None
    states: Optional[list] = None

    @property
    def visited(self):
        return self.local_time.keys()

    def max_displacement(self, graph):
        """Largest graph distance from the start over the trajectory."""
        return max(graph.distance(self.start, v) for v in self.local_time)


def sample_path(graph, spec, start, horizon, seed=None, *, kill_radius=None,
                light=False, rng=None):
    """Sample one CTMC path; deterministic given (inputs, seed).

    Holding times are exponential via inverse CDF on [0, 1); ``light`` skips
    the jump-time and state lists.
    """
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    if spec.rate(start) < 0:
        raise ConfigError(f"rate at start vertex {start} must be nonnegative")
    if spec.rate(start) == 0.0:
        return PathRecord(start=start, horizon=horizon, endpoint=start, jumps=0,
                          local_time={start: horizon},
                          jump_times=None if light else [],
                          states=None if light else [start])
    if rng is None:
        rng = np.random.default_rng(seed)
    rand = rng.random
    rate = spec.rate
    kernel = spec.kernel
    root = graph.root
    dist = graph.distance

    cur = start
    elapsed = 0.0
    jumps = 0
    local = {}
    jump_times = None if light else []
    states = None if light else [start]
    exit_time = None

    while True:
        hold = -log1p(-rand()) / rate(cur)
        if elapsed + hold >= horizon:
            local[cur] = local.get(cur, 0.0) + (horizon - elapsed)
            break
        local[cur] = local.get(cur, 0.0) + hold
        elapsed += hold
        targets, cum = kernel(cur)
        cur = targets[bisect_right(cum, rand())]
        jumps += 1
        if not light:
            jump_times.append(elapsed)
            states.append(cur)
        if kill_radius is not None and exit_time is None:
            if dist(root, cur) > kill_radius:
                exit_time = elapsed

    return PathRecord(start=start, horizon=horizon, endpoint=cur, jumps=jumps,
                      local_time=local, exit_time=exit_time,
                      jump_times=jump_times, states=states)


def sample_jump_counts(q, horizon, n_paths, seed, chunk=100_000):
    """Jump counts of n_paths constant-rate walks, vectorized over paths.

    Holding times are i.i.d. exponential(q); the count is the number of
    arrivals before the horizon.
    """
    if q <= 0:
        raise ConfigError("jump rate must be positive")
    if horizon == 0:
        return np.zeros(n_paths, dtype=np.int64)
    # Cap chosen so the Poisson tail beyond it is negligible (~1e-17 or less).
    cap = int(ceil(q * horizon)) + max(40, int(10 * ceil(q * horizon)))
    rng = np.random.default_rng(seed)
    out = np.empty(n_paths, dtype=np.int64)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        holds = rng.exponential(1.0 / q, size=(m, cap))
        counts = (np.cumsum(holds, axis=1) < horizon).sum(axis=1)
        if counts.max() >= cap:
            raise ConfigError("jump-count cap saturated; horizon too large")
        out[done:done + m] = counts
        done += m
    return out


def chernoff_jump_bound(q_sup, horizon, x):
    """Poisson-tail Chernoff bound e^{-qt} (q e t / x)^x, valid for x > q t."""
    if q_sup <= 0:
        raise DomainError("q_sup must be positive")
    if x <= q_sup * horizon:
        raise DomainError(f"bound requires x > q_sup*t = {q_sup * horizon}")
    if horizon == 0:
        return 0.0
    return exp(-q_sup * horizon + x * (log(q_sup * horizon / x) + 1.0))


def stay_probability(q, horizon):
    """Probability of zero jumps up to the horizon: e^{-q t}."""
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    return exp(-q * horizon)
