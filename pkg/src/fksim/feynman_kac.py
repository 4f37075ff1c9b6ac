"""Path-integral estimators of semigroup kernels and traces, the paired-walker
variance identity, and the deterministic sums behind the small-t scaling laws.

Monte Carlo routes sample continuous-time walks and weight them by the
exponential of accumulated potential; deterministic routes evaluate the
frozen-walk double sums in closed radial form with certified box truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, e as _E, exp, gamma as _gamma_fn, inf, sqrt
from typing import Optional

import numpy as np
from scipy.special import comb as _comb, gammainc, gammaincc

from .errors import ConfigError, DomainError, InputError
from .lattice import ZD_L1, ZD_LINF
from .noise import CONSTANT, IID, POWER_DECAY, covariance, variance_at_origin
from .operators import assemble, expm_neg
from .walker import sample_path

_LN_TAIL = 27.631021115928547  # ln(1e12): relative cutoff for the box tail
_EXACT_TERM_CAP = 20_000_000   # radial terms summed exactly before integral tails


@dataclass(frozen=True)
class TraceEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n_paths: int
    t: float


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    stderr: float
    n_samples: int
    t: float
    radius: Optional[int] = None

    def ci95(self):
        return (self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr)


@dataclass(frozen=True)
class PairedSample:
    """Two independent trajectories with their range separation."""

    first: object
    second: object
    range_distance: int
    joint_stay: bool


def radius_for(t, alpha=2.0, kappa=1.0, q_sup=1.0):
    """Box radius making the truncated terms < 1e-12 of the central one,
    plus an allowance for walker displacement over the horizon."""
    if t <= 0:
        raise DomainError("t must be positive")
    core = ceil((_LN_TAIL / t) ** (1.0 / alpha) / kappa)
    return core + ceil(q_sup * _E * t) + 40


# -- Monte Carlo kernel and trace ---------------------------------------------


def _path_weight(path, graph, pot, xi):
    """e^{-<L, V + xi>} with the convention e^{-inf} = 0 on Dirichlet vertices."""
    s = 0.0
    for x, lt in path.local_time.items():
        v = pot.value(graph, x)
        if v == inf:
            return 0.0
        s += lt * (v + xi[x])
    return exp(-s)


def mc_kernel(graph, spec, pot, xi, u, v, t, n_paths, seed):
    """Estimate the kernel entry K_t(u, v) over n_paths walks from u."""
    if t <= 0:
        raise DomainError("t must be positive")
    if n_paths < 1:
        raise DomainError("need at least one path")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    for _ in range(n_paths):
        p = sample_path(graph, spec, u, t, rng=rng, light=True)
        w = _path_weight(p, graph, pot, xi) if p.endpoint == v else 0.0
        total += w
        total_sq += w * w
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0)
    return TraceEstimate(mean=mean, stderr=sqrt(var / n_paths), n_paths=n_paths, t=t)


def _trace_samples(graph, spec, pot, xi, n, t, n_paths, seed):
    """Per-start-vertex killed and unkilled return weights from shared paths.

    Returns (vertices, killed, unkilled) where killed/unkilled are lists of
    float arrays, one array per start vertex.
    """
    ball, _ = graph.ball(graph.root, n)
    starts = [v for v in ball if pot.value(graph, v) != inf]
    per = max(1, ceil(n_paths / max(1, len(starts))))
    rng = np.random.default_rng(seed)
    killed, unkilled = [], []
    for u in starts:
        kw = np.empty(per)
        uw = np.empty(per)
        for i in range(per):
            p = sample_path(graph, spec, u, t, rng=rng, light=True,
                            kill_radius=n)
            w = _path_weight(p, graph, pot, xi) if p.endpoint == u else 0.0
            uw[i] = w
            kw[i] = w if p.exit_time is None else 0.0
        killed.append(kw)
        unkilled.append(uw)
    return starts, killed, unkilled


def _stratified_estimate(weights, t):
    n_total = sum(len(w) for w in weights)
    mean = sum(float(np.mean(w)) for w in weights)
    var = sum(float(np.var(w, ddof=1)) / len(w) for w in weights)
    return TraceEstimate(mean=mean, stderr=sqrt(var), n_paths=n_total, t=t)


def mc_dirichlet_trace(graph, spec, pot, xi, n, t, n_paths, seed,
                       with_unkilled=False):
    """Estimate Tr e^{-tH_n}: paths killed on leaving the radius-n ball.

    Stratifies n_paths evenly across the ball's start vertices.  With
    ``with_unkilled`` also returns the no-killing trace estimate computed
    from the same sampled paths.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    _, killed, unkilled = _trace_samples(graph, spec, pot, xi, n, t,
                                         n_paths, seed)
    est = _stratified_estimate(killed, t)
    if with_unkilled:
        return est, _stratified_estimate(unkilled, t)
    return est


# -- variance estimators -------------------------------------------------------


def exact_dirichlet_trace(graph, spec, pot, xi, n, t):
    """Tr e^{-tH_n} by dense matrix exponential."""
    asm = assemble(graph, spec, pot, xi, n)
    return float(np.trace(expm_neg(asm.matrix, t)))


def ensemble_variance(graph, spec, pot, model, n, t, m_draws, seed,
                      threads=1):
    """Var over the noise of the exact truncated trace, with jackknife SE."""
    if m_draws < 2:
        raise DomainError("need at least two noise draws")
    from .noise import sample_field

    ball, _ = graph.ball(graph.root, n)
    seeds = np.random.SeedSequence(seed).spawn(m_draws)
    def member(ss):
        xi = sample_field(model, graph, ball, rng=np.random.default_rng(ss))
        return exact_dirichlet_trace(graph, spec, pot, xi, n, t)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = np.fromiter(pool.map(member, seeds), dtype=float,
                                 count=m_draws)
    else:
        traces = np.fromiter(map(member, seeds), dtype=float, count=m_draws)

    value = float(np.var(traces, ddof=1))
    # Leave-one-out variances from running sums.
    m = m_draws
    s1 = traces.sum()
    s2 = (traces ** 2).sum()
    loo = (s2 - traces ** 2 - (s1 - traces) ** 2 / (m - 1)) / (m - 2)
    se = sqrt((m - 1) / m * float(((loo - loo.mean()) ** 2).sum()))
    return VarianceEstimate(value=value, stderr=se, n_samples=m, t=t, radius=n)


def _inner_products(path, other, graph, model):
    """(<L,L>, <L~,L~>, <L,L~>) under the model covariance."""
    if model.kind == IID:
        g0 = model.gamma0
        aa = g0 * sum(lt * lt for lt in path.local_time.values())
        bb = g0 * sum(lt * lt for lt in other.local_time.values())
        ab = g0 * sum(lt * other.local_time.get(x, 0.0)
                      for x, lt in path.local_time.items())
        return aa, bb, ab
    if model.kind == CONSTANT:
        g0 = model.gamma0
        sa = sum(path.local_time.values())
        sb = sum(other.local_time.values())
        return g0 * sa * sa, g0 * sb * sb, g0 * sa * sb
    def quad(l1, l2):
        return sum(a * b * covariance(model, graph, x, y)
                   for x, a in l1.items() for y, b in l2.items())
    return (quad(path.local_time, path.local_time),
            quad(other.local_time, other.local_time),
            quad(path.local_time, other.local_time))


def paired_walker_variance(graph, spec, pot, model, t, n_rep, box_radius,
                           seed):
    """Var[Tr e^{-tH_n}] via two independent walkers per box vertex.

    For each replicate, one pair of independent trajectories is drawn per
    start vertex; every ordered vertex pair contributes
    e^{-<L+L~,V>} * e^{(<L,L>+<L~,L~>)/2} (e^{<L,L~>} - 1)
    when both walkers return to their starts without leaving the box.
    """
    if model.kind not in (IID, CONSTANT, POWER_DECAY):
        raise ConfigError(f"unsupported noise kind {model.kind!r} "
                          "(closed-form inner covariance is Gaussian-only)")
    if n_rep < 2:
        raise DomainError("need at least two replicates")
    ball, _ = graph.ball(graph.root, box_radius)
    starts = [v for v in ball if pot.value(graph, v) != inf]
    rng = np.random.default_rng(seed)
    zero_xi = {}

    def draw_family():
        fam = []
        for u in starts:
            p = sample_path(graph, spec, u, t, rng=rng, light=True,
                            kill_radius=box_radius)
            w = 0.0
            if p.endpoint == u and p.exit_time is None:
                pv = sum(lt * pot.value(graph, x)
                         for x, lt in p.local_time.items())
                if pv != inf:
                    w = exp(-pv)
            fam.append((p, w))
        return fam

    totals = np.empty(n_rep)
    for r in range(n_rep):
        fam_a = draw_family()
        fam_b = draw_family()
        tot = 0.0
        for pa, wa in fam_a:
            if wa == 0.0:
                continue
            for pb, wb in fam_b:
                if wb == 0.0:
                    continue
                aa, bb, ab = _inner_products(pa, pb, graph, model)
                tot += wa * wb * exp(0.5 * (aa + bb)) * (exp(ab) - 1.0)
        totals[r] = tot
    value = float(totals.mean())
    se = float(totals.std(ddof=1)) / sqrt(n_rep)
    return VarianceEstimate(value=value, stderr=se, n_samples=n_rep, t=t,
                            radius=box_radius)


# -- deterministic radial sums -------------------------------------------------


def _coord_counts(graph, n):
    """Vectorized c_n for the lattice kinds (n: integer array, n >= 1)."""
    n = np.asarray(n, dtype=float)
    d = graph.d
    if graph.kind == ZD_L1:
        out = np.zeros_like(n)
        for k in range(1, d + 1):
            out += _comb(d, k, exact=True) * (2.0 ** k) * _comb(n - 1, k - 1)
        return out
    if graph.kind == ZD_LINF:
        return (2 * n + 1) ** d - (2 * n - 1) ** d
    raise DomainError("radial closed forms require a lattice kind")


def _coord_leading(graph):
    """Leading coefficient of c_n ~ const * n^(d-1)."""
    big = float(2 ** 20)
    return float(_coord_counts(graph, np.array([big]))[0]) / big ** (graph.d - 1)


def _radial_weight_sum(graph, value_fn, r, chunk=2_000_000):
    """sum over n = 0..r of c_n * value_fn(n), chunked over n."""
    total = float(value_fn(np.array([0.0]))[0])
    lo = 1
    while lo <= r:
        hi = min(r, lo + chunk - 1)
        ns = np.arange(lo, hi + 1, dtype=float)
        total += float(np.dot(_coord_counts(graph, ns), value_fn(ns)))
        lo = hi + 1
    return total


def _ball_arrays(graph, pot, r):
    """Ball vertices with potential vector and pairwise distance matrix."""
    verts, _ = graph.ball(graph.root, r)
    m = len(verts)
    if m * m > 40_000_000:
        raise DomainError(f"pairwise sum over {m} vertices is too large")
    vvec = np.array([pot.value(graph, v) for v in verts])
    if graph.kind in (ZD_L1, ZD_LINF):
        coords = np.array(verts, dtype=float)
        diff = np.abs(coords[:, None, :] - coords[None, :, :])
        dist = diff.sum(axis=2) if graph.kind == ZD_L1 else diff.max(axis=2)
    else:
        dist = np.array([[graph.distance(u, v) for v in verts] for u in verts],
                        dtype=float)
    return vvec, dist


def frozen_variance_sum(t, graph, pot, model, r=None):
    """Double sum over the box of e^{-tV(u)-tV(v)} Cov[e^{-t xi(u)}, e^{-t xi(v)}].

    Independent and constant covariances collapse to radial single sums;
    power decay is evaluated as an explicit pairwise sum over the ball.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    required = radius_for(t, pot.alpha, pot.kappa)
    if r is None:
        r = required
    elif r < required:
        raise DomainError(f"box radius {r} below certified radius {required} "
                          f"for t={t}")
    t2 = t * t
    g0 = variance_at_origin(model)
    if model.kind == IID:
        factor = exp(t2 * g0) * (exp(t2 * g0) - 1.0)
        radial = _radial_weight_sum(
            graph, lambda ns: np.exp(-2.0 * t * (pot.kappa * ns) ** pot.alpha
                                     + 2.0 * t * pot.mu), r)
        return factor * radial
    if model.kind == CONSTANT:
        factor = exp(t2 * g0) * (exp(t2 * g0) - 1.0)
        radial = _radial_weight_sum(
            graph, lambda ns: np.exp(-t * (pot.kappa * ns) ** pot.alpha
                                     + t * pot.mu), r)
        return factor * radial * radial
    if model.kind == POWER_DECAY:
        vvec, dist = _ball_arrays(graph, pot, r)
        w = np.exp(-t * vvec)
        gam = model.decay_scale * (dist + 1.0) ** (-model.beta)
        return float(exp(t2 * g0) * (w @ (np.exp(t2 * gam) - 1.0) @ w))
    raise DomainError(f"unknown noise kind {model.kind!r}")


def _radial_sum_with_tail(graph, t_coef, delta, r):
    """sum over n=0..r of c_n e^{-t_coef * n^delta}, exact to cap then a
    certified integral lower bound for the remainder (d = 1 only)."""
    n_exact = min(r, _EXACT_TERM_CAP)
    total = _radial_weight_sum(graph,
                               lambda ns: np.exp(-t_coef * ns ** delta),
                               n_exact)
    if r > n_exact:
        if graph.d != 1:
            raise DomainError(f"box radius {r} needs the integral tail, which "
                              "is certified for d = 1 only")
        # c_n = 2 for n >= 1 on both one-dimensional kinds; the integrand is
        # decreasing, so sum_{n=a}^{b} f(n) >= int_a^{b+1} f(x) dx.
        a, b = n_exact + 1, r + 1
        k = 1.0 / delta
        scale = _gamma_fn(k) * t_coef ** (-k) / delta
        total += 2.0 * scale * (gammainc(k, t_coef * b ** delta)
                                - gammainc(k, t_coef * a ** delta))
    return total


def lower_bound_sum(t, delta, model, graph, r=None):
    """Certified lower bound e^{-2t + t^2 g(0)} * sum of
    e^{-t d(u)^delta - t d(v)^delta} (e^{t^2 gamma(u,v)} - 1) over the box.

    The potential preset is V(v) = d(0, v)^delta; the covariance must be
    nonnegative for the bound to hold.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if delta <= 0:
        raise DomainError("delta must be positive")
    if model.gamma0 < 0 or (model.kind == POWER_DECAY and model.decay_scale < 0):
        raise DomainError("covariance must be nonnegative for the lower bound")
    required = radius_for(t, delta, 1.0)
    if r is None:
        r = required
    elif r < required:
        raise DomainError(f"box radius {r} below certified radius {required} "
                          f"for t={t}")
    t2 = t * t
    g0 = variance_at_origin(model)
    pref = exp(-2.0 * t + t2 * g0)
    if model.kind == IID:
        inner = (exp(t2 * g0) - 1.0) * _radial_sum_with_tail(graph, 2.0 * t,
                                                             delta, r)
        return pref * inner
    if model.kind == CONSTANT:
        s = _radial_sum_with_tail(graph, t, delta, r)
        return pref * (exp(t2 * g0) - 1.0) * s * s
    if model.kind == POWER_DECAY:
        from .operators import PotentialSpec
        vvec, dist = _ball_arrays(graph, PotentialSpec(alpha=delta), r)
        w = np.exp(-t * vvec)
        gam = model.decay_scale * (dist + 1.0) ** (-model.beta)
        return pref * float(w @ (np.exp(t2 * gam) - 1.0) @ w)
    raise DomainError(f"unknown noise kind {model.kind!r}")


def riemann_tail_sum(t, kappa, alpha, d=None, graph=None):
    """S(t) = sum_n c_n e^{-(kappa t^{1/alpha} n)^{min(alpha,1)}} and its
    normalization t^{d/alpha} S / c_lead, whose square tends to the
    kappa^{-2d} Gamma(d/min(1,alpha))^2 / min(1,alpha^2) limit."""
    if graph is None:
        from .lattice import GraphModel
        graph = GraphModel.zd_l1(d if d is not None else 1)
    d = graph.d
    if t <= 0 or kappa <= 0 or alpha <= 0:
        raise DomainError("t, kappa, alpha must be positive")
    m = min(alpha, 1.0)
    s = kappa * t ** (1.0 / alpha)
    lead = _coord_leading(graph)
    # Cutoff z with the relative integral tail below 1e-9.
    z = 25.0
    while 2.0 * gammaincc(d / m, z) > 1e-9 and z < 200.0:
        z += 5.0
    n_max = ceil(z ** (1.0 / m) / s)
    if n_max > 60_000_000:
        raise DomainError(f"tail certification needs {n_max} terms, above the "
                          "summation cap")
    total = _radial_weight_sum(graph, lambda ns: np.exp(-(s * ns) ** m), n_max)
    # Certified tail: c_n <= 2 * lead * n^(d-1) for large n; integral upper
    # bound of the decreasing summand.
    tail = (2.0 * lead / m) * s ** (-d) * _gamma_fn(d / m) \
        * gammaincc(d / m, (s * n_max) ** m)
    if tail > 1e-9 * total:
        raise DomainError(f"tail bound {tail:.3e} exceeds 1e-9 of the sum; "
                          f"increase the cutoff beyond {n_max}")
    normalized = t ** (d / alpha) * total / lead
    return total, normalized


# -- path-pair geometry ---------------------------------------------------------


def min_range_distance(graph, p1, p2):
    """Minimum graph distance between the two trajectories' ranges."""
    v1, v2 = p1.local_time, p2.local_time
    if not v1 or not v2:
        raise InputError("paths must record visited vertices")
    return min(graph.distance(x, y) for x in v1 for y in v2)


def paired_sample(graph, spec, u, v, t, rng):
    """Draw one independent trajectory pair and its range statistics."""
    p1 = sample_path(graph, spec, u, t, rng=rng, light=True)
    p2 = sample_path(graph, spec, v, t, rng=rng, light=True)
    return PairedSample(first=p1, second=p2,
                        range_distance=min_range_distance(graph, p1, p2),
                        joint_stay=(p1.jumps == 0 and p2.jumps == 0))
