"""Gaussian noise fields on vertex sets and covariance machinery.

Three covariance structures are shipped: independent sites, distance power
decay, and a fully correlated (constant) field.  Exponential functionals of
the field have closed-form covariances; a Wick-expansion series provides an
independent route to the same quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, exp, factorial, sqrt
from typing import Optional

import numpy as np

from .errors import DomainError, InputError, NumericalError

IID = "iid"
POWER_DECAY = "power_decay"
CONSTANT = "constant"

_WICK_CAP = 10  # 9!! = 945 pairings; enumeration cost is factorial beyond this


@dataclass(frozen=True)
class NoiseModel:
    """Centered Gaussian field specification.

    ``decay_scale`` is the power-decay prefactor (also its covariance-decay
    certificate constant); ``moment_constant`` certifies the p-th moment bound
    p! * moment_constant**p.
    """

    kind: str
    gamma0: float = 1.0
    beta: Optional[float] = None
    decay_scale: float = 1.0
    moment_constant: float = 1.0


def iid_gaussian(gamma0=1.0, moment_constant=1.0):
    return NoiseModel(IID, gamma0=gamma0, moment_constant=moment_constant)


def power_decay_gaussian(beta, decay_scale=1.0, moment_constant=1.0):
    if beta <= 0:
        raise DomainError("decay exponent beta must be positive")
    if decay_scale <= 0:
        raise DomainError("decay scale must be positive")
    return NoiseModel(POWER_DECAY, gamma0=decay_scale, beta=beta,
                      decay_scale=decay_scale, moment_constant=moment_constant)


def constant_gaussian(gamma0=1.0, moment_constant=1.0):
    return NoiseModel(CONSTANT, gamma0=gamma0, moment_constant=moment_constant)


@dataclass(frozen=True)
class FieldSample:
    """A realized field: one value per requested vertex."""

    vertices: tuple
    values: dict

    def __getitem__(self, v):
        try:
            return self.values[v]
        except KeyError:
            raise InputError(f"field has no value at vertex {v!r}") from None

    def __contains__(self, v):
        return v in self.values


def covariance(model, graph, u, v):
    """gamma(u, v) = E[xi(u) xi(v)] for the given model."""
    if model.kind == IID:
        return model.gamma0 if u == v else 0.0
    if model.kind == CONSTANT:
        return model.gamma0
    if model.kind == POWER_DECAY:
        dist = graph.distance(u, v)
        return model.decay_scale * (dist + 1.0) ** (-model.beta)
    raise DomainError(f"unknown noise kind {model.kind!r}")


def variance_at_origin(model):
    """gamma(v, v), identical for all v by stationarity."""
    if model.kind == POWER_DECAY:
        return model.decay_scale
    return model.gamma0


def sample_field(model, graph, vertices, seed=None, rng=None):
    """Draw one realization of the field on an ordered vertex list."""
    if rng is None:
        rng = np.random.default_rng(seed)
    vertices = tuple(vertices)
    n = len(vertices)
    if model.kind == IID:
        vals = sqrt(model.gamma0) * rng.standard_normal(n)
    elif model.kind == CONSTANT:
        vals = np.full(n, sqrt(model.gamma0) * rng.standard_normal())
    elif model.kind == POWER_DECAY:
        cov = np.empty((n, n))
        for i, u in enumerate(vertices):
            cov[i, i] = model.decay_scale
            for j in range(i + 1, n):
                cov[i, j] = cov[j, i] = covariance(model, graph, u, vertices[j])
        chol = _psd_factor(cov)
        vals = chol @ rng.standard_normal(n)
    else:
        raise DomainError(f"unknown noise kind {model.kind!r}")
    return FieldSample(vertices=vertices, values=dict(zip(vertices, vals)))


def _psd_factor(cov):
    """Cholesky factor, retried once with a small ridge before failing."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    n = cov.shape[0]
    ridge = 1e-12 * np.trace(cov) / n
    try:
        return np.linalg.cholesky(cov + ridge * np.eye(n))
    except np.linalg.LinAlgError:
        minor = _first_bad_minor(cov)
        raise NumericalError(
            f"covariance matrix not PSD after regularization "
            f"(leading minor {minor})") from None


def _first_bad_minor(cov):
    for k in range(1, cov.shape[0] + 1):
        try:
            np.linalg.cholesky(cov[:k, :k])
        except np.linalg.LinAlgError:
            return k
    return cov.shape[0]


def exp_cov_gaussian(t, model, graph, u, v):
    """Cov[e^{-t xi(u)}, e^{-t xi(v)}] = e^{t^2 gamma(0)} (e^{t^2 gamma(u,v)} - 1)."""
    g0 = variance_at_origin(model)
    guv = covariance(model, graph, u, v)
    return exp(t * t * g0) * (exp(t * t * guv) - 1.0)


def gaussian_moment(vertices, cov_fn):
    """E[xi(v1)...xi(vk)] for a centered Gaussian via Wick pairing."""
    k = len(vertices)
    if k == 0:
        return 1.0
    if k % 2:
        return 0.0
    v0 = vertices[0]
    total = 0.0
    for j in range(1, k):
        c = cov_fn(v0, vertices[j])
        if c != 0.0:
            total += c * gaussian_moment(vertices[1:j] + vertices[j + 1:], cov_fn)
    return total


def covariance_series(f, g, model, graph, p_max):
    """Partial sum of the covariance expansion of Cov[e^{<f,xi>}, e^{<g,xi>}].

    ``f`` and ``g`` are finitely supported vertex -> coefficient maps.  The
    order-p term couples m factors of f with p - m factors of g through mixed
    Gaussian moments.
    """
    if p_max < 2:
        raise DomainError("p_max must be >= 2")
    if p_max > _WICK_CAP:
        raise DomainError(f"Wick enumeration capped at p = {_WICK_CAP}")
    norm_f = sum(abs(x) for x in f.values())
    norm_g = sum(abs(x) for x in g.values())
    if model.moment_constant * (norm_f + norm_g) >= 1.0:
        raise DomainError("series domination requires m*(|f|_1 + |g|_1) < 1")

    fs = [(v, c) for v, c in f.items() if c != 0.0]
    gs = [(v, c) for v, c in g.items() if c != 0.0]
    if not fs or not gs:
        return 0.0

    def cov_fn(u, v):
        return covariance(model, graph, u, v)

    total = 0.0
    for p in range(2, p_max + 1):
        a_p = 0.0
        for m in range(1, p):
            coeff = comb(p, m)
            block = 0.0
            for fv in _tuples(fs, m):
                for gv in _tuples(gs, p - m):
                    vs = tuple(v for v, _ in fv) + tuple(v for v, _ in gv)
                    joint = gaussian_moment(vs, cov_fn)
                    left = gaussian_moment(tuple(v for v, _ in fv), cov_fn)
                    right = gaussian_moment(tuple(v for v, _ in gv), cov_fn)
                    weight = 1.0
                    for _, c in fv:
                        weight *= c
                    for _, c in gv:
                        weight *= c
                    block += (joint - left * right) * weight
            a_p += coeff * block
        total += a_p / factorial(p)
    return total


def _tuples(items, k):
    if k == 0:
        yield ()
        return
    for head in items:
        for rest in _tuples(items, k - 1):
            yield (head,) + rest


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    stderr: float
    passed: bool


def _field_matrix(model, graph, vertices, n_samples, rng):
    """n_samples draws of the field on a fixed vertex tuple, one row each."""
    n = len(vertices)
    if model.kind == IID:
        return sqrt(model.gamma0) * rng.standard_normal((n_samples, n))
    if model.kind == CONSTANT:
        z = rng.standard_normal((n_samples, 1))
        return sqrt(model.gamma0) * np.broadcast_to(z, (n_samples, n)).copy()
    if model.kind == POWER_DECAY:
        cov = np.empty((n, n))
        for i, u in enumerate(vertices):
            cov[i, i] = model.decay_scale
            for j in range(i + 1, n):
                cov[i, j] = cov[j, i] = covariance(model, graph, u, vertices[j])
        chol = _psd_factor(cov)
        return rng.standard_normal((n_samples, n)) @ chol.T
    raise DomainError(f"unknown noise kind {model.kind!r}")


def taylor_bound_check(f, model, graph, n_samples, seed):
    """Monte Carlo check of |E e^{<f,xi>} - 1| <= 2 m^2 |f|_1^2."""
    m = model.moment_constant
    norm1 = sum(abs(x) for x in f.values())
    if norm1 > 1.0 / (2.0 * m):
        raise DomainError("requires |f|_1 <= 1/(2m)")
    rhs = 2.0 * m * m * norm1 * norm1
    support = tuple(v for v, c in f.items() if c != 0.0)
    if not support:
        return BoundReport(lhs=0.0, rhs=rhs, stderr=0.0, passed=True)
    coeffs = np.array([f[v] for v in support])
    rng = np.random.default_rng(seed)
    fields = _field_matrix(model, graph, support, n_samples, rng)
    vals = np.exp(fields @ coeffs)
    lhs = abs(vals.mean() - 1.0)
    se = vals.std(ddof=1) / sqrt(n_samples)
    return BoundReport(lhs=lhs, rhs=rhs, stderr=se, passed=lhs <= rhs + 3.0 * se)


def moment_bound_probe(model, graph, p_max, n_samples, seed):
    """Max over even p <= p_max of empirical E|xi|^p / (p! m^p) at one vertex."""
    if p_max > 10:
        raise DomainError("sampling accuracy limits the probe to p <= 10")
    rng = np.random.default_rng(seed)
    draws = _field_matrix(model, graph, (graph.root,), n_samples, rng)[:, 0]
    m = model.moment_constant
    worst = 0.0
    for p in range(2, p_max + 1, 2):
        worst = max(worst, (np.abs(draws) ** p).mean() / (factorial(p) * m ** p))
    return worst
