"""Command-line driver: config parsing, variance sweeps with exponent fits,
the rigidity-predictor demonstration, jump-tail checks, and spectral checks.

Configs are flat key=value text files ('#' starts a comment).  Every CSV
begins with a '# config_hash=...' line echoing a hash of the effective
configuration, so outputs are traceable to their inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy import stats as _stats

from .errors import ConfigError, DomainError
from .lattice import GraphModel
from .noise import (constant_gaussian, iid_gaussian, power_decay_gaussian,
                    sample_field)
from .operators import PotentialSpec, assemble, spectrum
from .feynman_kac import (ensemble_variance, exact_dirichlet_trace,
                          frozen_variance_sum, lower_bound_sum,
                          mc_dirichlet_trace, radius_for)
from .walker import chernoff_jump_bound, sample_jump_counts, symmetric_walk


def parse_config(path):
    """Flat key=value file; later keys override earlier ones."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                  f"got {raw.strip()!r}")
            key, val = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key] = val.strip()
    return out


def config_hash(cfg):
    canon = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _get(cfg, key, cast, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return cast(cfg[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse "
                          f"{cfg[key]!r}") from None


def _graph_from(cfg):
    kind = _get(cfg, "graph", str, "zd_l1")
    d = _get(cfg, "d", int, 1)
    if kind == "zd_l1":
        return GraphModel.zd_l1(d)
    if kind == "zd_linf":
        return GraphModel.zd_linf(d)
    if kind == "edge_list":
        return GraphModel.from_edge_list(_get(cfg, "graph_file", str,
                                               required=True), d=d)
    raise ConfigError(f"unknown graph kind {kind!r}")


def _noise_from(cfg):
    kind = _get(cfg, "noise", str, "iid")
    gamma0 = _get(cfg, "gamma0", float, 1.0)
    moment = _get(cfg, "moment_constant", float, 1.0)
    if kind == "iid":
        return iid_gaussian(gamma0, moment)
    if kind == "constant":
        return constant_gaussian(gamma0, moment)
    if kind == "power_decay":
        return power_decay_gaussian(_get(cfg, "beta", float, required=True),
                                    _get(cfg, "decay_scale", float, 1.0),
                                    moment)
    raise ConfigError(f"unknown noise kind {kind!r}")


def _potential_from(cfg):
    return PotentialSpec(alpha=_get(cfg, "alpha", float, 2.0),
                         kappa=_get(cfg, "kappa", float, 1.0),
                         mu=_get(cfg, "mu", float, 0.0))


def _fmt(x):
    return "" if x is None else repr(float(x))


# -- exponent fitting -----------------------------------------------------------


def fit_exponent(rows):
    """OLS fit of log value against log t: (slope, 95% CI half-width, R^2)."""
    if len(rows) < 4:
        raise DomainError(f"exponent fit needs >= 4 rows, got {len(rows)}")
    for i, (t, v) in enumerate(rows):
        if v <= 0:
            raise DomainError(f"row {i}: value {v} is not positive")
        if t <= 0:
            raise DomainError(f"row {i}: t {t} is not positive")
    x = np.log([t for t, _ in rows])
    y = np.log([v for _, v in rows])
    n = len(rows)
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    if n > 2:
        se = sqrt(ss_res / (n - 2) / sxx)
        ci = float(_stats.t.ppf(0.975, n - 2)) * se
    else:
        ci = 0.0
    return slope, ci, r2


# -- sweep-variance --------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    rows: tuple        # (t, frozen, ens_var, ens_se, lower, radius)
    slope: float
    slope_ci: float
    r_squared: float
    passed: bool


def sweep_variance(cfg, seed=None, threads=1):
    graph = _graph_from(cfg)
    model = _noise_from(cfg)
    pot = _potential_from(cfg)
    k_min = _get(cfg, "t_exp_min", int, 6)
    k_max = _get(cfg, "t_exp_max", int, 12)
    if k_max < k_min:
        raise ConfigError("t_exp_max must be >= t_exp_min")
    m_draws = _get(cfg, "ensemble", int, 0)
    fixed_radius = _get(cfg, "radius", int)
    seed = seed if seed is not None else _get(cfg, "seed", int, 0)
    spec = symmetric_walk(graph, _get(cfg, "q", float, 1.0))
    do_lower = pot.kappa == 1.0 and pot.mu == 0.0 and model.gamma0 >= 0

    rows = []
    for k in range(k_min, k_max + 1):
        t = 2.0 ** (-k)
        radius = fixed_radius if fixed_radius is not None \
            else radius_for(t, pot.alpha, pot.kappa)
        # The frozen-sum column always uses its certified radius; a fixed
        # radius only constrains the matrix-exponential ensemble.
        frozen = frozen_variance_sum(t, graph, pot, model)
        lower = lower_bound_sum(t, pot.alpha, model, graph) if do_lower else None
        ens_var = ens_se = None
        if m_draws >= 2:
            est = ensemble_variance(graph, spec, pot, model, radius, t,
                                    m_draws, seed + k, threads=threads)
            ens_var, ens_se = est.value, est.stderr
        rows.append((t, frozen, ens_var, ens_se, lower, radius))

    slope, ci, r2 = fit_exponent([(t, f) for t, f, *_ in rows])
    expect = _get(cfg, "expect_slope", float)
    tol = _get(cfg, "slope_tol", float, 0.1)
    passed = expect is None or abs(slope - expect) <= tol
    return SweepResult(rows=tuple(rows), slope=slope, slope_ci=ci,
                       r_squared=r2, passed=passed)


def _write_sweep_csv(result, cfg, out):
    out.write(f"# config_hash={config_hash(cfg)}\n")
    out.write("t,frozen,ens_var,ens_se,lower,radius\n")
    for t, frozen, ens_var, ens_se, lower, radius in result.rows:
        out.write(f"{_fmt(t)},{_fmt(frozen)},{_fmt(ens_var)},"
                  f"{_fmt(ens_se)},{_fmt(lower)},{radius}\n")


# -- rigidity-demo ----------------------------------------------------------------


@dataclass(frozen=True)
class RigidityReport:
    t_grid: tuple
    mean_statistic: tuple   # ensemble mean of sum m e^{-t lambda}, per t
    mae: tuple              # mean |rounded predictor - true inside count|
    cut: float
    empty_b: bool
    passed: bool


def rigidity_demo(cfg, seed=None, threads=1):
    """Predict the inside-B eigenvalue count from outside data only.

    The predictor is (plug-in ensemble mean of the full exponential linear
    statistic) minus the member's outside-of-B statistic; B is the
    half-plane {Re lambda <= cut}.  The exact expectation is unavailable, so
    the ensemble mean stands in for it.
    """
    graph = _graph_from(cfg)
    model = _noise_from(cfg)
    pot = _potential_from(cfg)
    radius = _get(cfg, "radius", int, 12)
    members = _get(cfg, "members", int, 500)
    t_grid = tuple(float(s) for s in
                   _get(cfg, "t_grid", str, "1 0.5 0.25 0.125").split())
    if not t_grid:
        raise ConfigError("empty t grid")
    threshold = _get(cfg, "mae_threshold", float, 0.25)
    seed = seed if seed is not None else _get(cfg, "seed", int, 0)
    spec = symmetric_walk(graph, _get(cfg, "q", float, 1.0))
    ball, _ = graph.ball(graph.root, radius)
    dim = len(ball)
    if dim > 400:
        raise DomainError(f"spectrum dimension {dim} exceeds the 400 cap")

    def member(ss):
        xi = sample_field(model, graph, ball, rng=np.random.default_rng(ss))
        asm = assemble(graph, spec, pot, xi, radius)
        eigs = []
        for lam, m in spectrum(asm.matrix).clusters:
            eigs.extend([lam.real] * m)
        return np.sort(eigs)

    seeds = np.random.SeedSequence(seed).spawn(members)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            spectra = list(pool.map(member, seeds))
    else:
        spectra = [member(ss) for ss in seeds]
    spectra = np.array(spectra)   # members x dim, each row sorted

    cut = _get(cfg, "cut_value", float)
    if cut is None:
        idx = _get(cfg, "cut_index", int, 1)
        if not 1 <= idx <= spectra.shape[1]:
            raise ConfigError(f"cut_index {idx} outside 1..{spectra.shape[1]}")
        cut = float(spectra.mean(axis=0)[idx - 1])
    empty_b = bool(cut < spectra.min())
    if empty_b:
        print("warning: cut below the spectral range; B is empty",
              file=sys.stderr)

    mean_stats, maes = [], []
    for t in t_grid:
        stat = np.exp(-t * spectra).sum(axis=1)
        mean_stat = float(stat.mean())
        outside = np.where(spectra > cut, np.exp(-t * spectra), 0.0).sum(axis=1)
        predictor = mean_stat - outside
        inside = (spectra <= cut).sum(axis=1)
        maes.append(float(np.abs(np.rint(predictor) - inside).mean()))
        mean_stats.append(mean_stat)
    inversions = sum(1 for a, b in zip(maes, maes[1:]) if b > a + 1e-12)
    passed = inversions <= 1 and maes[-1] < threshold
    return RigidityReport(t_grid=t_grid, mean_statistic=tuple(mean_stats),
                          mae=tuple(maes), cut=cut, empty_b=empty_b,
                          passed=passed)


def _write_rigidity_csv(report, cfg, out):
    out.write(f"# config_hash={config_hash(cfg)}\n")
    out.write("# expectation column is the plug-in ensemble mean of the "
              "exponential linear statistic\n")
    out.write("t,mean_statistic,mae\n")
    for t, ms, mae in zip(report.t_grid, report.mean_statistic, report.mae):
        out.write(f"{_fmt(t)},{_fmt(ms)},{_fmt(mae)}\n")


# -- tail-check --------------------------------------------------------------------


@dataclass(frozen=True)
class TailReport:
    rows: tuple          # (x, empirical, bound, se)
    passed: bool


def tail_check(cfg, seed=None):
    """Empirical jump-count tail versus the analytic Chernoff bound."""
    q = _get(cfg, "q", float, 1.0)
    t = _get(cfg, "t", float, 0.5)
    n_paths = _get(cfg, "n_paths", int, 10 ** 6)
    x_max = _get(cfg, "x_max", int, 10)
    seed = seed if seed is not None else _get(cfg, "seed", int, 0)
    if t == 0.0:
        return TailReport(rows=(), passed=True)
    counts = sample_jump_counts(q, t, n_paths, seed)
    rows = []
    ok = True
    for x in range(1, x_max + 1):
        if x <= q * t:   # bound undefined at or below the mean regime
            continue
        emp = float((counts >= x).mean())
        se = sqrt(emp * (1.0 - emp) / n_paths)
        bound = chernoff_jump_bound(q, t, x)
        ok = ok and emp <= bound + 3.0 * se
        rows.append((x, emp, bound, se))
    return TailReport(rows=tuple(rows), passed=ok)


def _write_tail_csv(report, cfg, out):
    out.write(f"# config_hash={config_hash(cfg)}\n")
    out.write("x,empirical,bound,se\n")
    for x, emp, bound, se in report.rows:
        out.write(f"{x},{_fmt(emp)},{_fmt(bound)},{_fmt(se)}\n")


# -- spectral-check ------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralReport:
    max_residual: float
    n_trials: int
    passed: bool


def spectral_check(cfg, seed=None):
    """Trace of the matrix exponential vs the exponential linear statistic
    over random assemblies."""
    from .operators import trace_identity_residual
    graph = _graph_from(cfg)
    model = _noise_from(cfg)
    pot = _potential_from(cfg)
    radius = _get(cfg, "radius", int, 8)
    n_trials = _get(cfg, "trials", int, 50)
    t_grid = tuple(float(s) for s in _get(cfg, "t_grid", str, "0.5 1").split())
    tol = _get(cfg, "residual_tol", float, 1e-8)
    seed = seed if seed is not None else _get(cfg, "seed", int, 0)
    spec = symmetric_walk(graph, _get(cfg, "q", float, 1.0))
    ball, _ = graph.ball(graph.root, radius)
    worst = 0.0
    for ss in np.random.SeedSequence(seed).spawn(n_trials):
        xi = sample_field(model, graph, ball, rng=np.random.default_rng(ss))
        asm = assemble(graph, spec, pot, xi, radius)
        for t in t_grid:
            worst = max(worst, trace_identity_residual(asm.matrix, t))
    return SpectralReport(max_residual=worst, n_trials=n_trials,
                          passed=worst < tol)


# -- fk-compare ----------------------------------------------------------------------


@dataclass(frozen=True)
class CompareReport:
    mc_mean: float
    mc_se: float
    exact: float
    z: float
    passed: bool


def fk_compare(cfg, seed=None):
    """Monte Carlo Dirichlet trace against the dense matrix exponential."""
    graph = _graph_from(cfg)
    model = _noise_from(cfg)
    pot = _potential_from(cfg)
    radius = _get(cfg, "radius", int, 10)
    t = _get(cfg, "t", float, 0.25)
    n_paths = _get(cfg, "n_paths", int, 200_000)
    seed = seed if seed is not None else _get(cfg, "seed", int, 0)
    spec = symmetric_walk(graph, _get(cfg, "q", float, 1.0))
    field_ball, _ = graph.ball(graph.root, radius + 50)
    xi = sample_field(model, graph, field_ball,
                      rng=np.random.default_rng(seed))
    est = mc_dirichlet_trace(graph, spec, pot, xi, radius, t, n_paths,
                             seed + 1)
    exact = exact_dirichlet_trace(graph, spec, pot, xi, radius, t)
    z = (est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
    return CompareReport(mc_mean=est.mean, mc_se=est.stderr, exact=exact,
                         z=z, passed=abs(z) <= 4.0)


# -- entry point ------------------------------------------------------------------------


def _open_out(path):
    return open(path, "w") if path else sys.stdout


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fksim",
        description="Simulation and verification suite for random "
                    "Schrodinger operators on graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sweep-variance", "rigidity-demo", "tail-check",
                 "spectral-check", "fk-compare"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
        if args.command == "sweep-variance":
            res = sweep_variance(cfg, threads=args.threads)
            out = _open_out(args.out)
            _write_sweep_csv(res, cfg, out)
            if out is not sys.stdout:
                out.close()
            print(f"slope={res.slope:.6f} ci95={res.slope_ci:.6f} "
                  f"r2={res.r_squared:.6f} pass={res.passed}")
            return 0 if res.passed else 2
        if args.command == "rigidity-demo":
            res = rigidity_demo(cfg, threads=args.threads)
            out = _open_out(args.out)
            _write_rigidity_csv(res, cfg, out)
            if out is not sys.stdout:
                out.close()
            print(f"cut={res.cut:.6f} mae={['%.4f' % m for m in res.mae]} "
                  f"pass={res.passed}")
            return 0 if res.passed else 2
        if args.command == "tail-check":
            res = tail_check(cfg)
            out = _open_out(args.out)
            _write_tail_csv(res, cfg, out)
            if out is not sys.stdout:
                out.close()
            print(f"points={len(res.rows)} pass={res.passed}")
            return 0 if res.passed else 2
        if args.command == "spectral-check":
            res = spectral_check(cfg)
            print(f"max_residual={res.max_residual:.3e} "
                  f"trials={res.n_trials} pass={res.passed}")
            return 0 if res.passed else 2
        if args.command == "fk-compare":
            res = fk_compare(cfg)
            print(f"mc={res.mc_mean:.6f} se={res.mc_se:.6f} "
                  f"exact={res.exact:.6f} z={res.z:.3f} pass={res.passed}")
            return 0 if res.passed else 2
        raise ConfigError(f"unknown command {args.command!r}")
    except Exception as err:   # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
