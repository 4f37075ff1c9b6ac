"""Acceptance checks: one test per headline claim, each printing a pass/fail
line.  Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import math

import numpy as np

from fksim.cli import fit_exponent, rigidity_demo, tail_check
from fksim.lattice import GraphModel
from fksim.noise import (constant_gaussian, iid_gaussian, moment_bound_probe,
                         power_decay_gaussian, sample_field,
                         taylor_bound_check)
from fksim.operators import (PotentialSpec, assemble, multiplicity_pushforward,
                             trace_identity_residual)
from fksim.walker import symmetric_walk
from fksim import feynman_kac as fk

G1 = GraphModel.zd_l1(1)
SPEC = symmetric_walk(G1, 1.0)
POT = PotentialSpec(alpha=2.0)


def _report(num, name, ok):
    print(f"criterion {num:02d} [{name}]: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


def _frozen_slope(model):
    rows = [(t, fk.frozen_variance_sum(t, G1, POT, model))
            for t in (2.0 ** -k for k in range(6, 13))]
    return fit_exponent(rows)


def test_criterion_01_scaling_iid():
    slope, _, r2 = _frozen_slope(iid_gaussian(1.0))
    ok = abs(slope - 1.5) <= 0.1 and r2 >= 0.999
    _report(1, f"iid scaling slope={slope:.4f} r2={r2:.6f}", ok)


def test_criterion_02_scaling_constant():
    slope, _, r2 = _frozen_slope(constant_gaussian(1.0))
    ok = abs(slope - 1.0) <= 0.1
    _report(2, f"constant scaling slope={slope:.4f}", ok)


def test_criterion_03_scaling_power_decay():
    slope, _, r2 = _frozen_slope(power_decay_gaussian(beta=0.5))
    ok = abs(slope - 1.25) <= 0.1
    _report(3, f"power-decay scaling slope={slope:.4f}", ok)


def test_criterion_04_lower_bound_positivity():
    vals = [fk.lower_bound_sum(2.0 ** -k, 0.5, iid_gaussian(1.0), G1)
            for k in range(4, 13)]
    floor = 0.5 * vals[0]
    ok = all(v >= floor for v in vals)
    _report(4, f"lower bound min ratio={min(vals) / vals[0]:.4f}", ok)


def test_criterion_05_riemann_limit():
    _, n1 = fk.riemann_tail_sum(1e-6, 1.0, 2.0, graph=G1)
    _, n2 = fk.riemann_tail_sum(1e-6, 2.0, 2.0, graph=G1)
    ok = abs(n1 ** 2 - 1.0) <= 0.01 and abs(n2 ** 2 - 0.25) <= 0.01 * 0.25
    _report(5, f"riemann limits {n1 ** 2:.6f}, {n2 ** 2:.6f}", ok)


def test_criterion_06_trace_identity():
    verts, _ = G1.ball((0,), 8)
    rng = np.random.default_rng(60)
    worst = 0.0
    for _ in range(50):
        xi = sample_field(iid_gaussian(1.0), G1, verts, rng=rng)
        asm = assemble(G1, SPEC, POT, xi, 8)
        for t in (0.5, 1.0):
            worst = max(worst, trace_identity_residual(asm, t))
    _report(6, f"trace identity worst residual={worst:.2e}", worst < 1e-8)


def _jordan(lam, k):
    j = np.eye(k) * lam
    for i in range(k - 1):
        j[i, i + 1] = 1.0
    return j


def _pushforward_suite():
    mats = []
    # Jordan blocks of sizes 2..4 at several eigenvalues
    for lam in (0.0, 0.5, -1.0, 2.0):
        for k in (2, 3, 4):
            mats.append(_jordan(lam, k))
    # block-diagonal mixes with repeated and distinct eigenvalues
    for lam1, lam2 in ((0.0, 1.0), (0.5, 0.5), (-0.5, 1.5), (1.0, 3.0)):
        mats.append(np.block([
            [_jordan(lam1, 3), np.zeros((3, 2))],
            [np.zeros((2, 3)), _jordan(lam2, 2)]]))
    # plain diagonals with repeats
    for diag in ([1.0, 1.0, 2.0], [0.0, 0.0, 0.0, 3.0],
                 [-1.0, 2.0, 2.0, 2.0], [0.25, 0.5, 0.75, 1.0],
                 [5.0], [1.5, 1.5, -1.5, -1.5, 0.0, 0.0]):
        mats.append(np.diag(diag))
    # upper-triangular with coupled repeated diagonal
    for lam in (0.0, 1.0, -2.0):
        m = np.triu(np.ones((4, 4))) * 0.5 + np.eye(4) * lam
        np.fill_diagonal(m, lam)
        mats.append(m)
    # rotation blocks: purely imaginary pairs aliasing onto real images
    for t_alias in (0.5, 1.0):
        th = 2.0 * math.pi / t_alias
        m = np.zeros((3, 3))
        m[0, 1], m[1, 0] = th, -th
        mats.append(m)
    # aliased-image diagonal cases (complex eigenvalues, same image)
    mats.append(np.diag([0.0, 2j * math.pi, -2j * math.pi]))
    mats.append(np.diag([1.0, 1.0 + 4j * math.pi, 1.0 - 4j * math.pi, 3.0]))
    mats.append(np.diag([0.0 + 0j, 4j * math.pi]))
    return mats


def test_criterion_07_multiplicity_pushforward():
    mats = _pushforward_suite()
    assert len(mats) == 30
    ok = True
    saw_alias = False
    for m in mats:
        for t in (0.5, 1.0):
            for check in multiplicity_pushforward(m, t, cluster_tol=1e-6):
                ok = ok and check.passed
                saw_alias = saw_alias or check.aliased
    _report(7, f"pushforward on {len(mats)} matrices, aliasing seen={saw_alias}",
            ok and saw_alias)


def _fixed_field(radius=80, seed=800):
    verts, _ = G1.ball((0,), radius)
    return sample_field(iid_gaussian(1.0), G1, verts, seed=seed)


def test_criterion_08_fk_vs_expm():
    xi = _fixed_field()
    t = 0.25
    est = fk.mc_dirichlet_trace(G1, SPEC, POT, xi, 10, t, 200_000, seed=80)
    exact = fk.exact_dirichlet_trace(G1, SPEC, POT, xi, 10, t)
    z = abs(est.mean - exact) / est.stderr
    rel = est.stderr / exact
    ok = z <= 4.0 and rel < 0.02
    _report(8, f"fk-vs-expm z={z:.2f} rel_se={rel:.4f}", ok)


def test_criterion_09_dirichlet_kernel():
    xi = _fixed_field()
    t = 0.25
    starts, killed, unkilled = fk._trace_samples(G1, SPEC, POT, xi, 4, t,
                                                 200_000, seed=90)
    pathwise = all(np.all(kw <= uw + 1e-15)
                   for kw, uw in zip(killed, unkilled))
    est = fk._stratified_estimate(killed, t)
    exact = fk.exact_dirichlet_trace(G1, SPEC, POT, xi, 4, t)
    z = abs(est.mean - exact) / est.stderr
    ok = z <= 4.0 and pathwise
    _report(9, f"dirichlet kernel z={z:.2f} killed<=unkilled={pathwise}", ok)


def test_criterion_10_variance_estimator_identity():
    t = 0.5
    ok = True
    detail = []
    for model, name in ((iid_gaussian(1.0), "iid"),
                        (constant_gaussian(1.0), "constant")):
        ens = fk.ensemble_variance(G1, SPEC, POT, model, 6, t, 6000, seed=100)
        pw = fk.paired_walker_variance(G1, SPEC, POT, model, t, 2500, 6,
                                       seed=101)
        lo1, hi1 = ens.ci95()
        lo2, hi2 = pw.ci95()
        overlap = max(lo1, lo2) <= min(hi1, hi2)
        ok = ok and overlap
        detail.append(f"{name}: ens={ens.value:.4f} pw={pw.value:.4f} "
                      f"overlap={overlap}")
    _report(10, "; ".join(detail), ok)


def test_criterion_11_poisson_domination():
    rep = tail_check({"q": "1", "t": "0.5", "n_paths": "1000000",
                      "x_max": "10"}, seed=110)
    xs = [x for x, *_ in rep.rows]
    ok = rep.passed and xs == list(range(1, 11))
    _report(11, f"jump tail dominated at x={xs[0]}..{xs[-1]}", ok)


def test_criterion_12_rigidity_predictor():
    cfg = {"radius": "12", "members": "500", "alpha": "2", "gamma0": "1",
           "noise": "iid", "t_grid": "1 0.5 0.25 0.125", "cut_index": "1",
           "mae_threshold": "0.25"}
    rep = rigidity_demo(cfg, seed=120)
    inversions = sum(1 for a, b in zip(rep.mae, rep.mae[1:]) if b > a + 1e-12)
    ok = rep.passed and inversions <= 1 and rep.mae[-1] < 0.25
    _report(12, f"rigidity mae={['%.4f' % m for m in rep.mae]}", ok)


def test_criterion_13_noise_bound_suite():
    rng = np.random.default_rng(130)
    model = iid_gaussian(1.0, moment_constant=1.0)
    ok = True
    for _ in range(20):
        support = rng.integers(-5, 6, size=rng.integers(1, 4))
        f = {(int(s),): float(rng.uniform(-0.15, 0.15))
             for s in np.unique(support)}
        ok = ok and taylor_bound_check(f, model, G1, n_samples=30_000,
                                       seed=int(rng.integers(2 ** 31))).passed
    ratio = moment_bound_probe(model, G1, p_max=8, n_samples=400_000, seed=131)
    ok = ok and ratio <= 1.0
    _report(13, f"noise bounds, moment ratio={ratio:.4f}", ok)
