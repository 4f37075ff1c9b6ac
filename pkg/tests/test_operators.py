import math

import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from fksim.errors import DomainError, InputError, NumericalError
from fksim.lattice import GraphModel
from fksim.noise import FieldSample, iid_gaussian, sample_field
from fksim.operators import (PotentialSpec, assemble, dump_matrix, expm_neg,
                             load_matrix, multiplicity_pushforward, omega0,
                             spectrum, trace_identity_residual)
from fksim.walker import symmetric_walk

G1 = GraphModel.zd_l1(1)
SPEC = symmetric_walk(G1, 1.0)


def _zero_field(verts):
    return FieldSample(tuple(verts), {v: 0.0 for v in verts})


def test_two_vertex_assembly():
    g = GraphModel.explicit(2, [(0, 1)])
    spec = symmetric_walk(g, 1.0)
    xi = _zero_field([0, 1])
    asm = assemble(g, spec, PotentialSpec(custom={0: 0.0, 1: 0.0}), xi, 1)
    assert np.allclose(asm.matrix, [[1.0, -1.0], [-1.0, 1.0]])


def test_dirichlet_vertex_removed():
    g = GraphModel.explicit(2, [(0, 1)])
    spec = symmetric_walk(g, 1.0)
    xi = _zero_field([0, 1])
    pot = PotentialSpec(custom={0: 0.0, 1: 0.0}, dirichlet=frozenset({1}))
    asm = assemble(g, spec, pot, xi, 1)
    assert asm.vertices == (0,)
    assert np.allclose(asm.matrix, [[1.0]])


def test_z1_quadratic_potential_assembly():
    verts, _ = G1.ball((0,), 1)
    asm = assemble(G1, SPEC, PotentialSpec(alpha=2.0), _zero_field(verts), 1)
    assert asm.vertices == ((-1,), (0,), (1,))
    expected = np.array([[2.0, -0.5, 0.0],
                         [-0.5, 1.0, -0.5],
                         [0.0, -0.5, 2.0]])
    assert np.allclose(asm.matrix, expected)


def test_omega0_is_potential_floor():
    verts, _ = G1.ball((0,), 3)
    xi = FieldSample(tuple(verts), {v: 0.5 for v in verts})
    asm = assemble(G1, SPEC, PotentialSpec(alpha=2.0), xi, 3)
    assert asm.omega0 == pytest.approx(0.5)
    assert omega0(PotentialSpec(alpha=2.0), G1, xi, verts) == pytest.approx(0.5)


def test_expm_matches_scipy():
    rng = np.random.default_rng(0)
    for n in (3, 10, 40):
        m = rng.standard_normal((n, n)) * 3.0
        for t in (0.1, 1.0, 4.0):
            assert np.allclose(expm_neg(m, t), scipy_expm(-t * m),
                               rtol=1e-10, atol=1e-10)


def test_expm_identity_at_t_zero():
    m = np.diag([1.0, 2.0])
    assert np.allclose(expm_neg(m, 0.0), np.eye(2))


def test_expm_rejects_nonfinite():
    with pytest.raises(NumericalError):
        expm_neg(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_expm_rejects_nonsquare():
    with pytest.raises(InputError):
        expm_neg(np.zeros((2, 3)))


def test_spectrum_multiplicities():
    res = spectrum(np.diag([1.0, 1.0, 2.0]))
    assert res.total_multiplicity == 3
    vals = sorted((lam.real, m) for lam, m in res.clusters)
    assert vals == [(pytest.approx(1.0), 2), (pytest.approx(2.0), 1)]


def test_spectrum_clusters_near_degenerate():
    res = spectrum(np.diag([1.0, 1.0 + 1e-9, 5.0]))
    assert res.total_multiplicity == 3
    assert len(res.clusters) == 2


def test_trace_identity_on_random_assemblies():
    verts, _ = G1.ball((0,), 8)
    rng = np.random.default_rng(7)
    for _ in range(10):
        xi = sample_field(iid_gaussian(1.0), G1, verts, rng=rng)
        asm = assemble(G1, SPEC, PotentialSpec(alpha=2.0), xi, 8)
        for t in (0.5, 1.0):
            assert trace_identity_residual(asm, t) < 1e-8


def test_multiplicity_pushforward_diagonal():
    t = 0.5
    m = np.diag([0.0, math.log(4.0) / t, math.log(4.0) / t])
    checks = multiplicity_pushforward(m, t)
    by_image = {round(c.image.real, 6): c for c in checks}
    assert by_image[0.25].mult_image == 2 and by_image[0.25].passed
    assert by_image[1.0].mult_image == 1 and by_image[1.0].passed


def test_multiplicity_pushforward_jordan_block():
    j = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]])
    for t in (0.5, 1.0):
        checks = multiplicity_pushforward(j, t)
        assert len(checks) == 1
        assert checks[0].mult_image == 3 and checks[0].passed


def test_multiplicity_pushforward_aliased():
    # rotation block gives +-2*pi*i, which e^{-M} maps onto the same image
    # as the eigenvalue 0
    th = 2.0 * math.pi
    m = np.zeros((3, 3))
    m[0, 1], m[1, 0] = th, -th
    checks = multiplicity_pushforward(m, 1.0)
    assert len(checks) == 1
    assert checks[0].aliased and checks[0].passed
    assert checks[0].mult_image == 3


def test_pushforward_dimension_cap():
    with pytest.raises(DomainError):
        multiplicity_pushforward(np.eye(60), 1.0)


def test_matrix_dump_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    m = rng.standard_normal((6, 6))
    p = tmp_path / "m.txt"
    dump_matrix(m, p)
    assert np.array_equal(load_matrix(p), m)


def test_assemble_missing_field_value():
    verts, _ = G1.ball((0,), 2)
    xi = _zero_field(verts[:-1])
    with pytest.raises(InputError):
        assemble(G1, SPEC, PotentialSpec(alpha=2.0), xi, 2)
