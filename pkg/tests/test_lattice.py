import pytest

from fksim.errors import ConfigError, InputError
from fksim.lattice import GraphModel


def test_z1_neighbors_and_distance():
    g = GraphModel.zd_l1(1)
    assert sorted(g.neighbors((0,))) == [(-1,), (1,)]
    assert g.distance((-3,), (4,)) == 7


def test_z2_l1_vs_linf_degree():
    g1 = GraphModel.zd_l1(2)
    g8 = GraphModel.zd_linf(2)
    assert len(g1.neighbors((0, 0))) == 4
    assert len(g8.neighbors((0, 0))) == 8
    assert g1.distance((0, 0), (2, 3)) == 5
    assert g8.distance((0, 0), (2, 3)) == 3


def test_coordination_counts_z1():
    g = GraphModel.zd_l1(1)
    assert g.coordination_count(0) == 1
    assert all(g.coordination_count(n) == 2 for n in range(1, 6))


def test_coordination_counts_z2():
    g = GraphModel.zd_l1(2)
    # 4n for the l1 lattice in dimension two
    assert [g.coordination_count(n) for n in range(1, 5)] == [4, 8, 12, 16]
    # match brute-force sphere sizes
    for n in range(1, 4):
        assert g.coordination_count(n) == len(g.sphere((0, 0), n))


def test_coordination_counts_linf():
    g = GraphModel.zd_linf(2)
    for n in range(1, 4):
        assert g.coordination_count(n) == (2 * n + 1) ** 2 - (2 * n - 1) ** 2
        assert g.coordination_count(n) == len(g.sphere((0, 0), n))


def test_ball_sizes_and_index():
    g = GraphModel.zd_l1(1)
    verts, index = g.ball((0,), 3)
    assert len(verts) == 7
    assert verts == sorted(verts)
    assert all(index[v] == i for i, v in enumerate(verts))


def test_ball_ordering_reproducible():
    g = GraphModel.zd_l1(2)
    assert g.ball((0, 0), 4)[0] == g.ball((0, 0), 4)[0]


def test_explicit_graph_bfs_distance():
    # path graph 0-1-2-3
    g = GraphModel.explicit(4, [(0, 1), (1, 2), (2, 3)])
    assert g.distance(0, 3) == 3
    assert g.sphere(0, 2) == [2]


def test_explicit_disconnected_raises():
    g = GraphModel.explicit(4, [(0, 1), (2, 3)])
    with pytest.raises(InputError):
        g.distance(0, 3)


def test_degree_bound_check():
    with pytest.raises(ConfigError):
        GraphModel.explicit(3, [(0, 1), (0, 2), (1, 2)], degree_bound=1)


def test_edge_list_round_trip(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("4 0\n0 1\n1 2\n2 3\n")
    g = GraphModel.from_edge_list(p)
    assert g.root == 0
    assert g.distance(0, 3) == 3


def test_bad_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("3 0\n0 5\n")
    with pytest.raises(InputError):
        GraphModel.from_edge_list(p)
