import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capres.netmodel import (
    Branch,
    Bus,
    Network,
    NetworkError,
    RootBusError,
    load_network,
    loads_network,
    path_impedance,
    short_circuit_power,
    subtree,
    to_csv,
)

from conftest import random_tree
from oracles import bfs_subtree, read_feeder, walk_impedance

HEAD = "# v_nom_kv=12.66\nfrom,to,r_ohm,x_ohm,p_kw,q_kvar,open\n"

# frozen from oracles.walk_impedance over the transcribed feeder data
BW33_Z17 = complex(11.0628, 9.1422)
BW33_SUBTREE_2 = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32}


def test_two_bus_file():
    net = loads_network(HEAD + "0,1,0.1,0.05,100,60,0\n")
    assert net.n_bus == 2
    assert len(net.branches) == 1
    assert net.buses[1].p_load == 100.0 and net.buses[1].q_load == 60.0


def test_bw33_shape_and_totals(bw33):
    assert bw33.n_bus == 33
    assert len(bw33.branches) == 32
    assert len(bw33.ties) == 5
    assert bw33.v_nom == 12.66
    assert bw33.p_load.sum() == pytest.approx(3715.0)
    assert bw33.q_load.sum() == pytest.approx(2300.0)


def test_self_loop_names_bus():
    with pytest.raises(NetworkError, match="bus 5"):
        loads_network(HEAD + "0,1,0.1,0.1,1,1,0\n5,5,0.1,0.1,1,1,0\n")


@pytest.mark.parametrize(
    "rows, fragment",
    [
        ("0,1,0.1,0.1,1,1,0\n0,1,0.2,0.1,1,1,0\n", "duplicate branch into bus 1"),
        ("0,1,0.1,0.1,1,1,0\n0,3,0.1,0.1,1,1,0\n", "disconnected"),
        ("0,1,0.1,0.1,1,1,0\n3,2,0.1,0.1,1,1,0\n2,3,0.1,0.1,1,1,0\n", "cycle"),
        ("0,1,abc,0.1,1,1,0\n", "malformed"),
        ("0,1,-0.1,0.1,1,1,0\n", "row 3"),
        ("1,0,0.1,0.1,1,1,0\n", "substation"),
    ],
)
def test_structural_errors(rows, fragment):
    with pytest.raises(NetworkError, match=fragment):
        loads_network(HEAD + rows)


def test_missing_voltage_line():
    with pytest.raises(NetworkError, match="v_nom_kv"):
        loads_network("from,to,r_ohm,x_ohm,p_kw,q_kvar,open\n0,1,0.1,0.1,1,1,0\n")


def test_error_carries_row_number():
    with pytest.raises(NetworkError) as info:
        loads_network(HEAD + "0,1,0.1,0.1,1,1,0\n1,2,x,0.1,1,1,0\n")
    assert info.value.row == 4


def test_path_impedance_root_and_chain():
    net = loads_network(HEAD + "0,1,0.1,0.05,0,0,0\n1,2,0.2,0.1,0,0,0\n")
    assert path_impedance(net, 0) == 0j
    z = path_impedance(net, 2)
    assert z.real == pytest.approx(0.3) and z.imag == pytest.approx(0.15)


def test_path_impedance_bw33_bus17(bw33):
    _, parent, z, _ = read_feeder("bw33")
    assert walk_impedance(parent, z, 17) == pytest.approx(BW33_Z17, rel=1e-12)
    assert path_impedance(bw33, 17) == pytest.approx(BW33_Z17, rel=1e-12)


def test_path_impedance_unknown_bus(bw33):
    with pytest.raises(KeyError):
        path_impedance(bw33, 33)


def test_short_circuit_unit_case():
    net = Network((Bus(0), Bus(1)), (Branch(0, 1, 0.6, 0.8),), v_nom=1.0)
    assert short_circuit_power(net, 1) == pytest.approx(1.0e6)


def test_short_circuit_feeder_voltage():
    net = Network((Bus(0), Bus(1)), (Branch(0, 1, 0.3, 0.4),), v_nom=12.66)
    # |Z| = 0.5
    assert short_circuit_power(net, 1) == pytest.approx(12660.0**2 / 0.5, rel=1e-12)
    assert short_circuit_power(net, 1) == pytest.approx(3.205512e8, rel=1e-9)


def test_short_circuit_root_raises(bw33):
    with pytest.raises(RootBusError):
        short_circuit_power(bw33, 0)


def test_short_circuit_falls_down_every_path(bw33):
    for b in range(1, bw33.n_bus):
        p = int(bw33.parent[b])
        if p != bw33.root:
            assert bw33.scc[b] < bw33.scc[p]


def test_scc_override_column():
    net = loads_network(
        "# v_nom_kv=12.66\nfrom,to,r_ohm,x_ohm,p_kw,q_kvar,open,scc_va\n0,1,0.1,0.1,1,1,0,5e6\n1,2,0.1,0.1,1,1,0,\n"
    )
    assert short_circuit_power(net, 1) == 5e6
    assert short_circuit_power(net, 2) == pytest.approx(12660.0**2 / abs(0.2 + 0.2j))


def test_subtree_leaf_and_root(bw33):
    assert subtree(bw33, 17) == {17}
    assert subtree(bw33, 0) == set(range(33))


def test_subtree_bw33_lateral(bw33):
    _, parent, _, _ = read_feeder("bw33")
    assert bfs_subtree(parent, 2) == BW33_SUBTREE_2
    assert subtree(bw33, 2) == BW33_SUBTREE_2


def test_sibling_subtrees_disjoint(bw33):
    for kids in bw33.children:
        for i, a in enumerate(kids):
            for b in kids[i + 1 :]:
                assert not subtree(bw33, a) & subtree(bw33, b)


def test_descendant_matrix_matches_subtrees(bw33):
    for b in range(bw33.n_bus):
        assert set(np.flatnonzero(bw33.descendants[b])) == subtree(bw33, b)


def test_load_is_deterministic(bw33):
    from capres.netmodel import bundled_path

    again = load_network(bundled_path("bw33"))
    assert again == bw33
    assert np.array_equal(again.scc, bw33.scc)


def test_csv_round_trip(bw33):
    back = loads_network(to_csv(bw33))
    assert back == bw33


def test_arrays_are_read_only(bw33):
    with pytest.raises(ValueError):
        bw33.scc[1] = 0.0


@given(st.integers(2, 25), st.integers(0, 2**31))
def test_random_tree_paths_and_subtrees(n, seed):
    net = random_tree(np.random.default_rng(seed), n)
    parent = {b: int(net.parent[b]) for b in range(1, n)}
    z = {b: net.branches[b - 1].z for b in range(1, n)}
    for b in range(n):
        assert path_impedance(net, b) == pytest.approx(walk_impedance(parent, z, b), rel=1e-12, abs=1e-15)
        assert subtree(net, b) == bfs_subtree(parent, b)
    # subtree sizes add up: each bus sits in exactly depth + 1 subtrees
    depth_total = sum(len(subtree(net, b)) for b in range(n))
    depths = 0
    for b in range(n):
        while b in parent:
            depths += 1
            b = parent[b]
    assert depth_total == depths + n
    assert all(math.isfinite(net.scc[b]) for b in range(1, n))
