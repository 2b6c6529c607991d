import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capres.costmodel import CapacitorCatalog
from capres.netmodel import loads_network
from capres.resonance import (
    ResonancePolicy,
    RootPlacementError,
    check_feasible,
    feasibility_table,
    harmonic_order,
    placement_feasible,
    resonance_frequency,
    round_half_away,
)

from oracles import band_rule, round_rule

ROUND = ResonancePolicy("round")
BAND = ResonancePolicy("band")
QC = 3.0e5


def test_harmonic_order_examples():
    assert harmonic_order(16 * QC, QC) == 4.0
    assert harmonic_order(9 * QC, QC) == 3.0
    assert harmonic_order(2.4e6, 3.0e5) == pytest.approx(2.8284271, rel=1e-7)


def test_harmonic_order_rejects_non_positive():
    with pytest.raises(ValueError):
        harmonic_order(0.0, QC)
    with pytest.raises(ValueError):
        check_feasible(1e6, -5.0)


def test_resonance_frequency_examples():
    assert resonance_frequency(16 * QC, QC) == 240.0
    assert resonance_frequency(2.4e6, 3.0e5) == pytest.approx(169.7056, rel=1e-6)
    assert resonance_frequency(9 * QC, QC, ResonancePolicy(fundamental_hz=50)) == 150.0


@pytest.mark.parametrize(
    "ratio, round_ok, band_ok",
    [(16, True, True), (9, False, False), (8.41, False, False), (6.8644, False, True)],
)
def test_check_feasible_examples(ratio, round_ok, band_ok):
    assert check_feasible(ratio * QC, QC, ROUND) is round_ok
    assert check_feasible(ratio * QC, QC, BAND) is band_ok


def test_half_orders_round_away():
    assert round_half_away(2.5) == 3
    assert round_half_away(-2.5) == -3
    assert check_feasible(6.25 * QC, QC, ROUND) is False


def test_round_boundaries():
    # order 2.5 separates the feasible 2 from the infeasible 3
    assert check_feasible(6.25 * QC * (1 - 1e-9), QC, ROUND)
    assert not check_feasible(6.25 * QC * (1 + 1e-9), QC, ROUND)
    assert not check_feasible(12.25 * QC * (1 - 1e-9), QC, ROUND)
    assert check_feasible(12.25 * QC * (1 + 1e-9), QC, ROUND)


def test_band_edges():
    # band around the 3rd harmonic is [170, 190] Hz
    for fp, ok in [(169.99, True), (170.01, False), (189.99, False), (190.01, True), (240.0, True)]:
        assert check_feasible((fp / 60.0) ** 2 * QC, QC, BAND) is ok


def test_policy_validation():
    with pytest.raises(ValueError):
        ResonancePolicy("nearest")
    with pytest.raises(ValueError):
        ResonancePolicy(fundamental_hz=0)


@given(st.floats(1.0, 100.0), st.floats(1e3, 1e7))
def test_matches_direct_evaluation(ratio, qc):
    scc = ratio * qc
    assert check_feasible(scc, qc, ROUND) == round_rule(scc, qc)
    assert check_feasible(scc, qc, BAND) == band_rule(scc, qc)


@given(st.floats(1.0, 100.0), st.floats(1e3, 1e7), st.integers(-10, 10))
def test_depends_only_on_the_ratio(ratio, qc, k):
    scale = 2.0**k
    for policy in (ROUND, BAND):
        assert check_feasible(ratio * qc, qc, policy) == check_feasible(ratio * qc * scale, qc * scale, policy)


def test_modes_disagree_somewhere():
    ratios = np.linspace(1, 100, 20001)
    diff = [r for r in ratios if check_feasible(r * QC, QC, ROUND) != check_feasible(r * QC, QC, BAND)]
    assert diff


def _net_with_scc(scc_by_bus):
    rows = "".join(f"{b - 1},{b},0.1,0.1,10,5,0,{s!r}\n" for b, s in enumerate(scc_by_bus, start=1))
    return loads_network("# v_nom_kv=12.66\nfrom,to,r_ohm,x_ohm,p_kw,q_kvar,open,scc_va\n" + rows)


def test_placement_feasible_examples():
    cat = CapacitorCatalog()
    net = _net_with_scc([9 * 150e3, 16 * 150e3])
    assert placement_feasible(net, np.zeros(3, dtype=int), cat) == (True, [])
    assert placement_feasible(net, np.array([0, 1, 0]), cat) == (False, [1])
    assert placement_feasible(net, np.array([0, 0, 1]), cat) == (True, [])
    assert placement_feasible(net, np.array([0, 1, 1]), cat) == (False, [1])


def test_root_placement():
    cat = CapacitorCatalog()
    net = _net_with_scc([16 * 150e3])
    with pytest.raises(RootPlacementError):
        placement_feasible(net, np.array([1, 0]), cat)
    assert placement_feasible(net, np.array([1, 0]), cat, allow_root_placement=True) == (True, [])


def test_feasibility_table_agrees_with_check(bw33):
    sizes = CapacitorCatalog().sizes_kvar
    for allow in (False, True):
        table = feasibility_table(bw33, sizes, ROUND, allow)
        assert table.shape == (33, 7)
        assert table[:, 0].all()
        assert (table[0, 1:] == allow).all()
        for b in range(1, 33):
            for t in range(1, 7):
                assert table[b, t] == check_feasible(bw33.scc[b], sizes[t - 1] * 1e3, ROUND)


def test_bw33_has_both_outcomes(bw33):
    table = feasibility_table(bw33, CapacitorCatalog().sizes_kvar)
    inner = table[1:, 1:]
    assert inner.any() and not inner.all()
    assert math.isinf(bw33.scc[0])
