"""Simplified backward-sweep power flow for radial feeders.

Bus voltages are held at 1 pu and branch losses are not fed back into the
upstream flows, so one sweep from the leaves to the root fixes every branch
flow. Flow arrays are indexed by bus: entry ``b`` is the flow on the branch
entering ``b`` (zero for the root).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .costmodel import CapacitorCatalog, check_placement
from .netmodel import Network, _check_bus


@dataclass(frozen=True, eq=False)
class FlowState:
    p_flow: np.ndarray  # kW
    q_flow: np.ndarray  # kvar, negative when over-compensated
    branch_loss: np.ndarray  # kW
    total_loss_kw: float


def _cap_kvar(placement: np.ndarray, catalog: CapacitorCatalog) -> np.ndarray:
    sizes = np.concatenate([[0.0], np.asarray(catalog.sizes_kvar, dtype=float)])
    return sizes[placement]


def solve_flows(net: Network, placement, catalog: CapacitorCatalog | None = None) -> FlowState:
    catalog = catalog or CapacitorCatalog()
    slots = check_placement(net, placement, catalog.n_types)
    q_net = net.q_load - _cap_kvar(slots, catalog)
    # S_base = 1 MVA, V_base = v_nom
    p_pu = _kernels.accumulate(net, net.p_load / 1000.0)
    q_pu = _kernels.accumulate(net, q_net / 1000.0)
    p_pu[net.root] = 0.0
    q_pu[net.root] = 0.0
    r_pu = net.r_in / net.v_nom**2
    loss = 1000.0 * r_pu * (p_pu * p_pu + q_pu * q_pu)
    return FlowState(p_pu * 1000.0, q_pu * 1000.0, loss, float(loss.sum()))


def subtree_losses(net: Network, flow: FlowState) -> np.ndarray:
    """Loss (kW) of every branch inside each bus's subtree, incoming branch included."""
    return np.asarray(_kernels.accumulate(net, np.ascontiguousarray(flow.branch_loss)))


def subtree_loss(net: Network, flow: FlowState, bus: int) -> float:
    _check_bus(net, bus)
    if bus == net.root:
        return flow.total_loss_kw
    return float(subtree_losses(net, flow)[bus])


def loss_eq5(net: Network, flow_base: FlowState, placement, catalog: CapacitorCatalog | None = None) -> float:
    """Literal ``sum r (P^2 + Q^2 - Qbar^2)`` form of the compensated loss, kW.

    ``flow_base`` holds the uncompensated flows and ``Qbar`` on each branch is
    the capacitor installed at the branch's downstream bus. This is kept only
    for comparison with :func:`solve_flows`, which subtracts the capacitor
    injection from the flows before squaring.
    """
    catalog = catalog or CapacitorCatalog()
    slots = check_placement(net, placement, catalog.n_types)
    if flow_base.p_flow.shape != (net.n_bus,):
        raise ValueError("flow_base does not belong to this network")
    qbar = _cap_kvar(slots, catalog) / 1000.0
    qbar[net.root] = 0.0
    p = flow_base.p_flow / 1000.0
    q = flow_base.q_flow / 1000.0
    r_pu = net.r_in / net.v_nom**2
    return float(1000.0 * np.sum(r_pu * (p * p + q * q - qbar * qbar)))
