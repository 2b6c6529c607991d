"""Hot numeric kernels for the radial backward sweep.

Two implementations of every kernel live here:

* ``*_loop``: an O(n) sweep over the buses in reverse breadth-first order,
  compiled with ``numba.njit`` when numba is importable.
* ``*_matrix``: a pure-numpy version built on the dense descendant matrix
  ``D`` (``D[i, j] = 1`` iff bus ``j`` lies in the subtree of bus ``i``).

The public names (``accumulate``, ``total_loss``) dispatch to one of the two.
Set ``CAPRES_DISABLE_NUMBA=1`` in the environment to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLED = os.environ.get("CAPRES_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def _jit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


@_jit
def accumulate_loop(order, parent, values):
    """Sum ``values`` over every subtree; ``out[b]`` covers bus ``b`` and its descendants."""
    out = values.copy()
    for k in range(order.shape[0] - 1, 0, -1):
        b = order[k]
        out[parent[b]] += out[b]
    return out


@_jit
def total_loss_loop(order, parent, r_scaled, p_flow, q_net):
    """Total branch loss for fixed active flows and per-bus net reactive demand.

    ``r_scaled[b]`` already folds the unit conversion for the branch entering
    ``b`` (zero at the root), so each term is ``r_scaled * (P^2 + Q^2)``.
    """
    q = q_net.copy()
    total = 0.0
    for k in range(order.shape[0] - 1, 0, -1):
        b = order[k]
        qb = q[b]
        q[parent[b]] += qb
        pb = p_flow[b]
        total += r_scaled[b] * (pb * pb + qb * qb)
    return total


def accumulate_matrix(descendants, values):
    return descendants @ values


def total_loss_matrix(descendants, r_scaled, p_flow, q_net):
    q = descendants @ q_net
    return float(np.dot(r_scaled, p_flow * p_flow + q * q))


if USE_NUMBA:

    def accumulate(topo, values):
        return accumulate_loop(topo.order, topo.parent, values)

    def total_loss(topo, r_scaled, p_flow, q_net):
        return total_loss_loop(topo.order, topo.parent, r_scaled, p_flow, q_net)

else:

    def accumulate(topo, values):
        return accumulate_matrix(topo.descendants, values)

    def total_loss(topo, r_scaled, p_flow, q_net):
        return total_loss_matrix(topo.descendants, r_scaled, p_flow, q_net)
