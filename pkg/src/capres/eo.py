"""Extremal optimisation for resonance-constrained capacitor placement.

One solution is evolved. Each step ranks the buses by the loss of the subtree
they head (largest first), picks one with a power law over ranks, builds the
resonance-feasible neighbourhood of that bus, ranks neighbours by annual cost
(cheapest first) and moves to one drawn from an exponential law over ranks.
The move is accepted even when it is worse; the best solution seen is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .costmodel import CapacitorCatalog, CostEvaluator, EconomicParams, check_placement
from .netmodel import Network
from .powerflow import FlowState, solve_flows, subtree_losses
from .resonance import DEFAULT_POLICY, ResonancePolicy, feasibility_table


@dataclass(frozen=True)
class EoConfig:
    tau: float = 2.0
    mu: float = 0.5
    fe_budget: int = 50_000
    seed: int = 0
    allow_root_placement: bool = False
    policy: ResonancePolicy = DEFAULT_POLICY
    # consecutive steps with an empty neighbourhood before giving up
    max_idle_steps: int = 1000

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.fe_budget < 1:
            raise ValueError("fe_budget must be at least 1")
        if self.max_idle_steps < 1:
            raise ValueError("max_idle_steps must be at least 1")


@dataclass
class RunResult:
    best_placement: np.ndarray
    best_cost: float
    best_savings: float
    fe_used: int
    cost_trace: list[tuple[int, float]] = field(default_factory=list)


def node_fitness(net: Network, flow: FlowState) -> np.ndarray:
    """Per-bus subtree loss in kW; a ranking signal, not a cost decomposition."""
    lam = subtree_losses(net, flow)
    lam[net.root] = flow.total_loss_kw
    return lam


@lru_cache(maxsize=256)
def _power_cdf(n: int, tau: float) -> np.ndarray:
    k = np.arange(1, n + 1, dtype=float)
    w = np.exp(-tau * np.log(k))
    return np.cumsum(w / w.sum())


@lru_cache(maxsize=256)
def _exp_cdf(n: int, mu: float) -> np.ndarray:
    # shifted by one rank so large mu cannot underflow the normaliser
    w = np.exp(-mu * np.arange(n, dtype=float))
    return np.cumsum(w / w.sum())


def power_pmf(n: int, tau: float) -> np.ndarray:
    return np.diff(_power_cdf(n, tau), prepend=0.0)


def exp_pmf(n: int, mu: float) -> np.ndarray:
    return np.diff(_exp_cdf(n, mu), prepend=0.0)


def _draw(cdf: np.ndarray, rng: np.random.Generator) -> int:
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, cdf.shape[0] - 1) + 1


def sample_rank_power(n: int, tau: float, rng: np.random.Generator) -> int:
    """Rank in 1..n with ``P(k) ∝ k^-tau``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return _draw(_power_cdf(n, float(tau)), rng)


def sample_rank_exp(n: int, mu: float, rng: np.random.Generator) -> int:
    """Rank in 1..n with ``P(k) ∝ exp(-mu k)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not mu > 0:
        raise ValueError("mu must be positive")
    return _draw(_exp_cdf(n, float(mu)), rng)


def candidate_moves(net: Network, s: np.ndarray, bus: int, n_types: int, rng, allow_root: bool = False):
    """Slot assignments proposed at ``bus``, in generation order.

    Each move is a tuple of ``(bus, new_value)`` pairs. No filtering is done
    here; the empty-slot install draws its type from ``rng`` exactly once.
    """
    cur = int(s[bus])
    if cur == 0:
        return [((bus, int(rng.integers(1, n_types + 1))),)]
    moves = [
        ((bus, 0),),
        ((bus, min(cur + 1, n_types)),),
        ((bus, max(cur - 1, 0)),),
    ]
    par = int(net.parent[bus])
    if par >= 0 and (par != net.root or allow_root):
        moves.append(((par, cur), (bus, 0)))
    for c in net.children[bus]:
        moves.append(((c, cur), (bus, 0)))
    return moves


def _apply_unique(s: np.ndarray, moves, feasible: np.ndarray | None) -> list[np.ndarray]:
    seen = {s.tobytes()}
    out = []
    for move in moves:
        if feasible is not None and not all(v == 0 or feasible[b, v] for b, v in move):
            continue
        nb = s.copy()
        for b, v in move:
            nb[b] = v
        key = nb.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(nb)
    return out


def generate_neighbors(
    net: Network,
    s,
    bus: int,
    catalog: CapacitorCatalog | None = None,
    policy: ResonancePolicy = DEFAULT_POLICY,
    rng: np.random.Generator | None = None,
    allow_root_placement: bool = False,
    feasible: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Resonance-feasible neighbours of ``s`` obtained by perturbing ``bus``.

    Moves: remove, size up, size down, install (empty slot only), shift to the
    parent, shift to each child. A shifted capacitor overwrites whatever sits
    at its destination. Candidates touching a bus where the new capacitor
    would resonate are discarded, as are no-ops and duplicates.
    """
    catalog = catalog or CapacitorCatalog()
    rng = rng if rng is not None else np.random.default_rng()
    s = check_placement(net, s, catalog.n_types)
    if feasible is None:
        feasible = feasibility_table(net, catalog.sizes_kvar, policy, allow_root_placement)
    moves = candidate_moves(net, s, bus, catalog.n_types, rng, allow_root_placement)
    return _apply_unique(s, moves, feasible)


def run_eo(
    net: Network,
    catalog: CapacitorCatalog | None = None,
    econ: EconomicParams | None = None,
    config: EoConfig | None = None,
) -> RunResult:
    catalog = catalog or CapacitorCatalog()
    econ = econ or EconomicParams()
    config = config or EoConfig()
    rng = np.random.default_rng(config.seed)
    ev = CostEvaluator(net, catalog, econ)
    feasible = feasibility_table(net, catalog.sizes_kvar, config.policy, config.allow_root_placement)
    m = catalog.n_types

    s = np.zeros(net.n_bus, dtype=np.int64)
    base_cost = ev.cost(s, check=False)
    ev.evaluations = 0  # the starting point is not charged to the budget
    best, best_cost = s.copy(), base_cost
    trace = [(0, base_cost)]

    if config.allow_root_placement:
        variables = np.arange(net.n_bus)
    else:
        variables = np.array([b for b in range(net.n_bus) if b != net.root], dtype=np.int64)
    n_var = variables.shape[0]

    idle = 0
    while ev.evaluations < config.fe_budget and n_var and idle < config.max_idle_steps:
        lam = node_fitness(net, solve_flows(net, s, catalog))[variables]
        ranked = variables[np.lexsort((variables, -lam))]

        neighbours: list[np.ndarray] = []
        for _ in range(n_var):
            bus = int(ranked[sample_rank_power(n_var, config.tau, rng) - 1])
            moves = candidate_moves(net, s, bus, m, rng, config.allow_root_placement)
            neighbours = _apply_unique(s, moves, feasible)
            if neighbours:
                break
        if not neighbours:
            idle += 1
            continue
        idle = 0

        neighbours = neighbours[: config.fe_budget - ev.evaluations]
        costs = np.array([ev.cost(nb, check=False) for nb in neighbours])
        order = np.argsort(costs, kind="stable")
        pick = int(order[sample_rank_exp(len(neighbours), config.mu, rng) - 1])
        s = neighbours[pick]
        if costs[pick] < best_cost:
            best, best_cost = s.copy(), float(costs[pick])
            trace.append((ev.evaluations, best_cost))

    return RunResult(best, best_cost, base_cost - best_cost, ev.evaluations, trace)
