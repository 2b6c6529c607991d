"""Resonance-unaware memetic baseline and post-optimisation repairs.

The population is a ternary tree of 13 individuals (1 + 3 + 9), each parent
no worse than its children. A generation runs parent/child uniform
crossovers with per-gene mutation, restores the hierarchy, then spends a
small budget on first-improvement local search around the root individual.
Resonance is ignored during the search; :func:`repair` then tries to make the
final placement feasible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .costmodel import CapacitorCatalog, CostEvaluator, EconomicParams, check_placement
from .eo import RunResult, _apply_unique, candidate_moves
from .netmodel import Network
from .resonance import DEFAULT_POLICY, ResonancePolicy, placement_feasible

POP_SIZE = 13
BRANCHING = 3


def tree_children(i: int) -> list[int]:
    return [c for c in range(BRANCHING * i + 1, BRANCHING * i + BRANCHING + 1) if c < POP_SIZE]


PAIRS = [(p, c) for p in range(POP_SIZE) for c in tree_children(p)]


@dataclass(frozen=True)
class MaConfig:
    rate_cross: float = 1.5
    p_mut: float = 0.1
    fe_budget: int = 50_000
    seed: int = 0
    local_search_moves: int = 13
    # probability that a gene of a random initial individual holds a capacitor
    p_init: float = 0.1
    allow_root_placement: bool = False
    population_size: int = POP_SIZE

    def __post_init__(self):
        if self.population_size != POP_SIZE:
            raise ValueError(f"the structured population has exactly {POP_SIZE} individuals")
        if self.rate_cross < 0:
            raise ValueError("rate_cross must be non-negative")
        if not 0 <= self.p_mut <= 1:
            raise ValueError("p_mut must lie in [0, 1]")
        if not 0 <= self.p_init <= 1:
            raise ValueError("p_init must lie in [0, 1]")
        if self.fe_budget < 1:
            raise ValueError("fe_budget must be at least 1")
        if self.local_search_moves < 0:
            raise ValueError("local_search_moves must be non-negative")

    @property
    def crossovers_per_generation(self) -> int:
        return int(np.floor(self.rate_cross * POP_SIZE))


class _Budget(Exception):
    pass


class _Population:
    def __init__(self, ev: CostEvaluator, budget: int):
        self.ev = ev
        self.budget = budget
        self.members: list[np.ndarray] = []
        self.costs: list[float] = []
        self.best: np.ndarray | None = None
        self.best_cost = np.inf
        self.trace: list[tuple[int, float]] = []

    def evaluate(self, s: np.ndarray) -> float:
        if self.ev.evaluations >= self.budget:
            raise _Budget
        c = self.ev.cost(s, check=False)
        if c < self.best_cost:
            self.best, self.best_cost = s.copy(), c
            self.trace.append((self.ev.evaluations, c))
        return c

    def restore_hierarchy(self) -> None:
        changed = True
        while changed:
            changed = False
            for p in reversed(range(POP_SIZE)):
                kids = tree_children(p)
                if not kids:
                    continue
                c = min(kids, key=lambda k: (self.costs[k], k))
                if self.costs[c] < self.costs[p]:
                    self.members[p], self.members[c] = self.members[c], self.members[p]
                    self.costs[p], self.costs[c] = self.costs[c], self.costs[p]
                    changed = True


def _random_individual(n: int, m: int, p_init: float, movable: np.ndarray, rng) -> np.ndarray:
    s = np.zeros(n, dtype=np.int64)
    on = rng.random(n) < p_init
    types = rng.integers(1, m + 1, size=n)
    s[on & movable] = types[on & movable]
    return s


def run_ma(
    net: Network,
    catalog: CapacitorCatalog | None = None,
    econ: EconomicParams | None = None,
    config: MaConfig | None = None,
) -> RunResult:
    """Evolve the structured population without any resonance screening.

    ``fe_used`` counts every objective evaluation, initial population included.
    The returned placement may well resonate; see :func:`repair`.
    """
    catalog = catalog or CapacitorCatalog()
    econ = econ or EconomicParams()
    config = config or MaConfig()
    rng = np.random.default_rng(config.seed)
    n, m = net.n_bus, catalog.n_types
    movable = np.ones(n, dtype=bool)
    if not config.allow_root_placement:
        movable[net.root] = False
    variables = np.flatnonzero(movable)

    ev = CostEvaluator(net, catalog, econ)
    base_cost = ev.cost(np.zeros(n, dtype=np.int64), check=False)
    ev.evaluations = 0
    pop = _Population(ev, config.fe_budget)

    try:
        for _ in range(POP_SIZE):
            s = _random_individual(n, m, config.p_init, movable, rng)
            pop.members.append(s)
            pop.costs.append(pop.evaluate(s))
        pop.restore_hierarchy()

        while True:
            before = ev.evaluations
            for _ in range(config.crossovers_per_generation):
                p, c = PAIRS[int(rng.integers(len(PAIRS)))]
                mask = rng.random(n) < 0.5
                child = np.where(mask, pop.members[p], pop.members[c])
                mutate = (rng.random(n) < config.p_mut) & movable
                redraw = rng.integers(0, m + 1, size=n)
                child[mutate] = redraw[mutate]
                cost = pop.evaluate(child)
                if cost < pop.costs[c]:
                    pop.members[c], pop.costs[c] = child, cost
            pop.restore_hierarchy()
            _local_search(net, pop, m, variables, config.local_search_moves, config.allow_root_placement, rng)
            if ev.evaluations == before:
                break  # operators switched off: nothing can change any more
    except _Budget:
        pass

    if pop.best is None:
        raise ValueError("budget exhausted before any evaluation")
    return RunResult(pop.best, pop.best_cost, base_cost - pop.best_cost, ev.evaluations, pop.trace)


def _local_search(net, pop: _Population, m, variables, cap, allow_root, rng) -> None:
    """First-improvement descent on the root individual, at most ``cap`` evaluations."""
    spent = 0
    s, cost = pop.members[0], pop.costs[0]
    improved = True
    while improved and spent < cap:
        improved = False
        for bus in rng.permutation(variables):
            for nb in _apply_unique(s, candidate_moves(net, s, int(bus), m, rng, allow_root), None):
                if spent >= cap:
                    break
                spent += 1
                c = pop.evaluate(nb)
                if c < cost:
                    s, cost = nb, c
                    improved = True
                    break
            if improved or spent >= cap:
                break
    pop.members[0], pop.costs[0] = s, cost


class RepairStrategy(enum.Enum):
    STRTG1 = "strtg1"  # remove resonating capacitors
    STRTG2 = "strtg2"  # move them to the parent bus
    STRTG3 = "strtg3"  # move them to the first child (lowest bus id)


@dataclass
class Repaired:
    placement: np.ndarray
    feasible: bool
    violators: list[int]


def repair(
    net: Network,
    s,
    strategy: RepairStrategy | str,
    catalog: CapacitorCatalog | None = None,
    policy: ResonancePolicy = DEFAULT_POLICY,
    allow_root_placement: bool = False,
) -> Repaired:
    """One repair pass over the resonating capacitors, then a feasibility re-check.

    Violators are handled in increasing bus id. A capacitor that cannot be
    moved (root parent, leaf bus) stays where it is. A moved capacitor
    overwrites the destination slot. ``feasible=False`` marks a placement the
    analysis should drop.
    """
    catalog = catalog or CapacitorCatalog()
    strategy = RepairStrategy(strategy.lower()) if isinstance(strategy, str) else strategy
    out = check_placement(net, s, catalog.n_types).copy()
    _, violators = placement_feasible(net, out, catalog, policy, allow_root_placement)
    for v in violators:
        cap = int(out[v])
        if cap == 0:
            continue
        if strategy is RepairStrategy.STRTG1:
            out[v] = 0
            continue
        if strategy is RepairStrategy.STRTG2:
            dest = int(net.parent[v])
            if dest < 0 or (dest == net.root and not allow_root_placement):
                continue
        else:
            kids = net.children[v]
            if not kids:
                continue
            dest = kids[0]
        out[dest] = cap
        out[v] = 0
    ok, left = placement_feasible(net, out, catalog, policy, allow_root_placement)
    return Repaired(out, ok, left)
