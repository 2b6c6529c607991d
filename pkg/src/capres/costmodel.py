"""Capacitor catalog, equipment amortisation and the annual cost objective."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .netmodel import Network

HOURS_PER_YEAR_OVER_1000 = 8.76


@dataclass(frozen=True)
class CapacitorType:
    type_id: int
    size_kvar: float
    cost_usd: float


STANDARD_TYPES = (
    CapacitorType(1, 150.0, 1498.0),
    CapacitorType(2, 300.0, 1604.0),
    CapacitorType(3, 450.0, 1620.0),
    CapacitorType(4, 600.0, 1823.0),
    CapacitorType(5, 900.0, 2550.0),
    CapacitorType(6, 1200.0, 2955.0),
)


@dataclass(frozen=True)
class CapacitorCatalog:
    """Ordered capacitor types; placement value ``t`` selects ``rows[t - 1]``.

    With the default rows placement values coincide with the catalog type ids
    1..6. A restricted catalog (say types 2 and 4 only) is addressed by
    positions 1..2, which keeps "next size up / down" moves well defined.
    """

    rows: tuple[CapacitorType, ...] = STANDARD_TYPES
    price_scale: float = 1.0

    def __post_init__(self):
        if not self.rows:
            raise ValueError("catalog is empty")
        sizes = [r.size_kvar for r in self.rows]
        if any(s <= 0 for s in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("capacitor sizes must be positive and strictly increasing")
        if any(r.cost_usd <= 0 for r in self.rows):
            raise ValueError("capacitor costs must be positive")
        if not self.price_scale > 0:
            raise ValueError("price_scale must be positive")

    @property
    def n_types(self) -> int:
        return len(self.rows)

    @property
    def sizes_kvar(self) -> tuple[float, ...]:
        return tuple(r.size_kvar for r in self.rows)

    @property
    def type_ids(self) -> tuple[int, ...]:
        return tuple(r.type_id for r in self.rows)

    def cost(self, t: int) -> float:
        return self.price_scale * self.rows[t - 1].cost_usd

    def scaled(self, price_scale: float) -> "CapacitorCatalog":
        return replace(self, price_scale=price_scale)

    def subset(self, type_ids) -> "CapacitorCatalog":
        keep = set(type_ids)
        return replace(self, rows=tuple(r for r in self.rows if r.type_id in keep))


def load_catalog(path: str | Path, price_scale: float = 1.0) -> CapacitorCatalog:
    """Read a ``type,size_kvar,cost_usd`` CSV."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for i, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                rows.append(CapacitorType(int(rec["type"]), float(rec["size_kvar"]), float(rec["cost_usd"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: row {i}: {exc}") from None
    return CapacitorCatalog(tuple(rows), price_scale)


@dataclass(frozen=True)
class EconomicParams:
    interest_rate: float = 0.12
    horizon_years: int = 5
    energy_price: float = 100.0  # U$/MWh

    def __post_init__(self):
        if not self.interest_rate > 0:
            raise ValueError("interest_rate must be positive")
        if self.horizon_years < 1:
            raise ValueError("horizon_years must be at least 1")
        if not self.energy_price > 0:
            raise ValueError("energy_price must be positive")


def amortization_factor(interest_rate: float, horizon_years: int) -> float:
    """Capital recovery factor ``i / (1 - (1 + i)^-k)``."""
    i = interest_rate
    return i / (1.0 - 1.0 / (1.0 + i) ** horizon_years)


def amortized_cost(catalog: CapacitorCatalog, econ: EconomicParams, type_id: int) -> float:
    """Yearly cost (U$) of owning one capacitor of placement value ``type_id``."""
    if not 0 <= type_id <= catalog.n_types:
        raise ValueError(f"type {type_id} outside 0..{catalog.n_types}")
    if type_id == 0:
        return 0.0
    return amortization_factor(econ.interest_rate, econ.horizon_years) * catalog.cost(type_id)


def check_placement(net: Network, placement, n_types: int) -> np.ndarray:
    slots = np.asarray(placement)
    if slots.ndim != 1 or slots.shape[0] != net.n_bus:
        raise ValueError(f"placement has length {slots.size}, network has {net.n_bus} buses")
    if slots.size and not np.issubdtype(slots.dtype, np.integer):
        as_int = slots.astype(np.int64)
        if not np.array_equal(as_int, slots):
            raise ValueError("placement values must be integers")
        slots = as_int
    if slots.size and (slots.min() < 0 or slots.max() > n_types):
        raise ValueError(f"placement values must lie in 0..{n_types}")
    return slots.astype(np.int64, copy=False)


@dataclass
class CostEvaluator:
    """Annual cost ``C(S)`` of placements on one network, with an evaluation counter.

    Every call to :meth:`cost` counts as one objective evaluation; this is the
    budget currency shared by the EO and memetic solvers.
    """

    net: Network
    catalog: CapacitorCatalog = field(default_factory=CapacitorCatalog)
    econ: EconomicParams = field(default_factory=EconomicParams)
    evaluations: int = 0

    def __post_init__(self):
        net = self.net
        # per-unit on S_base = 1 MVA, V_base = v_nom
        self._r_pu = net.r_in / (net.v_nom**2)
        self._p_pu = np.ascontiguousarray(_kernels.accumulate(net, net.p_load / 1000.0))
        self._q_load_pu = net.q_load / 1000.0
        self._q_cap_pu = np.concatenate([[0.0], np.asarray(self.catalog.sizes_kvar) / 1000.0])
        self._amort = np.array([amortized_cost(self.catalog, self.econ, t) for t in range(self.catalog.n_types + 1)])
        self._energy = HOURS_PER_YEAR_OVER_1000 * self.econ.energy_price

    @property
    def amortized(self) -> np.ndarray:
        return self._amort

    def loss_kw(self, slots: np.ndarray) -> float:
        q_net = self._q_load_pu - self._q_cap_pu[slots]
        return 1000.0 * _kernels.total_loss(self.net, self._r_pu, self._p_pu, q_net)

    def cost(self, slots, check: bool = True) -> float:
        if check:
            slots = check_placement(self.net, slots, self.catalog.n_types)
        self.evaluations += 1
        return self._energy * self.loss_kw(slots) + float(self._amort[slots].sum())

    def capacitor_cost(self, slots) -> float:
        return float(self._amort[np.asarray(slots)].sum())


def total_annual_cost(
    net: Network,
    placement,
    catalog: CapacitorCatalog | None = None,
    econ: EconomicParams | None = None,
) -> float:
    """Energy cost of losses plus amortised capacitor cost, U$ per year."""
    ev = CostEvaluator(net, catalog or CapacitorCatalog(), econ or EconomicParams())
    return ev.cost(placement)


def annual_savings(
    net: Network,
    placement,
    catalog: CapacitorCatalog | None = None,
    econ: EconomicParams | None = None,
) -> float:
    """Cost of the uncompensated network minus cost with ``placement`` (signed)."""
    ev = CostEvaluator(net, catalog or CapacitorCatalog(), econ or EconomicParams())
    empty = np.zeros(net.n_bus, dtype=np.int64)
    return ev.cost(empty) - ev.cost(placement)
