"""Parallel-resonance screening of shunt capacitor installations.

A capacitor of size ``Qc`` at a bus with short-circuit power ``Scc`` resonates
with the upstream network at harmonic order ``h = sqrt(Scc / Qc)``, i.e. at
``f_p = f1 * h``. Two feasibility rules are offered:

``round``
    round ``f_p / f1`` half away from zero and accept only even orders.
``band``
    reject ``f_p`` lying within ``band_hz`` of the 3rd, 5th or 7th harmonic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .netmodel import Network

SCREENED_HARMONICS = (3, 5, 7)


@dataclass(frozen=True)
class ResonancePolicy:
    mode: Literal["round", "band"] = "round"
    fundamental_hz: float = 60.0
    band_hz: float = 10.0

    def __post_init__(self):
        if self.mode not in ("round", "band"):
            raise ValueError(f"unknown resonance mode {self.mode!r}")
        if not self.fundamental_hz > 0:
            raise ValueError("fundamental_hz must be positive")
        if self.band_hz < 0:
            raise ValueError("band_hz must be non-negative")


DEFAULT_POLICY = ResonancePolicy()


class RootPlacementError(ValueError):
    """A capacitor was placed at the substation while that is disallowed."""


def _check_inputs(scc_va: float, qc_var: float) -> None:
    if not (scc_va > 0 and qc_var > 0):
        raise ValueError(f"short-circuit power and capacitor size must be positive (got {scc_va}, {qc_var})")


def harmonic_order(scc_va: float, qc_var: float) -> float:
    _check_inputs(scc_va, qc_var)
    return math.sqrt(scc_va / qc_var)


def resonance_frequency(scc_va: float, qc_var: float, policy: ResonancePolicy = DEFAULT_POLICY) -> float:
    return policy.fundamental_hz * harmonic_order(scc_va, qc_var)


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def check_feasible(scc_va: float, qc_var: float, policy: ResonancePolicy = DEFAULT_POLICY) -> bool:
    """True when a capacitor of ``qc_var`` at a point of ``scc_va`` does not resonate."""
    f1 = policy.fundamental_hz
    fp = resonance_frequency(scc_va, qc_var, policy)
    if policy.mode == "round":
        return round_half_away(fp / f1) % 2 == 0
    return not any(abs(fp - n * f1) <= policy.band_hz for n in SCREENED_HARMONICS)


def feasibility_table(
    net: Network,
    sizes_kvar,
    policy: ResonancePolicy = DEFAULT_POLICY,
    allow_root_placement: bool = False,
) -> np.ndarray:
    """Boolean matrix ``ok[bus, t]`` for placement value ``t`` (0 = no capacitor).

    Column 0 is always True. The root row is all True when root placement is
    allowed (the substation is treated as resonance-exempt) and False otherwise.
    """
    sizes = list(sizes_kvar)
    ok = np.ones((net.n_bus, len(sizes) + 1), dtype=bool)
    for bus in range(net.n_bus):
        if bus == net.root:
            ok[bus, 1:] = allow_root_placement
            continue
        scc = float(net.scc[bus])
        for t, size in enumerate(sizes, start=1):
            ok[bus, t] = check_feasible(scc, size * 1e3, policy)
    return ok


def placement_feasible(
    net: Network,
    placement,
    catalog,
    policy: ResonancePolicy = DEFAULT_POLICY,
    allow_root_placement: bool = False,
) -> tuple[bool, list[int]]:
    """Check every installed capacitor; returns ``(feasible, violating buses)``."""
    slots = np.asarray(placement)
    if slots.shape != (net.n_bus,):
        raise ValueError(f"placement has length {slots.size}, network has {net.n_bus} buses")
    if slots[net.root] != 0 and not allow_root_placement:
        raise RootPlacementError("capacitor placed at the substation bus")
    sizes = catalog.sizes_kvar
    violators = []
    for bus in np.flatnonzero(slots):
        t = int(slots[bus])
        if not 1 <= t <= len(sizes):
            raise ValueError(f"bus {bus}: placement value {t} outside 0..{len(sizes)}")
        if bus == net.root:
            continue
        if not check_feasible(float(net.scc[bus]), sizes[t - 1] * 1e3, policy):
            violators.append(int(bus))
    return not violators, violators
