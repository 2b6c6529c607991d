"""Resonance-constrained capacitor placement on radial distribution feeders."""

from ._kernels import BACKEND
from .costmodel import (
    STANDARD_TYPES,
    CapacitorCatalog,
    CapacitorType,
    CostEvaluator,
    EconomicParams,
    amortization_factor,
    amortized_cost,
    annual_savings,
    load_catalog,
    total_annual_cost,
)
from .eo import EoConfig, RunResult, generate_neighbors, node_fitness, run_eo, sample_rank_exp, sample_rank_power
from .harness import ExperimentSpec, SweepReport, census, run_sweep, welch_t_test
from .memetic import MaConfig, RepairStrategy, repair, run_ma
from .netmodel import (
    Branch,
    Bus,
    Network,
    NetworkError,
    RootBusError,
    bundled_path,
    load_network,
    path_impedance,
    short_circuit_power,
    subtree,
)
from .powerflow import FlowState, loss_eq5, solve_flows, subtree_loss
from .resonance import (
    ResonancePolicy,
    check_feasible,
    harmonic_order,
    placement_feasible,
    resonance_frequency,
)

__version__ = "0.1.0"
