"""Experiment protocol: seeded multi-run sweeps, census and Welch t-tests.

A sweep varies the energy price (capacitor prices at catalogue value) and the
capacitor price scale (energy price fixed at ``base_price``). Every grid point
is run ``runs`` times per algorithm with seed ``base_seed + run``. The memetic
run for a given cell and seed is shared by the three repair strategies.

Results go to ``sweep.csv`` (one row per run) and ``summary.csv`` (one row
per algorithm and grid point).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import special

from .costmodel import CapacitorCatalog, CostEvaluator, EconomicParams
from .eo import EoConfig, run_eo
from .memetic import MaConfig, repair, run_ma
from .netmodel import Network, load_network, resolve_network_path
from .resonance import ResonancePolicy, placement_feasible

log = logging.getLogger(__name__)

ALGORITHMS = ("eo", "ma+strtg1", "ma+strtg2", "ma+strtg3")
QUICK = {"fe_budget": 10_000, "runs": 10}
FULL = {"fe_budget": 50_000, "runs": 30}


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


@dataclass(frozen=True)
class ExperimentSpec:
    network: str = "bw33"
    algorithms: tuple[str, ...] = ALGORITHMS
    price_grid: tuple[float, ...] = _grid(50, 150, 10)
    price_scale_grid: tuple[float, ...] = _grid(0.8, 1.2, 0.1)
    base_price: float = 100.0
    runs: int = 30
    fe_budget: int = 50_000
    base_seed: int = 0
    resonance_mode: str = "round"
    fundamental_hz: float = 60.0
    band_hz: float = 10.0
    allow_root_placement: bool = False
    tau: float = 2.0
    mu: float = 0.5
    catalog: str | None = None
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.algorithms:
            raise ValueError("no algorithms selected")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if not self.price_grid and not self.price_scale_grid:
            raise ValueError("both grids are empty")

    @property
    def policy(self) -> ResonancePolicy:
        return ResonancePolicy(self.resonance_mode, self.fundamental_hz, self.band_hz)

    def with_profile(self, profile: str | None) -> "ExperimentSpec":
        if profile == "quick":
            return replace(self, **QUICK)
        if profile == "full":
            return replace(self, **FULL)
        return self


def parse_spec(text: str) -> ExperimentSpec:
    """Parse ``key = value`` lines (``#`` comments) into an :class:`ExperimentSpec`.

    Grids accept comma lists (``50, 75, 100``) or inclusive ranges
    (``50:150:10``).
    """
    types = {f.name: f.type for f in fields(ExperimentSpec)}
    kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip().replace("-", "_"), val.strip()
        if not sep or key not in types:
            raise ValueError(f"line {lineno}: unknown or malformed entry {raw.strip()!r}")
        try:
            kwargs[key] = _convert(key, val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {key}: {exc}") from None
    return ExperimentSpec(**kwargs)


def _convert(key: str, val: str):
    if key in ("price_grid", "price_scale_grid"):
        if not val:
            return ()
        if ":" in val:
            start, stop, step = (float(x) for x in val.split(":"))
            return _grid(start, stop, step)
        return tuple(float(x) for x in val.split(","))
    if key == "algorithms":
        return tuple(a.strip().lower() for a in val.split(",") if a.strip())
    if key in ("runs", "fe_budget", "base_seed", "workers"):
        return int(val)
    if key in ("base_price", "fundamental_hz", "band_hz", "tau", "mu"):
        return float(val)
    if key == "allow_root_placement":
        if val.lower() not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"expected a boolean, got {val!r}")
        return val.lower() in ("1", "true", "yes")
    if key in ("catalog", "output"):
        return val or None
    return val


def load_spec(path: str | Path) -> ExperimentSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


# -- statistics -----------------------------------------------------------


def welch_t_test(a, b) -> float:
    """Two-sided p-value of Welch's unequal-variance t-test.

    Two constant samples give p = 1 when their values agree and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    if va + vb == 0:
        return 1.0 if diff == 0 else 0.0
    t = diff / math.sqrt(va + vb)
    dof = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    # P(|T| > t) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)
    return float(special.betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


def census(placements, n_types: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sample standard deviation of installed count per type 1..n_types."""
    if len(placements) == 0:
        raise ValueError("census of an empty list")
    counts = np.array([np.bincount(np.asarray(p, dtype=np.int64), minlength=n_types + 1)[1 : n_types + 1] for p in placements], dtype=float)
    means = counts.mean(axis=0)
    stds = counts.std(axis=0, ddof=1) if len(counts) > 1 else np.zeros(n_types)
    return means, stds


# -- running ----------------------------------------------------------------


@dataclass
class RunRow:
    algorithm: str
    grid_param: str
    value: float
    run: int
    seed: int
    savings: float | None
    feasible: bool
    fe_used: int
    placement: np.ndarray

    def type_counts(self, n_types: int) -> np.ndarray:
        return np.bincount(self.placement, minlength=n_types + 1)[1 : n_types + 1]


@dataclass
class CellSummary:
    algorithm: str
    grid_param: str
    value: float
    runs: int
    feasible_runs: int
    mean_savings: float | None
    std_savings: float | None
    p_value_vs_eo: float | None
    type_mean: np.ndarray
    type_std: np.ndarray
    caps_mean: float | None
    caps_std: float | None


@dataclass
class SweepReport:
    spec: ExperimentSpec
    n_types: int
    rows: list[RunRow] = field(default_factory=list)
    cells: list[CellSummary] = field(default_factory=list)

    def cell(self, algorithm: str, grid_param: str, value: float) -> CellSummary:
        for c in self.cells:
            if c.algorithm == algorithm and c.grid_param == grid_param and math.isclose(c.value, value):
                return c
        raise KeyError((algorithm, grid_param, value))

    def savings(self, algorithm: str, grid_param: str, value: float) -> list[float]:
        return [
            r.savings
            for r in self.rows
            if r.algorithm == algorithm and r.grid_param == grid_param and math.isclose(r.value, value) and r.feasible
        ]


def _setup(spec: ExperimentSpec) -> tuple[Network, CapacitorCatalog]:
    from .costmodel import load_catalog

    net = load_network(resolve_network_path(spec.network))
    catalog = load_catalog(spec.catalog) if spec.catalog else CapacitorCatalog()
    return net, catalog


def _cell_inputs(spec: ExperimentSpec, catalog: CapacitorCatalog, grid_param: str, value: float):
    if grid_param == "energy_price":
        return catalog, EconomicParams(energy_price=value)
    return catalog.scaled(value), EconomicParams(energy_price=spec.base_price)


def run_cell(spec: ExperimentSpec, grid_param: str, value: float, run: int, net=None, catalog=None) -> list[RunRow]:
    """All selected algorithms for one grid point and one seed."""
    if net is None or catalog is None:
        net, catalog = _setup(spec)
    cat, econ = _cell_inputs(spec, catalog, grid_param, value)
    seed = spec.base_seed + run
    policy = spec.policy
    ev = CostEvaluator(net, cat, econ)
    base = ev.cost(np.zeros(net.n_bus, dtype=np.int64))
    rows = []

    if "eo" in spec.algorithms:
        cfg = EoConfig(spec.tau, spec.mu, spec.fe_budget, seed, spec.allow_root_placement, policy)
        res = run_eo(net, cat, econ, cfg)
        ok, _ = placement_feasible(net, res.best_placement, cat, policy, spec.allow_root_placement)
        rows.append(RunRow("eo", grid_param, value, run, seed, res.best_savings if ok else None, ok, res.fe_used, res.best_placement))

    repairs = [a for a in spec.algorithms if a.startswith("ma+")]
    if repairs:
        cfg = MaConfig(fe_budget=spec.fe_budget, seed=seed, allow_root_placement=spec.allow_root_placement)
        res = run_ma(net, cat, econ, cfg)
        for alg in repairs:
            out = repair(net, res.best_placement, alg.split("+", 1)[1], cat, policy, spec.allow_root_placement)
            savings = base - ev.cost(out.placement) if out.feasible else None
            rows.append(RunRow(alg, grid_param, value, run, seed, savings, out.feasible, res.fe_used, out.placement))
    return rows


def _cell_job(args):
    spec, grid_param, value, run = args
    return (grid_param, value, run), run_cell(spec, grid_param, value, run)


def _grid_points(spec: ExperimentSpec):
    pts = [("energy_price", v) for v in spec.price_grid]
    pts += [("price_scale", v) for v in spec.price_scale_grid]
    return pts


def run_sweep(spec: ExperimentSpec, out_dir: str | Path | None = None) -> SweepReport:
    net, catalog = _setup(spec)
    jobs = [(spec, gp, v, r) for gp, v in _grid_points(spec) for r in range(spec.runs)]
    log.info("sweep: %d cells x %d algorithms", len(jobs), len(spec.algorithms))
    results: dict[tuple, list[RunRow]] = {}
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            for key, rows in pool.map(_cell_job, jobs):
                results[key] = rows
    else:
        for _, gp, v, r in jobs:
            results[(gp, v, r)] = run_cell(spec, gp, v, r, net, catalog)

    report = SweepReport(spec, catalog.n_types)
    alg_rank = {a: i for i, a in enumerate(ALGORITHMS)}
    for gp, v in _grid_points(spec):
        cell_rows = [row for r in range(spec.runs) for row in results[(gp, v, r)]]
        cell_rows.sort(key=lambda row: (alg_rank[row.algorithm], row.run))
        report.rows.extend(cell_rows)
        for alg in spec.algorithms:
            report.cells.append(_summarise(report, [row for row in cell_rows if row.algorithm == alg], alg, gp, v))

    out_dir = out_dir or spec.output
    if out_dir:
        write_csvs(report, out_dir)
    return report


def _summarise(report: SweepReport, rows: list[RunRow], alg: str, gp: str, value: float) -> CellSummary:
    m = report.n_types
    ok = [r for r in rows if r.feasible]
    if ok:
        sv = np.array([r.savings for r in ok])
        mean = float(sv.mean())
        std = float(sv.std(ddof=1)) if len(sv) > 1 else 0.0
        tmean, tstd = census([r.placement for r in ok], m)
        caps = np.array([np.count_nonzero(r.placement) for r in ok], dtype=float)
        cmean = float(caps.mean())
        cstd = float(caps.std(ddof=1)) if len(caps) > 1 else 0.0
    else:
        mean = std = cmean = cstd = None
        tmean = tstd = np.full(m, np.nan)
    p = None
    if alg != "eo" and "eo" in report.spec.algorithms and len(ok) >= 2:
        eo_sv = report.savings("eo", gp, value)
        if len(eo_sv) >= 2:
            p = welch_t_test(eo_sv, [r.savings for r in ok])
    return CellSummary(alg, gp, value, len(rows), len(ok), mean, std, p, tmean, tstd, cmean, cstd)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def sweep_csv(report: SweepReport) -> str:
    m = report.n_types
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "grid_param", "value", "run", "seed", "savings", "feasible", "fe_used", "n_caps"] + [f"count_t{t}" for t in range(1, m + 1)] + ["placement"])
    for r in report.rows:
        placement = ";".join(f"{b}:{t}" for b, t in enumerate(r.placement) if t)
        w.writerow(
            [r.algorithm, r.grid_param, _fmt(float(r.value)), r.run, r.seed, _fmt(r.savings), _fmt(r.feasible), r.fe_used, int(np.count_nonzero(r.placement))]
            + [int(c) for c in r.type_counts(m)]
            + [placement]
        )
    return buf.getvalue()


def summary_csv(report: SweepReport) -> str:
    m = report.n_types
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["algorithm", "grid_param", "value", "runs", "feasible_runs", "mean_savings", "std_savings", "p_value_vs_eo", "mean_caps", "std_caps"]
    for t in range(1, m + 1):
        head += [f"mean_t{t}", f"std_t{t}"]
    w.writerow(head)
    for c in report.cells:
        row = [c.algorithm, c.grid_param, _fmt(float(c.value)), c.runs, c.feasible_runs, _fmt(c.mean_savings), _fmt(c.std_savings), _fmt(c.p_value_vs_eo), _fmt(c.caps_mean), _fmt(c.caps_std)]
        for t in range(m):
            row += [_fmt(c.type_mean[t]), _fmt(c.type_std[t])]
        w.writerow(row)
    return buf.getvalue()


def write_csvs(report: SweepReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep_path, summary_path = out / "sweep.csv", out / "summary.csv"
    sweep_path.write_text(sweep_csv(report), encoding="utf-8")
    summary_path.write_text(summary_csv(report), encoding="utf-8")
    return sweep_path, summary_path


def format_table(report: SweepReport, grid_param: str = "energy_price") -> str:
    """Mean (± std) savings per algorithm and grid value; cells with no feasible run print as ``--``."""
    algs = report.spec.algorithms
    values = report.spec.price_grid if grid_param == "energy_price" else report.spec.price_scale_grid
    lines = [f"{grid_param:>12} " + " ".join(f"{a:>24}" for a in algs)]
    for v in values:
        cells = []
        for a in algs:
            c = report.cell(a, grid_param, v)
            cells.append(f"{'--':>24}" if c.mean_savings is None else f"{c.mean_savings:>12,.2f} (± {c.std_savings:>8,.2f})")
        lines.append(f"{v:>12g} " + " ".join(cells))
    return "\n".join(lines)
