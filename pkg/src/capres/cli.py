"""``capres`` command line: solve, check and sweep.

Exit codes: 0 success, 1 error, 2 when ``check`` finds resonating capacitors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels
from .costmodel import CapacitorCatalog, CostEvaluator, EconomicParams, load_catalog
from .eo import EoConfig, run_eo
from .harness import ALGORITHMS, format_table, load_spec, run_sweep
from .memetic import MaConfig, repair, run_ma
from .netmodel import load_network, resolve_network_path
from .powerflow import solve_flows
from .resonance import ResonancePolicy, RootPlacementError, placement_feasible

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", default="bw33", help="network CSV, or a bundled name (bw33, syn7)")
    p.add_argument("--catalog", help="capacitor catalog CSV (type,size_kvar,cost_usd)")
    p.add_argument("--price", type=float, default=100.0, help="energy price, U$/MWh")
    p.add_argument("--price-scale", type=float, default=1.0, help="multiplier on capacitor prices")
    p.add_argument("--resonance-mode", choices=("round", "band"), default="round")
    p.add_argument("--fundamental-hz", type=float, default=60.0)
    p.add_argument("--band-hz", type=float, default=10.0)
    p.add_argument("--allow-root", action="store_true", help="permit a capacitor at the substation bus")
    p.add_argument("--json", action="store_true", help="print a JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capres", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="optimise capacitor placement on one network")
    _add_common(solve)
    solve.add_argument("--algo", choices=("eo", "ma") + ALGORITHMS[1:], default="eo")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--fe-budget", type=int, default=50_000)
    solve.add_argument("--tau", type=float, default=2.0)
    solve.add_argument("--mu", type=float, default=0.5)

    check = sub.add_parser("check", help="feasibility and cost of a given placement")
    _add_common(check)
    check.add_argument("--placement", required=True, help="CSV with columns bus,type")

    sweep = sub.add_parser("sweep", help="run the multi-seed experiment protocol")
    sweep.add_argument("--spec", required=True, help="experiment spec file (key = value lines)")
    sweep.add_argument("--out", help="output directory for sweep.csv and summary.csv")
    prof = sweep.add_mutually_exclusive_group()
    prof.add_argument("--quick", action="store_const", const="quick", dest="profile", help="10,000 FEs, 10 runs")
    prof.add_argument("--full", action="store_const", const="full", dest="profile", help="50,000 FEs, 30 runs")
    sweep.add_argument("--workers", type=int, help="parallel worker processes")
    return parser


def _inputs(args):
    net = load_network(resolve_network_path(args.network))
    catalog = load_catalog(args.catalog) if args.catalog else CapacitorCatalog()
    catalog = catalog.scaled(args.price_scale)
    econ = EconomicParams(energy_price=args.price)
    policy = ResonancePolicy(args.resonance_mode, args.fundamental_hz, args.band_hz)
    return net, catalog, econ, policy


def _report(net, catalog, econ, policy, placement, allow_root) -> dict:
    ev = CostEvaluator(net, catalog, econ)
    empty = np.zeros(net.n_bus, dtype=np.int64)
    base = ev.cost(empty)
    cost = ev.cost(placement)
    flow = solve_flows(net, placement, catalog)
    ok, violators = placement_feasible(net, placement, catalog, policy, allow_root)
    return {
        "placement": {int(b): int(placement[b]) for b in np.flatnonzero(placement)},
        "feasible": ok,
        "violating_buses": violators,
        "loss_kw": flow.total_loss_kw,
        "capacitor_cost": ev.capacitor_cost(placement),
        "annual_cost": cost,
        "base_annual_cost": base,
        "annual_savings": base - cost,
    }


def _print_report(rep: dict, as_json: bool, extra: dict | None = None) -> None:
    rep = {**rep, **(extra or {})}
    if as_json:
        print(json.dumps(rep, indent=2, sort_keys=True))
        return
    caps = ", ".join(f"{b}:{t}" for b, t in rep["placement"].items()) or "(none)"
    print(f"placement (bus:type)  {caps}")
    print(f"feasible              {'yes' if rep['feasible'] else 'NO, violating buses ' + str(rep['violating_buses'])}")
    print(f"losses                {rep['loss_kw']:.4f} kW")
    print(f"capacitor cost        {rep['capacitor_cost']:,.2f} U$/yr")
    print(f"annual cost           {rep['annual_cost']:,.2f} U$/yr (uncompensated {rep['base_annual_cost']:,.2f})")
    print(f"annual savings        {rep['annual_savings']:,.2f} U$/yr")
    for k, v in (extra or {}).items():
        print(f"{k:<21} {v}")


def cmd_solve(args) -> int:
    net, catalog, econ, policy = _inputs(args)
    t0 = time.perf_counter()
    if args.algo == "eo":
        cfg = EoConfig(args.tau, args.mu, args.fe_budget, args.seed, args.allow_root, policy)
        res = run_eo(net, catalog, econ, cfg)
        placement = res.best_placement
    else:
        cfg = MaConfig(fe_budget=args.fe_budget, seed=args.seed, allow_root_placement=args.allow_root)
        res = run_ma(net, catalog, econ, cfg)
        placement = res.best_placement
        if args.algo != "ma":
            out = repair(net, placement, args.algo.split("+")[1], catalog, policy, args.allow_root)
            placement = out.placement
    extra = {"algorithm": args.algo, "fe_used": res.fe_used, "seconds": round(time.perf_counter() - t0, 3)}
    _print_report(_report(net, catalog, econ, policy, placement, args.allow_root), args.json, extra)
    return EXIT_OK


def read_placement(path: str | Path, n_bus: int) -> np.ndarray:
    s = np.zeros(n_bus, dtype=np.int64)
    with open(path, encoding="utf-8", newline="") as fh:
        for i, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                bus, t = int(rec["bus"]), int(rec["type"])
            except (KeyError, TypeError, ValueError):
                raise ValueError(f"{path}: row {i}: expected integer bus,type") from None
            if not 0 <= bus < n_bus:
                raise ValueError(f"{path}: row {i}: unknown bus {bus}")
            s[bus] = t
    return s


def cmd_check(args) -> int:
    net, catalog, econ, policy = _inputs(args)
    placement = read_placement(args.placement, net.n_bus)
    rep = _report(net, catalog, econ, policy, placement, args.allow_root)
    _print_report(rep, args.json)
    return EXIT_OK if rep["feasible"] else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec).with_profile(args.profile)
    if args.workers:
        from dataclasses import replace

        spec = replace(spec, workers=args.workers)
    out = args.out or spec.output
    if not out:
        raise ValueError("no output directory: pass --out or set 'output' in the spec file")
    report = run_sweep(spec, out)
    if spec.price_grid:
        print(format_table(report, "energy_price"))
    if spec.price_scale_grid:
        print(format_table(report, "price_scale"))
    print(f"wrote {Path(out) / 'sweep.csv'} and {Path(out) / 'summary.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("kernel backend: %s", _kernels.BACKEND)
    handler = {"solve": cmd_solve, "check": cmd_check, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError, KeyError, RootPlacementError) as exc:
        print(f"capres: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
