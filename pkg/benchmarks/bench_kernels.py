"""Numba loop kernels against the numpy descendant-matrix fallback.

    python benchmarks/bench_kernels.py [--sizes 33 200 1000] [--eo-budget 5000]

Part one times one objective evaluation (the fused loss sweep) with both
implementations on the bundled 33-bus feeder and on random trees. Part two
runs a whole EO search in a subprocess per backend, selected through the
CAPRES_DISABLE_NUMBA flag exactly as a user would.
"""

import argparse
import json
import os
import subprocess
import sys
from timeit import repeat

import numpy as np

from capres import _kernels
from capres.costmodel import CostEvaluator
from capres.netmodel import Branch, Bus, Network, bundled_path, load_network

EO_SNIPPET = """
import json, time
from capres import _kernels, run_eo, EoConfig, load_network, bundled_path
net = load_network(bundled_path("bw33"))
run_eo(net, config=EoConfig(fe_budget=50, seed=0))  # compile / warm caches
t0 = time.perf_counter()
res = run_eo(net, config=EoConfig(fe_budget={budget}, seed=0))
print(json.dumps({{"backend": _kernels.BACKEND, "seconds": time.perf_counter() - t0, "cost": res.best_cost}}))
"""


def random_feeder(n, seed=0):
    rng = np.random.default_rng(seed)
    buses = (Bus(0),) + tuple(Bus(b, rng.uniform(0, 200), rng.uniform(0, 150)) for b in range(1, n))
    branches = tuple(Branch(int(rng.integers(max(0, b - 5), b)), b, rng.uniform(0.05, 1), rng.uniform(0.05, 1)) for b in range(1, n))
    return Network(buses, branches, 12.66)


def time_call(fn, number):
    return min(repeat(fn, number=number, repeat=5)) / number


def bench_kernels(net, label):
    ev = CostEvaluator(net)
    rng = np.random.default_rng(1)
    s = np.where(rng.random(net.n_bus) < 0.2, rng.integers(1, 7, net.n_bus), 0)
    q = ev._q_load_pu - ev._q_cap_pu[s]
    loop = lambda: _kernels.total_loss_loop(net.order, net.parent, ev._r_pu, ev._p_pu, q)
    matrix = lambda: _kernels.total_loss_matrix(net.descendants, ev._r_pu, ev._p_pu, q)
    assert np.isclose(loop(), matrix(), rtol=1e-12)
    number = max(10, 200_000 // net.n_bus)
    t_loop, t_mat = time_call(loop, number), time_call(matrix, number)
    print(f"{label:>14} {net.n_bus:>6} {t_loop * 1e6:>12.2f} {t_mat * 1e6:>12.2f} {t_mat / t_loop:>8.1f}x")


def bench_eo(budget):
    print(f"\nfull EO run on bw33, {budget} evaluations")
    for flag in ("0", "1"):
        env = {**os.environ, "CAPRES_DISABLE_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", EO_SNIPPET.format(budget=budget)], env=env, capture_output=True, text=True, check=True)
        rep = json.loads(out.stdout)
        print(f"  {rep['backend']:>6}: {rep['seconds']:.3f} s  best cost {rep['cost']:,.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="*", default=[200, 1000])
    ap.add_argument("--eo-budget", type=int, default=5000)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    print(f"{'network':>14} {'buses':>6} {'numba us':>12} {'numpy us':>12} {'ratio':>9}")
    bench_kernels(load_network(bundled_path("bw33")), "bw33")
    for n in args.sizes:
        bench_kernels(random_feeder(n), "random tree")
    bench_eo(args.eo_budget)


if __name__ == "__main__":
    main()
