"""Command-line entry points: generate, solve, sweep, plot."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .harness import (
    SweepConfig,
    dbm_to_watt,
    parse_sweep_config,
    run_sweep,
    solve_instance,
)
from .network import PowerModel, load_network, save_network
from .scenario import ScenarioParams, generate, rng_for


def _cmd_generate(args) -> int:
    params = ScenarioParams()
    os.makedirs(args.out, exist_ok=True)
    for index in range(args.count):
        _, net = generate(rng_for(args.seed, index), params)
        path = os.path.join(args.out, f"net_{args.seed}_{index}.txt")
        save_network(net, path)
        print(path)
    return 0


def _cmd_solve(args) -> int:
    net = load_network(args.net)
    params = ScenarioParams()
    power_model = PowerModel(
        mu=np.full(net.n_users, 1.0 / params.pa_efficiency), p_static=params.p_static_w
    )
    cfg = SweepConfig(
        p_dbm_range=(args.pmax_dbm,),
        omega=args.omega,
        realizations=1,
        strategies=(args.strategy,),
        eta=args.eta,
        eps=args.eps,
        r_min=args.r_min,
        node_budget=args.node_budget,
    )
    p_max = np.full(net.n_users, dbm_to_watt(args.pmax_dbm))
    metrics = solve_instance(args.strategy, net, power_model, p_max, cfg)
    print(f"strategy = {args.strategy}")
    print(f"status = {metrics.status.value}")
    print(f"throughput_mbit_s = {metrics.throughput / 1e6:.9g}")
    print(f"gee_mbit_j = {metrics.gee / 1e6:.9g}")
    print(f"total_power_w = {metrics.total_power:.9g}")
    if metrics.r_star is not None:
        print(f"r_star_mbit_s = {metrics.r_star / 1e6:.9g}")
    print(f"nodes = {metrics.nodes}")
    print(f"wall_time_s = {metrics.wall_time:.3f}")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = parse_sweep_config(fh.read())
    records = run_sweep(cfg, out_dir=args.out)
    print(f"wrote {len(records)} sweep points to {args.out}")
    return 0


def _cmd_plot(args) -> int:
    import csv

    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    labels = {"tp": "TP", "htee": "HTEE", "gee": "GEE"}
    specs = [
        ("throughput.csv", "tp_", "Throughput [Mbit/s]", "throughput.svg"),
        ("gee.csv", "gee_", "GEE [Mbit/J]", "gee.svg"),
        ("power.csv", "prel_", "Relative Tx power [%]", "power.svg"),
    ]
    os.makedirs(args.out, exist_ok=True)
    for filename, prefix, ylabel, outname in specs:
        path = os.path.join(args.indir, filename)
        with open(path, "r", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            continue
        x = [float(r["p_dbm"]) for r in rows]
        fig, ax = plt.subplots(figsize=(6, 4))
        for key in rows[0]:
            if not key.startswith(prefix):
                continue
            name = key[len(prefix):]
            y = [float(r[key]) for r in rows]
            ax.plot(x, y, label=labels.get(name, name))
        ax.set_xlabel("Maximum Tx power [dBm]")
        ax.set_ylabel(ylabel)
        ax.grid(True)
        ax.legend()
        fig.tight_layout()
        out_path = os.path.join(args.out, outname)
        fig.savefig(out_path)
        plt.close(fig)
        print(out_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmpower",
        description="Globally optimal power allocation strategies for interference networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate random networks to text files")
    p_gen.add_argument("--seed", type=int, required=True, help="master seed")
    p_gen.add_argument("--count", type=int, required=True, help="number of realizations")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_generate)

    p_solve = sub.add_parser("solve", help="solve one strategy on a stored network")
    p_solve.add_argument("--net", required=True, help="network file")
    p_solve.add_argument("--strategy", choices=("tp", "gee", "htee"), required=True)
    p_solve.add_argument("--pmax-dbm", type=float, required=True, help="per-user budget")
    p_solve.add_argument("--omega", type=float, default=0.95, help="worsening factor")
    p_solve.add_argument("--eta", type=float, default=0.01)
    p_solve.add_argument("--eps", type=float, default=1e-5)
    p_solve.add_argument("--r-min", type=float, default=0.0, help="QoS floor, bit/s")
    p_solve.add_argument("--node-budget", type=int, default=1_000_000)
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a configured sweep and write CSVs")
    p_sweep.add_argument("--config", required=True, help="key = value config file")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="render SVG plots from sweep CSVs")
    p_plot.add_argument("--in", dest="indir", required=True, help="directory with CSVs")
    p_plot.add_argument("--out", required=True, help="output directory for SVGs")
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
