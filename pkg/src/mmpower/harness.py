"""Experiment pipeline: strategy solves over power sweeps, CSVs, and the grid oracle.

Three allocation strategies share every channel realization:

* ``tp``    maximize the throughput (sum rate),
* ``gee``   maximize the global energy efficiency,
* ``htee``  minimize total transmit power subject to keeping at least a
            fraction omega of the just-computed maximum throughput.

Solver tolerances are configured in the bandwidth-free units the tolerances
are quoted in and converted here: the absolute rate tolerance scales with
the bandwidth, and the power-objective improvement step scales with the
total power budget of the instance.

`run_sweep` averages per-budget metrics in linear units over the successful
realizations and emits ``throughput.csv``, ``gee.csv``, ``power.csv`` (plus
``counts.csv`` with the per-point realization counts and an informational
``stats.csv``). The contract files are byte-reproducible for a fixed
(config, master_seed).
"""

from __future__ import annotations

import concurrent.futures
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bb_max import SolverConfig, Solution, Status, maximize
from .network import (
    InterferenceNetwork,
    PowerModel,
    ProblemKind,
    ProblemSpec,
    build_problem,
    gee,
    gee_box_bound,
    sum_rate,
    sum_rate_box_bound,
)
from .scenario import ScenarioParams, generate, rng_for
from .sit_min import SitConfig, minimize_sit

ALL_STRATEGIES = ("tp", "htee", "gee")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SweepConfig:
    """One experiment campaign over power budgets and channel realizations."""

    p_dbm_range: tuple = tuple(range(-20, 31, 2))
    omega: float = 0.95
    realizations: int = 100
    master_seed: int = 1
    strategies: tuple = ALL_STRATEGIES
    eta: float = 0.01
    eps: float = 1e-5
    r_min: float = 0.0  # per-user QoS floor, bit/s
    node_budget: int = 1_000_000
    workers: int = 1
    prel_per_instance: bool = False

    def __post_init__(self):
        if len(self.p_dbm_range) == 0:
            raise ValueError("p_dbm_range must be nonempty")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        unknown = set(self.strategies) - set(ALL_STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "p_dbm_range", tuple(float(v) for v in self.p_dbm_range))
        object.__setattr__(
            self, "strategies", tuple(s for s in ALL_STRATEGIES if s in self.strategies)
        )


@dataclass(frozen=True)
class InstanceMetrics:
    """Outcome of one strategy on one (network, budget) instance."""

    status: Status
    throughput: float  # bit/s at the returned point
    gee: float  # bit/J at the returned point
    total_power: float  # W
    nodes: int
    wall_time: float
    r_star: Optional[float] = None  # bit/s; set for htee

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def _metrics_from_point(
    net: InterferenceNetwork,
    power_model: PowerModel,
    point: Optional[np.ndarray],
    sol: Solution,
    r_star: Optional[float] = None,
) -> InstanceMetrics:
    if point is None:
        return InstanceMetrics(sol.status, math.nan, math.nan, math.nan, sol.nodes, sol.wall_time, r_star)
    return InstanceMetrics(
        status=sol.status,
        throughput=sum_rate(net, point),
        gee=gee(net, power_model, point),
        total_power=float(point.sum()),
        nodes=sol.nodes,
        wall_time=sol.wall_time,
        r_star=r_star,
    )


def solve_strategies(
    net: InterferenceNetwork,
    power_model: PowerModel,
    p_max,
    cfg: SweepConfig,
    strategies: Optional[Sequence[str]] = None,
) -> dict:
    """Solve the requested strategies on one network, reusing the TP stage.

    The throughput problem is always solved: htee needs its optimum, and the
    relative-power columns are normalized by the TP strategy. Tolerances are
    converted to instance units here (eta scales with the bandwidth for rate
    and efficiency objectives and with the total power budget for the power
    objective; eps scales with the bandwidth).
    """
    strategies = tuple(strategies if strategies is not None else cfg.strategies)
    p_max = np.asarray(p_max, dtype=float)
    n = net.n_users
    bandwidth = net.bandwidth
    r_min_vec = np.full(n, cfg.r_min)
    qos_vacuous = cfg.r_min == 0.0
    bb_cfg = SolverConfig(eta=cfg.eta * bandwidth, node_budget=cfg.node_budget)

    out: dict = {}
    rate_bound = sum_rate_box_bound(net)

    tp_built = build_problem(net, power_model, ProblemSpec(ProblemKind.TP_MAX, p_max, r_min_vec))
    tp_sol = maximize(
        tp_built.objective,
        None if qos_vacuous else tp_built.constraint,
        tp_built.box,
        bb_cfg,
        bound_fn=rate_bound,
    )
    out["tp"] = _metrics_from_point(net, power_model, tp_sol.point, tp_sol)

    if "gee" in strategies:
        gee_built = build_problem(
            net, power_model, ProblemSpec(ProblemKind.GEE_MAX, p_max, r_min_vec)
        )
        gee_sol = maximize(
            gee_built.objective,
            None if qos_vacuous else gee_built.constraint,
            gee_built.box,
            bb_cfg,
            bound_fn=gee_box_bound(net, power_model),
        )
        out["gee"] = _metrics_from_point(net, power_model, gee_sol.point, gee_sol)

    if "htee" in strategies:
        if tp_sol.point is None:
            out["htee"] = InstanceMetrics(
                tp_sol.status, math.nan, math.nan, math.nan, 0, 0.0, None
            )
        else:
            r_star = tp_sol.value
            built = build_problem(
                net,
                power_model,
                ProblemSpec(
                    ProblemKind.PMIN_HTEE, p_max, r_min_vec, omega=cfg.omega, r_star=r_star
                ),
            )
            sit_cfg = SitConfig(
                eps=cfg.eps * bandwidth,
                eta=cfg.eta * float(p_max.sum()),
                node_budget=cfg.node_budget,
            )
            threshold = cfg.omega * r_star

            def sum_rate_cut(los, his, _t=threshold):
                return _t - rate_bound(los, his)

            sit_sol = minimize_sit(
                built.objective.diagonal,
                built.constraint,
                built.box,
                sit_cfg,
                warm_start=tp_sol.point,
                f_batch=lambda pts: pts.sum(axis=1),
                constraint_bound=sum_rate_cut,
            )
            out["htee"] = _metrics_from_point(
                net, power_model, sit_sol.point, sit_sol, r_star=r_star
            )

    return {s: out[s] for s in set(strategies) | {"tp"} if s in out}


def solve_instance(
    strategy: str,
    net: InterferenceNetwork,
    power_model: PowerModel,
    p_max,
    cfg: SweepConfig,
) -> InstanceMetrics:
    """Solve a single strategy on one network at one power budget."""
    if strategy not in ALL_STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy!r}")
    return solve_strategies(net, power_model, p_max, cfg, strategies=(strategy,))[strategy]


@dataclass(frozen=True)
class StrategyAverages:
    throughput_mbit: float
    gee_mbit: float
    power_w: float
    prel_pct: float
    n_ok: int
    nodes_mean: float
    time_mean: float


@dataclass(frozen=True)
class SweepRecord:
    """Averaged metrics of one sweep point (one power budget)."""

    p_dbm: float
    strategies: dict  # name -> StrategyAverages


def run_sweep(
    cfg: SweepConfig,
    out_dir: Optional[str] = None,
    params: Optional[ScenarioParams] = None,
) -> list:
    """Run all strategies over the budget sweep and realization batch.

    Every strategy at a given (budget, realization) consumes the identical
    network; realizations are drawn once from (master_seed, index) streams
    and reused across budgets. Returns the per-budget records and, when
    ``out_dir`` is given, writes the CSV files there.
    """
    params = params or ScenarioParams()
    power_model = params.power_model()
    nets = [generate(rng_for(cfg.master_seed, i), params)[1] for i in range(cfg.realizations)]

    tasks = [
        (bi, ri, p_dbm)
        for bi, p_dbm in enumerate(cfg.p_dbm_range)
        for ri in range(cfg.realizations)
    ]

    def run_one(task):
        bi, ri, p_dbm = task
        p_max = np.full(params.n_cells, dbm_to_watt(p_dbm))
        return (bi, ri), solve_strategies(nets[ri], power_model, p_max, cfg)

    results: dict = {}
    if cfg.workers == 1:
        for task in tasks:
            key, value = run_one(task)
            results[key] = value
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            payload = [
                (cfg, nets[ri], power_model, params.n_cells, p_dbm, bi, ri)
                for (bi, ri, p_dbm) in tasks
            ]
            for key, value in pool.map(_pool_entry, payload, chunksize=4):
                results[key] = value

    records = []
    for bi, p_dbm in enumerate(cfg.p_dbm_range):
        per_strategy = {}
        instance_rows = [results[(bi, ri)] for ri in range(cfg.realizations)]
        power_means = {}
        ok_sets = {}
        for s in cfg.strategies:
            rows = [row[s] for row in instance_rows]
            ok = [m for m in rows if m.ok]
            ok_sets[s] = {i for i, row in enumerate(instance_rows) if row[s].ok}
            power_means[s] = float(np.mean([m.total_power for m in ok])) if ok else math.nan
        tp_rows = [row["tp"] for row in instance_rows]
        tp_power_mean = float(np.mean([m.total_power for m in tp_rows if m.ok])) if any(
            m.ok for m in tp_rows
        ) else math.nan

        for s in cfg.strategies:
            rows = [row[s] for row in instance_rows]
            ok = [m for m in rows if m.ok]
            if ok:
                thr = float(np.mean([m.throughput for m in ok])) / 1e6
                ge = float(np.mean([m.gee for m in ok])) / 1e6
                pw = power_means[s]
                if cfg.prel_per_instance:
                    both = [
                        i
                        for i in ok_sets[s]
                        if instance_rows[i]["tp"].ok
                    ]
                    prel = (
                        100.0
                        * float(
                            np.mean(
                                [
                                    instance_rows[i][s].total_power
                                    / instance_rows[i]["tp"].total_power
                                    for i in both
                                ]
                            )
                        )
                        if both
                        else math.nan
                    )
                else:
                    prel = 100.0 * pw / tp_power_mean if tp_power_mean else math.nan
                nodes_mean = float(np.mean([m.nodes for m in ok]))
                time_mean = float(np.mean([m.wall_time for m in ok]))
            else:
                thr = ge = pw = prel = nodes_mean = time_mean = math.nan
            per_strategy[s] = StrategyAverages(
                throughput_mbit=thr,
                gee_mbit=ge,
                power_w=pw,
                prel_pct=prel,
                n_ok=len(ok),
                nodes_mean=nodes_mean,
                time_mean=time_mean,
            )
        records.append(SweepRecord(p_dbm=p_dbm, strategies=per_strategy))

    if out_dir is not None:
        write_sweep_csvs(records, cfg.strategies, out_dir)
    return records


def _pool_entry(payload):
    cfg, net, power_model, n_cells, p_dbm, bi, ri = payload
    p_max = np.full(n_cells, dbm_to_watt(p_dbm))
    return (bi, ri), solve_strategies(net, power_model, p_max, cfg)


_NUM = "{:.9g}"


def _fmt(value: float) -> str:
    return _NUM.format(value)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_sweep_csvs(records: list, strategies: Sequence[str], out_dir: str) -> None:
    """Write throughput.csv, gee.csv, power.csv, counts.csv, stats.csv."""
    os.makedirs(out_dir, exist_ok=True)
    strategies = [s for s in ALL_STRATEGIES if s in strategies]

    def rows_for(getter):
        return [
            [_fmt(rec.p_dbm)] + [getter(rec.strategies[s]) for s in strategies]
            for rec in records
        ]

    _write_csv(
        os.path.join(out_dir, "throughput.csv"),
        ["p_dbm"] + [f"tp_{s}" for s in strategies],
        rows_for(lambda m: _fmt(m.throughput_mbit)),
    )
    _write_csv(
        os.path.join(out_dir, "gee.csv"),
        ["p_dbm"] + [f"gee_{s}" for s in strategies],
        rows_for(lambda m: _fmt(m.gee_mbit)),
    )
    _write_csv(
        os.path.join(out_dir, "power.csv"),
        ["p_dbm"]
        + [f"prel_{s}" for s in strategies]
        + [f"pabs_{s}" for s in strategies],
        [
            [_fmt(rec.p_dbm)]
            + [_fmt(rec.strategies[s].prel_pct) for s in strategies]
            + [_fmt(rec.strategies[s].power_w) for s in strategies]
            for rec in records
        ],
    )
    _write_csv(
        os.path.join(out_dir, "counts.csv"),
        ["p_dbm"] + [f"n_{s}" for s in strategies],
        [
            [_fmt(rec.p_dbm)] + [str(rec.strategies[s].n_ok) for s in strategies]
            for rec in records
        ],
    )
    _write_csv(
        os.path.join(out_dir, "stats.csv"),
        ["p_dbm"]
        + [f"nodes_{s}" for s in strategies]
        + [f"time_{s}" for s in strategies],
        [
            [_fmt(rec.p_dbm)]
            + [_fmt(rec.strategies[s].nodes_mean) for s in strategies]
            + [_fmt(rec.strategies[s].time_mean) for s in strategies]
            for rec in records
        ],
    )


def brute_force_grid(
    net: InterferenceNetwork,
    spec: ProblemSpec,
    grid_points_per_dim: int,
    power_model: Optional[PowerModel] = None,
) -> tuple:
    """Exhaustive uniform-grid oracle over [0, p_max]; for tests only.

    Returns (point, value): the best feasible grid point for the two
    maximization kinds, and the minimum-total-power feasible grid point for
    PMIN_HTEE. Requires n <= 3 and at least 100 points per dimension.
    """
    n = net.n_users
    if n > 3:
        raise ValueError("grid oracle supports at most 3 users")
    if grid_points_per_dim < 100:
        raise ValueError("use at least 100 grid points per dimension")
    if spec.kind is ProblemKind.GEE_MAX and power_model is None:
        raise ValueError("GEE oracle needs a power model")

    axes = [np.linspace(0.0, spec.p_max[i], grid_points_per_dim) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])

    best_point = None
    best_value = None
    chunk = 1 << 20
    for lo in range(0, points.shape[0], chunk):
        p = points[lo : lo + chunk]
        s = net.alpha * p / (p @ net.beta.T + net.sigma2)
        rates = net.bandwidth * np.log2(1.0 + s)
        feasible = (rates >= spec.r_min - 1e-12).all(axis=1)
        if spec.kind is ProblemKind.PMIN_HTEE:
            feasible &= rates.sum(axis=1) >= spec.omega * spec.r_star
            values = p.sum(axis=1)
            values = np.where(feasible, values, np.inf)
            idx = int(values.argmin())
            val = float(values[idx])
            if np.isfinite(val) and (best_value is None or val < best_value):
                best_value, best_point = val, p[idx].copy()
        else:
            if spec.kind is ProblemKind.TP_MAX:
                values = rates.sum(axis=1)
            else:
                values = rates.sum(axis=1) / (p @ power_model.mu + power_model.p_static)
            values = np.where(feasible, values, -np.inf)
            idx = int(values.argmax())
            val = float(values[idx])
            if np.isfinite(val) and (best_value is None or val > best_value):
                best_value, best_point = val, p[idx].copy()

    if best_point is None:
        raise ValueError("no feasible grid point")
    return best_point, best_value


# Flat key-value config files: one "key = value" per line, '#' comments.

_LIST_KEYS = {"p_dbm_range", "strategies"}
_SCALAR_KEYS = {
    "omega": float,
    "realizations": int,
    "master_seed": int,
    "eta": float,
    "eps": float,
    "r_min": float,
    "node_budget": int,
    "workers": int,
    "prel_per_instance": None,  # bool
}


def parse_sweep_config(text: str) -> SweepConfig:
    """Parse the flat key-value sweep configuration format."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _LIST_KEYS:
            items = [v for v in value.replace(",", " ").split() if v]
            if key == "p_dbm_range":
                values[key] = tuple(float(v) for v in items)
            else:
                values[key] = tuple(items)
        elif key in _SCALAR_KEYS:
            conv = _SCALAR_KEYS[key]
            if conv is None:
                lowered = value.lower()
                if lowered not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"line {lineno}: boolean expected for {key}")
                values[key] = lowered in ("true", "1", "yes")
            else:
                values[key] = conv(value)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return SweepConfig(**values)


def format_sweep_config(cfg: SweepConfig) -> str:
    lines = [
        "p_dbm_range = " + ", ".join(_fmt(v) for v in cfg.p_dbm_range),
        f"omega = {cfg.omega}",
        f"realizations = {cfg.realizations}",
        f"master_seed = {cfg.master_seed}",
        "strategies = " + ", ".join(cfg.strategies),
        f"eta = {cfg.eta}",
        f"eps = {cfg.eps}",
        f"r_min = {cfg.r_min}",
        f"node_budget = {cfg.node_budget}",
        f"workers = {cfg.workers}",
        f"prel_per_instance = {str(cfg.prel_per_instance).lower()}",
    ]
    return "\n".join(lines) + "\n"
