import io
import math

import numpy as np
import pytest

from mmpower import (
    Box,
    MMPair,
    NumericalDomainError,
    ProblemKind,
    ProblemSpec,
    SolverConfig,
    Status,
    brute_force_grid,
    build_problem,
    maximize,
)
from mmpower.network import PowerModel, gee_box_bound, sum_rate_box_bound

from conftest import random_network


def test_single_user_monotone_objective():
    f = MMPair(lambda x, y: np.log2(1.0 + x[..., 0]), 1, vectorized=True)
    sol = maximize(f, None, Box([0.0], [3.0]), SolverConfig(eta=0.01))
    assert sol.status is Status.OPTIMAL
    assert sol.value == pytest.approx(2.0, abs=1e-12)
    assert sol.point == pytest.approx([3.0])


def test_symmetric_two_user_matches_grid(symmetric_net, toy_power_model):
    built = build_problem(
        symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
    )
    sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01))
    assert sol.status is Status.OPTIMAL
    assert sol.value == pytest.approx(math.log2(11.0), abs=0.011)
    assert sol.value <= math.log2(11.0) + 1e-12  # incumbents never overshoot
    # optimum is single-user transmission at full power
    assert min(sol.point) < 0.2 and max(sol.point) > 9.5


def test_infeasible_qos(symmetric_net, toy_power_model):
    spec = ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0], r_min=[1e6, 1e6])
    built = build_problem(symmetric_net, toy_power_model, spec)
    sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01))
    assert sol.status is Status.INFEASIBLE
    assert sol.point is None and sol.value is None


def test_gee_matches_grid(rng, toy_power_model):
    for seed in range(5):
        net = random_network(np.random.default_rng(seed), 2)
        built = build_problem(net, toy_power_model, ProblemSpec(ProblemKind.GEE_MAX, [10.0, 10.0]))
        sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01))
        point, value = brute_force_grid(
            net, ProblemSpec(ProblemKind.GEE_MAX, [10.0, 10.0]), 500, power_model=toy_power_model
        )
        assert sol.status is Status.OPTIMAL
        assert abs(sol.value - value) <= 0.01 + 5e-3


def test_budget_exhaustion_keeps_incumbent(symmetric_net, toy_power_model):
    built = build_problem(
        symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
    )
    sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=1e-9, node_budget=3))
    assert sol.status is Status.BUDGET_EXHAUSTED
    assert sol.point is not None
    assert sol.nodes <= 3 + 32  # at most one extra wave


def test_time_budget_zero(symmetric_net, toy_power_model):
    built = build_problem(
        symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
    )
    sol = maximize(
        built.objective, built.constraint, built.box, SolverConfig(eta=1e-9, time_budget=0.0)
    )
    assert sol.status is Status.BUDGET_EXHAUSTED


def test_determinism(rng, toy_power_model):
    net = random_network(rng, 3)
    built = build_problem(net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [5.0, 5.0, 5.0]))
    runs = []
    for _ in range(2):
        buf = io.StringIO()
        sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01), trace=buf)
        runs.append((sol.value, sol.nodes, tuple(sol.point), buf.getvalue()))
    assert runs[0] == runs[1]


def test_oldest_first_agrees_with_best_first(symmetric_net, toy_power_model):
    built = build_problem(
        symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
    )
    best = maximize(built.objective, None, built.box, SolverConfig(eta=0.01))
    oldest = maximize(
        built.objective, None, built.box, SolverConfig(eta=0.01, selection="oldest_first")
    )
    assert oldest.status is Status.OPTIMAL
    assert abs(best.value - oldest.value) <= 0.01


def test_monotone_progress_trace(symmetric_net, toy_power_model):
    built = build_problem(
        symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
    )
    buf = io.StringIO()
    maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01), trace=buf)
    bounds, incumbents = [], []
    for line in buf.getvalue().splitlines():
        fields = dict(kv.split("=") for kv in line.split())
        bounds.append(float(fields["bound"]))
        incumbents.append(float(fields["incumbent"]))
    assert len(bounds) > 1
    assert all(b <= a + 1e-9 for a, b in zip(bounds, bounds[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(incumbents, incumbents[1:]))


def test_soundness_on_random_instances(toy_power_model):
    for seed in range(10):
        net = random_network(np.random.default_rng(100 + seed), 2)
        spec = ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
        built = build_problem(net, toy_power_model, spec)
        sol = maximize(built.objective, built.constraint, built.box, SolverConfig(eta=0.01))
        point, value = brute_force_grid(net, spec, 500)
        _, refined = brute_force_grid(net, spec, 1000)
        slack = 2.0 * abs(refined - value) + 1e-4 * abs(refined)
        assert sol.status is Status.OPTIMAL
        assert sol.value >= max(value, refined) - 0.01 - 1e-9  # eta-optimal
        assert sol.value <= max(value, refined) + slack  # never above the true max


def test_bound_fn_preserves_answer(toy_power_model):
    net = random_network(np.random.default_rng(7), 3)
    spec = ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0, 10.0])
    built = build_problem(net, toy_power_model, spec)
    plain = maximize(built.objective, None, built.box, SolverConfig(eta=0.01))
    tight = maximize(
        built.objective, None, built.box, SolverConfig(eta=0.01), bound_fn=sum_rate_box_bound(net)
    )
    assert abs(plain.value - tight.value) <= 0.01 + 1e-9
    assert tight.nodes <= plain.nodes


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(eta=0.0)
    with pytest.raises(ValueError):
        SolverConfig(eta=0.01, eps_feas=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(eta=0.01, node_budget=0)
    with pytest.raises(ValueError):
        SolverConfig(eta=0.01, selection="depth_first")


def test_non_finite_objective_raises():
    bad = MMPair(lambda x, y: np.full(x.shape[0], np.nan) if x.ndim > 1 else np.nan, 1, vectorized=True)
    with pytest.raises(NumericalDomainError):
        maximize(bad, None, Box([0.0], [1.0]), SolverConfig(eta=0.01))


def test_degenerate_box_returns_corner_value():
    f = MMPair(lambda x, y: float(np.asarray(x)[..., 0]), 1)
    sol = maximize(f, None, Box([2.0], [2.0]), SolverConfig(eta=0.01))
    assert sol.status is Status.OPTIMAL
    assert sol.value == pytest.approx(2.0)
    assert sol.nodes == 1
