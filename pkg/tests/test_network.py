import math

import numpy as np
import pytest

from mmpower import (
    Box,
    InterferenceNetwork,
    PowerModel,
    ProblemKind,
    ProblemSpec,
    brute_force_grid,
    build_problem,
    dumps_network,
    gee,
    load_network,
    loads_network,
    merged_constraint_mm,
    mm_contract_violations,
    qos_constraint_mm,
    rate,
    rate_mm,
    save_network,
    sinr,
    sum_rate,
)
from mmpower.network import gee_box_bound, gee_mm, sum_rate_box_bound, sum_rate_mm

from conftest import random_network


@pytest.fixture
def two_user_net():
    # alpha=(1,1), beta12=beta21=0.5, sigma2=(1,1)
    return InterferenceNetwork(
        alpha=[1.0, 1.0], beta=[[0.0, 0.5], [0.5, 0.0]], sigma2=[1.0, 1.0], bandwidth=1.0
    )


class TestSinrRate:
    def test_zero_power(self, two_user_net):
        assert sinr(two_user_net, [0.0, 0.0], 0) == 0.0
        assert rate(two_user_net, [0.0, 0.0], 0) == 0.0

    def test_single_user_no_interference(self):
        net = InterferenceNetwork(alpha=[2.0], beta=[[0.0]], sigma2=[1.0], bandwidth=1.0)
        assert sinr(net, [3.0], 0) == pytest.approx(6.0)

    def test_two_user_direct_arithmetic(self, two_user_net):
        assert sinr(two_user_net, [1.0, 1.0], 0) == pytest.approx(1.0 / 1.5)
        assert rate(two_user_net, [1.0, 1.0], 0) == pytest.approx(0.7369655941662062)

    def test_bandwidth_scales_rate(self):
        net = InterferenceNetwork(alpha=[1.0], beta=[[0.0]], sigma2=[1.0], bandwidth=180_000.0)
        assert rate(net, [3.0], 0) == pytest.approx(360_000.0)

    def test_negative_power_rejected(self, two_user_net):
        with pytest.raises(ValueError):
            sinr(two_user_net, [-1.0, 0.0], 0)

    def test_bad_index_rejected(self, two_user_net):
        with pytest.raises(IndexError):
            sinr(two_user_net, [1.0, 1.0], 2)

    def test_sum_rate_matches_per_user(self, two_user_net, rng):
        for _ in range(20):
            p = rng.uniform(0, 5, 2)
            total = sum(rate(two_user_net, p, i) for i in range(2))
            assert sum_rate(two_user_net, p) == pytest.approx(total, rel=1e-12)


class TestGee:
    def test_zero_power(self, two_user_net, toy_power_model):
        assert gee(two_user_net, toy_power_model, [0.0, 0.0]) == 0.0

    def test_direct_evaluation(self):
        net = InterferenceNetwork(alpha=[1.0], beta=[[0.0]], sigma2=[1.0], bandwidth=1.0)
        pm = PowerModel(mu=[4.0], p_static=1.6)
        assert gee(net, pm, [3.0]) == pytest.approx(0.14705882352941177)

    def test_bandwidth_linearity(self, rng, toy_power_model):
        base = random_network(rng, 2, bandwidth=1.0)
        double = InterferenceNetwork(
            alpha=base.alpha, beta=base.beta, sigma2=base.sigma2, bandwidth=2.0
        )
        p = rng.uniform(0, 3, 2)
        assert gee(double, toy_power_model, p) == pytest.approx(
            2.0 * gee(base, toy_power_model, p), rel=1e-12
        )


class TestRateMM:
    def test_diagonal_identity(self, two_user_net, rng):
        pair = rate_mm(two_user_net, 0)
        for _ in range(50):
            p = rng.uniform(0, 8, 2)
            assert pair.diagonal(p) == pytest.approx(rate(two_user_net, p, 0), rel=1e-12)

    def test_corner_dominates_diagonal(self, two_user_net, rng):
        pair = rate_mm(two_user_net, 1)
        for _ in range(50):
            a, b = rng.uniform(0, 5, 2), rng.uniform(0, 5, 2)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            pts = rng.uniform(lo, hi, (32, 2))
            assert pair(hi, lo) >= pair.many(pts, pts).max() - 1e-12

    def test_known_value(self, two_user_net):
        pair = rate_mm(two_user_net, 0)
        assert pair(np.array([1.0, 1.0]), np.array([0.0, 0.0])) == pytest.approx(1.0)

    def test_monotonicity_sampled(self, rng):
        net = random_network(rng, 3)
        box = Box(np.zeros(3), np.full(3, 10.0))
        for i in range(3):
            assert mm_contract_violations(rate_mm(net, i), box, rng, n_pairs=1000) == 0

    def test_bad_index(self, two_user_net):
        with pytest.raises(IndexError):
            rate_mm(two_user_net, 5)


class TestGeeMM:
    def test_diagonal_matches_gee(self, rng, toy_power_model):
        net = random_network(rng, 2)
        pair = gee_mm(net, toy_power_model)
        for _ in range(100):
            p = rng.uniform(0, 10, 2)
            expected = gee(net, toy_power_model, p)
            assert pair.diagonal(p) == pytest.approx(expected, rel=1e-12)

    def test_mm_contract(self, rng, toy_power_model):
        net = random_network(rng, 2)
        pair = gee_mm(net, toy_power_model)
        box = Box(np.zeros(2), np.full(2, 10.0))
        assert mm_contract_violations(pair, box, rng, n_pairs=1000) == 0


class TestConstraints:
    def test_qos_equivalence(self, rng):
        net = random_network(rng, 3)
        r_min = rng.uniform(0.0, 1.0, 3)
        pair = qos_constraint_mm(net, r_min)
        for _ in range(200):
            p = rng.uniform(0, 10, 3)
            holds = all(rate(net, p, i) >= r_min[i] for i in range(3))
            assert (pair.diagonal(p) <= 0) == holds

    def test_merged_equivalence(self, rng):
        net = random_network(rng, 3)
        r_min = rng.uniform(0.0, 0.5, 3)
        r_star = 4.0
        omega = 0.9
        pair = merged_constraint_mm(net, omega, r_star, r_min)
        for _ in range(200):
            p = rng.uniform(0, 10, 3)
            holds = sum_rate(net, p) >= omega * r_star and all(
                rate(net, p, i) >= r_min[i] for i in range(3)
            )
            assert (pair.diagonal(p) <= 0) == holds

    def test_merged_mm_contract(self, rng):
        net = random_network(rng, 2)
        pair = merged_constraint_mm(net, 0.95, 3.0, np.zeros(2))
        box = Box(np.zeros(2), np.full(2, 10.0))
        assert mm_contract_violations(pair, box, rng, n_pairs=1000) == 0

    def test_feasible_point_satisfies_merged(self, symmetric_net):
        # at the throughput optimum both constraint families hold
        pair = merged_constraint_mm(symmetric_net, 0.95, math.log2(11.0), np.zeros(2))
        p = np.array([10.0, 0.0])
        assert pair.diagonal(p) <= 0.0

    def test_vacuous_constraints_everywhere_feasible(self, symmetric_net, rng):
        pair = merged_constraint_mm(symmetric_net, 0.0, math.log2(11.0), np.zeros(2))
        for _ in range(100):
            p = rng.uniform(0, 10, 2)
            assert pair.diagonal(p) <= 0.0


class TestBuildProblem:
    def test_tp_max(self, symmetric_net, toy_power_model):
        spec = ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
        built = build_problem(symmetric_net, toy_power_model, spec)
        assert built.sense == "max"
        assert built.box == Box([0.0, 0.0], [10.0, 10.0])
        p = np.array([2.0, 3.0])
        assert built.objective.diagonal(p) == pytest.approx(sum_rate(symmetric_net, p))

    def test_gee_max(self, symmetric_net, toy_power_model, rng):
        spec = ProblemSpec(ProblemKind.GEE_MAX, [10.0, 10.0])
        built = build_problem(symmetric_net, toy_power_model, spec)
        p = rng.uniform(0, 10, 2)
        assert built.objective.diagonal(p) == pytest.approx(
            gee(symmetric_net, toy_power_model, p), rel=1e-12
        )

    def test_pmin_htee(self, symmetric_net, toy_power_model):
        spec = ProblemSpec(
            ProblemKind.PMIN_HTEE, [10.0, 10.0], omega=0.95, r_star=math.log2(11.0)
        )
        built = build_problem(symmetric_net, toy_power_model, spec)
        assert built.sense == "min"
        assert built.objective.diagonal([3.0, 4.0]) == pytest.approx(7.0)

    def test_spec_requires_r_star_only_for_pmin(self):
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.PMIN_HTEE, [10.0, 10.0], omega=0.95)
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0], r_star=1.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.TP_MAX, [0.0, 1.0])
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.TP_MAX, [1.0, 1.0], omega=1.5)
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.TP_MAX, [1.0, 1.0], r_min=[-1.0, 0.0])

    def test_dimension_mismatch(self, symmetric_net, toy_power_model):
        with pytest.raises(ValueError):
            build_problem(
                symmetric_net, toy_power_model, ProblemSpec(ProblemKind.TP_MAX, [1.0, 1.0, 1.0])
            )

    def test_symmetric_optimum_matches_grid(self, symmetric_net):
        spec = ProblemSpec(ProblemKind.TP_MAX, [10.0, 10.0])
        point, value = brute_force_grid(symmetric_net, spec, 500)
        assert value == pytest.approx(3.4594316186372973, abs=1e-12)
        assert sorted(point) == pytest.approx([0.0, 10.0])


class TestNetworkValidation:
    def test_invariants(self):
        with pytest.raises(ValueError):
            InterferenceNetwork(alpha=[0.0], beta=[[0.0]], sigma2=[1.0], bandwidth=1.0)
        with pytest.raises(ValueError):
            InterferenceNetwork(alpha=[1.0], beta=[[0.5]], sigma2=[1.0], bandwidth=1.0)
        with pytest.raises(ValueError):
            InterferenceNetwork(
                alpha=[1.0, 1.0], beta=[[0.0, -0.1], [0.0, 0.0]], sigma2=[1.0, 1.0], bandwidth=1.0
            )
        with pytest.raises(ValueError):
            InterferenceNetwork(alpha=[1.0], beta=[[0.0]], sigma2=[0.0], bandwidth=1.0)
        with pytest.raises(ValueError):
            InterferenceNetwork(alpha=[1.0], beta=[[0.0]], sigma2=[1.0], bandwidth=0.0)
        with pytest.raises(ValueError):
            InterferenceNetwork(alpha=[1.0, 1.0], beta=[[0.0]], sigma2=[1.0], bandwidth=1.0)


class TestSerialization:
    def test_round_trip_exact(self, rng, tmp_path):
        for k in range(50):
            n = int(rng.integers(1, 5))
            net = random_network(rng, n, bandwidth=float(10.0 ** rng.uniform(0, 6)))
            again = loads_network(dumps_network(net))
            assert again == net
        path = tmp_path / "net.txt"
        save_network(net, path)
        assert load_network(path) == net

    def test_format_shape(self, two_user_net):
        lines = dumps_network(two_user_net).splitlines()
        assert len(lines) == 5  # header, alpha, sigma2, two beta rows
        n, bandwidth = lines[0].split()
        assert int(n) == 2
        assert float(bandwidth) == 1.0
        # scientific notation with 17 significant digits
        assert "e" in lines[1].split()[0]

    def test_malformed_input(self):
        with pytest.raises(ValueError):
            loads_network("")
        with pytest.raises(ValueError):
            loads_network("2 1.0\n1.0 1.0\n")


class TestBoxBounds:
    def test_sum_rate_bound_validity(self, rng):
        for trial in range(100):
            n = int(rng.integers(2, 5))
            net = random_network(rng, n)
            bound = sum_rate_box_bound(net)
            corner = sum_rate_mm(net)
            a, b = rng.uniform(0, 10, n), rng.uniform(0, 10, n)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            pts = rng.uniform(lo, hi, (128, n))
            cap = float(bound(lo[None], hi[None])[0])
            assert pts.shape == (128, n)
            assert corner.many(pts, pts).max() <= cap + 1e-9
            assert cap <= corner(hi, lo) + 1e-9

    def test_gee_bound_validity(self, rng):
        for trial in range(100):
            n = int(rng.integers(2, 5))
            net = random_network(rng, n)
            pm = PowerModel(mu=np.full(n, 4.0), p_static=0.4)
            bound = gee_box_bound(net, pm)
            pair = gee_mm(net, pm)
            a, b = rng.uniform(0, 10, n), rng.uniform(0, 10, n)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            pts = rng.uniform(lo, hi, (128, n))
            cap = float(bound(lo[None], hi[None])[0])
            assert pair.many(pts, pts).max() <= cap + 1e-9
            assert cap <= pair(hi, lo) + 1e-9
