"""Branch-and-bound maximizer for MM objectives under an MM inequality constraint.

Solves max f(p) s.t. g(p) <= 0 over a power box to global eta-optimality,
where f and g are given through MM representations F and G. Each box [r, s]
is bounded above by F(s, r); it can be discarded once that bound cannot beat
the incumbent by more than eta, or when even the most favorable constraint
value G(r, s) over the box is positive. Incumbents come from exact diagonal
evaluations at box corners, so the returned value never overshoots the true
maximum.

Boxes are popped and evaluated in fixed-size waves so the per-node work is a
handful of batched array operations; selection discipline, pruning, and the
final answer are unaffected (pruning tests run per child against the current
incumbent, and the incumbent only ever grows).
"""

from __future__ import annotations

import enum
import heapq
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from .boxes import Box, MMPair, NumericalDomainError

_WAVE_SIZE = 32


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets for a single global solve.

    eta: absolute optimality tolerance in the objective's own units.
    eps_feas: constraint slack accepted when turning a corner into an incumbent.
    node_budget: maximum number of boxes processed before giving up.
    selection: "best_first" (largest bound) or "oldest_first" (FIFO).
    time_budget: optional wall-clock limit in seconds; leaving it None keeps
        runs deterministic.
    """

    eta: float
    eps_feas: float = 1e-9
    node_budget: int = 1_000_000
    selection: str = "best_first"
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.eps_feas < 0:
            raise ValueError("eps_feas must be nonnegative")
        if self.node_budget <= 0:
            raise ValueError("node_budget must be positive")
        if self.selection not in ("best_first", "oldest_first"):
            raise ValueError(f"unknown selection rule: {self.selection!r}")


@dataclass(frozen=True)
class Solution:
    """Outcome of a global solve.

    On OPTIMAL the point is feasible (within eps_feas for maximization,
    exactly for the SIT minimizer) and the value is the objective diagonal
    there. BUDGET_EXHAUSTED carries the best incumbent found, possibly none.
    """

    point: Optional[np.ndarray]
    value: Optional[float]
    status: Status
    nodes: int
    wall_time: float


def _check_finite(values, what: str):
    if not np.isfinite(values).all():
        raise NumericalDomainError(f"{what} evaluated to a non-finite value")
    return values


def maximize(
    objective: MMPair,
    constraint: Optional[MMPair],
    box: Box,
    cfg: SolverConfig,
    trace: Optional[TextIO] = None,
    bound_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> Solution:
    """Globally maximize the diagonal of ``objective`` over ``box``.

    ``constraint`` (may be None) is feasible where its diagonal is <= 0.
    Candidate incumbents are the diagonal values at box corners; every corner
    ever created is evaluated exactly once. ``bound_fn``, when given, maps
    stacked box corners (m, n) x (m, n) to (m,) values that upper-bound the
    objective diagonal over each box; the solver uses the elementwise minimum
    of it and the MM corner bound. Terminates when no remaining box can
    exceed the incumbent by more than cfg.eta.
    """
    start = time.perf_counter()
    lo0 = np.array(box.lower, dtype=float)
    hi0 = np.array(box.upper, dtype=float)
    n = lo0.size

    incumbent_point: Optional[np.ndarray] = None
    incumbent_value = -np.inf

    # Root: bound, corner candidates, and the two prune tests.
    corners = np.vstack((lo0, hi0))
    root_obj = _check_finite(objective.many(corners, corners), "objective")
    root_feas_ok = True
    if constraint is not None:
        root_diag = _check_finite(constraint.many(corners, corners), "constraint")
        root_feas_ok = float(constraint(lo0, hi0)) <= 0.0
        for idx in range(2):
            if root_diag[idx] <= cfg.eps_feas and root_obj[idx] > incumbent_value:
                incumbent_value = float(root_obj[idx])
                incumbent_point = corners[idx].copy()
    else:
        best = int(np.argmax(root_obj))
        incumbent_value = float(root_obj[best])
        incumbent_point = corners[best].copy()

    root_bound = float(objective(hi0, lo0))
    if bound_fn is not None:
        root_bound = min(root_bound, float(bound_fn(lo0[None, :], hi0[None, :])[0]))
    if not np.isfinite(root_bound):
        raise NumericalDomainError("objective bound evaluated to a non-finite value")

    nodes = 1
    best_first = cfg.selection == "best_first"
    heap: list = []  # (-bound, counter, lower, upper)
    fifo: deque = deque()  # (bound, lower, upper)
    counter = 0

    if root_feas_ok and root_bound > incumbent_value + cfg.eta and box.max_width > 0.0:
        if best_first:
            heapq.heappush(heap, (-root_bound, counter, lo0, hi0))
            counter += 1
        else:
            fifo.append((root_bound, lo0, hi0))

    status = Status.OPTIMAL
    while heap or fifo:
        if nodes >= cfg.node_budget:
            status = Status.BUDGET_EXHAUSTED
            break
        if cfg.time_budget is not None and time.perf_counter() - start > cfg.time_budget:
            status = Status.BUDGET_EXHAUSTED
            break

        # Collect a wave of boxes that still pass the pruning tests.
        wave: list = []
        limit = min(_WAVE_SIZE, cfg.node_budget - nodes)
        threshold = incumbent_value + cfg.eta
        if best_first:
            while heap and len(wave) < limit:
                neg_bound, _, lo, hi = heapq.heappop(heap)
                if -neg_bound <= threshold:
                    heap.clear()  # max-heap: nothing left can improve
                    break
                wave.append((lo, hi))
        else:
            while fifo and len(wave) < limit:
                bound, lo, hi = fifo.popleft()
                if bound <= threshold:
                    continue
                wave.append((lo, hi))
        if not wave:
            continue
        k = len(wave)
        nodes += k

        # Bisect every box at the midpoint of its longest edge (lowest index
        # wins ties); children share the split facet.
        child_lo = np.empty((2 * k, n))
        child_hi = np.empty((2 * k, n))
        fresh = np.empty((2 * k, n))  # the one new corner each child exposes
        for i, (lo, hi) in enumerate(wave):
            widths = hi - lo
            j = int(np.argmax(widths))
            v = 0.5 * (lo[j] + hi[j])
            hi_left = hi.copy()
            hi_left[j] = v
            lo_right = lo.copy()
            lo_right[j] = v
            child_lo[2 * i] = lo
            child_hi[2 * i] = hi_left
            child_lo[2 * i + 1] = lo_right
            child_hi[2 * i + 1] = hi
            fresh[2 * i] = hi_left
            fresh[2 * i + 1] = lo_right

        # One batched objective call covers the children's upper bounds
        # F(s, r) and the diagonals at the fresh corners (each child's other
        # corner was already evaluated when its parent was created).
        xs = np.vstack((child_hi, fresh))
        ys = np.vstack((child_lo, fresh))
        obj_vals = _check_finite(objective.many(xs, ys), "objective")
        child_bounds = obj_vals[: 2 * k]
        fresh_diag = obj_vals[2 * k :]

        if bound_fn is not None:
            child_bounds = np.minimum(child_bounds, bound_fn(child_lo, child_hi))

        feas_bounds = None
        fresh_feas = None
        if constraint is not None:
            cxs = np.vstack((child_lo, fresh))
            cys = np.vstack((child_hi, fresh))
            con_vals = _check_finite(constraint.many(cxs, cys), "constraint")
            feas_bounds = con_vals[: 2 * k]
            fresh_feas = con_vals[2 * k :]

        # Incumbent updates before pruning, so the wave's children are
        # screened against the tightest threshold available.
        for i in range(2 * k):
            if fresh_feas is not None and fresh_feas[i] > cfg.eps_feas:
                continue
            if fresh_diag[i] > incumbent_value:
                incumbent_value = float(fresh_diag[i])
                incumbent_point = fresh[i].copy()

        threshold = incumbent_value + cfg.eta
        for i in range(2 * k):
            if feas_bounds is not None and feas_bounds[i] > 0.0:
                continue
            bound = float(child_bounds[i])
            if bound <= threshold:
                continue
            if best_first:
                heapq.heappush(heap, (-bound, counter, child_lo[i], child_hi[i]))
                counter += 1
            else:
                fifo.append((bound, child_lo[i], child_hi[i]))

        if trace is not None:
            if best_first:
                active_bound = -heap[0][0] if heap else -np.inf
                active = len(heap)
            else:
                active_bound = max((b for b, _, _ in fifo), default=-np.inf)
                active = len(fifo)
            trace.write(
                f"k={nodes} active={active} bound={active_bound:.17g} "
                f"incumbent={incumbent_value:.17g}\n"
            )

    wall = time.perf_counter() - start
    if incumbent_point is None:
        if status is Status.BUDGET_EXHAUSTED:
            return Solution(None, None, status, nodes, wall)
        return Solution(None, None, Status.INFEASIBLE, nodes, wall)
    return Solution(incumbent_point, float(incumbent_value), status, nodes, wall)
