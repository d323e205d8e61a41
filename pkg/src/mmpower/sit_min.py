"""Successive-incumbent-transcending branch-and-bound for constrained minimization.

Minimizes a nondecreasing objective f over a box subject to g(p) <= 0, where
g is given through an MM representation G. Instead of bounding f directly,
the scheme keeps a threshold gamma one improvement step (eta) below the best
feasible objective seen, and sweeps the box partition for a feasible point
with f below gamma. A box [r, s] dies once its cheapest point cannot beat
gamma (f(r) >= gamma) or once no point in it is feasible with margin eps
(G(r, s) > -eps). The eps margin excludes numerically unstable boundary
points and is what makes termination finite; the result is an essential
(eps, eta)-optimal solution.

Boxes are processed oldest-first: insertion is O(1), and every box is
reached after a bounded delay, which keeps the active set small compared to
best-first selection. Before a freshly bisected box enters the queue it is
shrunk by a reduction hook that must preserve every point x with f(x) <=
gamma and g(x) <= 0; the built-in hook covers the total-power objective.

For throughput, boxes are popped in FIFO order but evaluated in small waves
sharing batched constraint calls. Reduction and pruning within a wave use
the threshold from the wave's start (never tighter than the sequential
scheme would have used, so nothing valid is cut), and the incumbent step
takes the best feasible corner of the whole wave, which decreases gamma by
at least eta exactly as a per-box update would.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from .bb_max import Solution, Status
from .boxes import Box, MMPair, NumericalDomainError

_WAVE_SIZE = 16


@dataclass(frozen=True)
class SitConfig:
    """Tolerances and budgets for one SIT solve.

    eps: essential-feasibility margin; boxes whose best constraint value
        exceeds -eps are discarded.
    eta: incumbent improvement step; each accepted incumbent lowers the
        threshold by at least this much, in the objective's units.
    """

    eps: float
    eta: float
    node_budget: int = 1_000_000
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.node_budget <= 0:
            raise ValueError("node_budget must be positive")


@dataclass
class SitState:
    """Mutable solver state: FIFO partition, incumbent, and threshold."""

    active_boxes: deque
    gamma: float
    incumbent: Optional[np.ndarray] = None
    incumbent_value: float = np.inf
    k: int = 0


def reduce_box_powersum(box: Box, gamma: float) -> Optional[Box]:
    """Shrink a box against the total-power threshold sum_i x_i <= gamma.

    Upper corners tighten to s'_i = min(s_i, gamma - sum_{j != i} r_j); lower
    corners are already the cheapest points and stay. Returns None when the
    reduced box would be empty, i.e. the box holds no point with total power
    at most gamma. Every x in the box with sum(x) <= gamma is preserved.
    """
    lo = np.asarray(box.lower, dtype=float)
    hi = np.asarray(box.upper, dtype=float)
    budget = gamma - lo.sum() + lo
    new_hi = np.minimum(hi, budget)
    if (new_hi < lo).any():
        return None
    return Box(lo, new_hi)


def minimize_sit(
    f: Callable[[np.ndarray], float],
    constraint: MMPair,
    box0: Box,
    cfg: SitConfig,
    reducer: Optional[Callable[[Box, float], Optional[Box]]] = None,
    warm_start: Optional[np.ndarray] = None,
    trace: Optional[TextIO] = None,
    f_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    constraint_bound: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> Solution:
    """Minimize nondecreasing ``f`` subject to the diagonal of ``constraint`` <= 0.

    ``reducer`` replaces each fresh box with a subset that keeps every point
    satisfying f <= gamma and the constraint; None selects the built-in
    total-power reduction (valid only when f is the power sum). ``warm_start``
    seeds the incumbent with a known feasible point, typically the
    throughput-optimal allocation. ``f_batch``, when given, evaluates f on
    stacked (m, n) points at once. ``constraint_bound``, when given, maps
    stacked box corners (m, n) x (m, n) to (m,) lower bounds on the
    constraint diagonal over each box; the pruning test uses the larger of it
    and the MM corner bound. Returns an essential (eps, eta)-optimal
    solution, or INFEASIBLE when no eps-essentially-feasible point exists.
    """
    start = time.perf_counter()
    lo0 = np.array(box0.lower, dtype=float)
    hi0 = np.array(box0.upper, dtype=float)
    fast_reduce = reducer is None
    if f_batch is None:
        f_batch = lambda pts: np.array([float(f(p)) for p in pts])  # noqa: E731

    state = SitState(active_boxes=deque(), gamma=float(f(hi0)))
    if warm_start is not None:
        w = np.array(warm_start, dtype=float)
        if box0.contains(w) and float(constraint(w, w)) <= 0.0:
            state.incumbent = w
            state.incumbent_value = float(f(w))
            state.gamma = state.incumbent_value - cfg.eta

    def finish(status: Status) -> Solution:
        wall = time.perf_counter() - start
        if state.incumbent is None:
            return Solution(None, None, status, state.k, wall)
        return Solution(state.incumbent, state.incumbent_value, status, state.k, wall)

    if box0.max_width == 0.0:
        # Degenerate region: the single point is the only candidate.
        if float(constraint(lo0, lo0)) <= 0.0:
            value = float(f(lo0))
            if value < state.incumbent_value:
                state.incumbent = lo0
                state.incumbent_value = value
                state.gamma = value - cfg.eta
        return finish(Status.OPTIMAL if state.incumbent is not None else Status.INFEASIBLE)

    n = lo0.size
    state.active_boxes.append((lo0, hi0))
    first_iteration = True

    while state.active_boxes:
        if state.k >= cfg.node_budget:
            return finish(Status.BUDGET_EXHAUSTED)
        if cfg.time_budget is not None and time.perf_counter() - start > cfg.time_budget:
            return finish(Status.BUDGET_EXHAUSTED)

        # Tracing runs strictly one box per wave so the log is per iteration.
        wave_cap = 1 if trace is not None else _WAVE_SIZE
        wave_len = min(wave_cap, cfg.node_budget - state.k, len(state.active_boxes))
        wave = [state.active_boxes.popleft() for _ in range(wave_len)]
        gamma0 = state.gamma
        state.k += wave_len

        # Branching: bisect each popped box at the midpoint of its longest
        # edge; the second child's lower corner is the one new candidate
        # (plus the root corner itself on the very first iteration).
        child_lo = np.empty((2 * wave_len, n))
        child_hi = np.empty((2 * wave_len, n))
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

        # Reduction against the wave-start threshold; empty reductions are
        # the objective cut in disguise and drop the child immediately.
        alive = np.ones(2 * wave_len, dtype=bool)
        if fast_reduce:
            budget = gamma0 - child_lo.sum(axis=1, keepdims=True) + child_lo
            child_hi = np.minimum(child_hi, budget)
            alive = ~(child_hi < child_lo).any(axis=1)
        else:
            for i in range(2 * wave_len):
                reduced = reducer(Box(child_lo[i], child_hi[i]), gamma0)
                if reduced is None:
                    alive[i] = False
                    continue
                child_lo[i] = reduced.lower
                child_hi[i] = reduced.upper
        empty_cut = int((~alive).sum())

        # Incumbent step: feasible fresh lower corners compete; the best one
        # is accepted if it undercuts the threshold (always, if none is set).
        fresh_idx = [i for i in range(2 * wave_len) if alive[i] and (i % 2 == 1 or first_iteration)]
        if fresh_idx:
            pts = child_lo[fresh_idx]
            g_diag = constraint.many(pts, pts)
            if not np.isfinite(g_diag).all():
                raise NumericalDomainError("constraint evaluated to a non-finite value")
            feasible = g_diag <= 0.0
            if feasible.any():
                values = f_batch(pts[feasible])
                best = int(np.argmin(values))
                best_value = float(values[best])
                if state.incumbent is None or best_value <= state.gamma:
                    state.incumbent = pts[feasible][best].copy()
                    state.incumbent_value = best_value
                    state.gamma = best_value - cfg.eta

        # Pruning: objective cut first (cheap), then the eps-feasibility cut
        # on the reduced boxes, both against the freshest threshold.
        obj_cut = 0
        feas_cut = 0
        live_idx = np.flatnonzero(alive)
        if live_idx.size:
            f_lo = f_batch(child_lo[live_idx])
            keep = []
            for pos, i in enumerate(live_idx):
                if f_lo[pos] >= state.gamma:
                    obj_cut += 1
                    continue
                keep.append(i)
            if keep:
                g_bounds = constraint.many(child_lo[keep], child_hi[keep])
                if not np.isfinite(g_bounds).all():
                    raise NumericalDomainError("constraint evaluated to a non-finite value")
                if constraint_bound is not None:
                    g_bounds = np.maximum(
                        g_bounds, constraint_bound(child_lo[keep], child_hi[keep])
                    )
                for pos, i in enumerate(keep):
                    if g_bounds[pos] > -cfg.eps:
                        feas_cut += 1
                        continue
                    state.active_boxes.append((child_lo[i].copy(), child_hi[i].copy()))

        first_iteration = False
        if trace is not None:
            trace.write(
                f"k={state.k} active={len(state.active_boxes)} gamma={state.gamma:.17g} "
                f"pruned_obj={empty_cut + obj_cut} pruned_feas={feas_cut}\n"
            )

    return finish(Status.OPTIMAL if state.incumbent is not None else Status.INFEASIBLE)
