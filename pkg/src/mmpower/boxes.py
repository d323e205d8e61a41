"""Axis-aligned boxes and mixed-monotonic bound evaluation.

This is the geometric substrate shared by both branch-and-bound solvers:
closed hyperrectangles in power space, longest-edge bisection, and the
corner-evaluation bounds that mixed-monotonic (MM) functions admit.

An MM function F(x, y) is nondecreasing in x and nonincreasing in y on an
enclosing box; its diagonal F(x, x) represents the actual target function.
Evaluating F at opposite corners of a box then brackets the diagonal over
the whole box, which is all a BB scheme needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class NumericalDomainError(ArithmeticError):
    """A function evaluation left the finite floating-point domain."""


class DegenerateBoxError(ValueError):
    """Bisection was requested for a box with no positive-width edge."""


def _as_readonly_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"box corner must be a 1-D vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Closed hyperrectangle [lower, upper], componentwise, in R^n.

    Corners are finite and nonnegative (powers in W) with lower <= upper.
    Instances are immutable; the corner arrays are read-only views.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_readonly_vector(self.lower))
        object.__setattr__(self, "upper", _as_readonly_vector(self.upper))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box corners must have equal length")
        if not (np.isfinite(self.lower).all() and np.isfinite(self.upper).all()):
            raise ValueError("box corners must be finite")
        if (self.lower < 0).any():
            raise ValueError("box corners must be nonnegative")
        if (self.lower > self.upper).any():
            raise ValueError("box requires lower <= upper componentwise")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def max_width(self) -> float:
        return float(self.widths.max())

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool((x >= self.lower - atol).all() and (x <= self.upper + atol).all())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Box):
            return NotImplemented
        return bool(
            np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __repr__(self) -> str:
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


@dataclass(frozen=True)
class MMPair:
    """A function of two vector arguments with the mixed-monotonic contract.

    ``fn(x, y)`` must be nondecreasing in x and nonincreasing in y on the
    enclosing box, and continuous there; ``fn(x, x)`` is the represented
    target function. The contract is not enforced at construction (it is a
    semantic property); `mm_contract_violations` samples it.

    When ``vectorized`` is set, ``fn`` additionally accepts (m, n) arrays of
    stacked points and returns an (m,) array. Solvers exploit this to batch
    bound and candidate evaluations per node.
    """

    fn: Callable
    n: int
    vectorized: bool = False

    def __call__(self, x, y) -> float:
        return float(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))

    def diagonal(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.fn(x, x))

    def many(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Evaluate on stacked (m, n) argument arrays, returning shape (m,)."""
        if self.vectorized:
            return np.asarray(self.fn(xs, ys), dtype=float)
        return np.array([self.fn(x, y) for x, y in zip(xs, ys)], dtype=float)


def bisect(box: Box) -> tuple[Box, Box]:
    """Split a box at the midpoint of its longest edge.

    Ties pick the lowest index, so runs are reproducible. The children are
    closed and share the splitting facet; their union is the input box.
    """
    widths = box.widths
    j = int(np.argmax(widths))
    if widths[j] <= 0.0:
        raise DegenerateBoxError("cannot bisect a box with all edges of zero width")
    v = 0.5 * (box.lower[j] + box.upper[j])
    left_upper = box.upper.copy()
    left_upper[j] = v
    right_lower = box.lower.copy()
    right_lower[j] = v
    return Box(box.lower, left_upper), Box(right_lower, box.upper)


def _checked(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericalDomainError(f"{what} evaluated to a non-finite value: {value!r}")
    return float(value)


def lower_bound_min(g: MMPair, box: Box) -> float:
    """G(lower, upper): a lower bound on min of the diagonal of G over the box."""
    return _checked(g(box.lower, box.upper), "lower bound")


def upper_bound_max(f: MMPair, box: Box) -> float:
    """F(upper, lower): an upper bound on max of the diagonal of F over the box."""
    return _checked(f(box.upper, box.lower), "upper bound")


def mm_contract_violations(
    pair: MMPair,
    box: Box,
    rng: np.random.Generator,
    n_pairs: int = 1000,
    rtol: float = 1e-9,
) -> int:
    """Count sampled violations of the MM monotonicity contract on a box.

    Draws ordered argument pairs x <= x' (and y <= y') uniformly in the box
    and checks both monotonicity directions with a small relative tolerance
    for floating-point noise. Returns the number of violated samples.
    """
    violations = 0
    for _ in range(n_pairs):
        a = rng.uniform(box.lower, box.upper)
        b = rng.uniform(box.lower, box.upper)
        x, x_hi = np.minimum(a, b), np.maximum(a, b)
        c = rng.uniform(box.lower, box.upper)
        d = rng.uniform(box.lower, box.upper)
        y, y_hi = np.minimum(c, d), np.maximum(c, d)

        f_xy = pair(x, y)
        tol = rtol * max(1.0, abs(f_xy))
        if pair(x_hi, y) < f_xy - tol:
            violations += 1
            continue
        if pair(x, y_hi) > f_xy + tol:
            violations += 1
    return violations
