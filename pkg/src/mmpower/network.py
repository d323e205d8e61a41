"""Gaussian interference network model and its mixed-monotonic problem forms.

Rates treat interference as noise: user i decodes at

    rate_i(p) = B * log2(1 + alpha_i p_i / (sum_{j != i} beta_ij p_j + sigma2_i))

in bit/s. The global energy efficiency (GEE) is the benefit-cost ratio of
system throughput and total dissipated power, sum_i rate_i / (sum_i mu_i p_i
+ p_static).

Throughput and GEE maximization, and transmit-power minimization under a
near-maximal-throughput constraint, all admit MM representations built from

    R_i(x, y) = B * log2(1 + alpha_i x_i / (sum_{j != i} beta_ij y_j + sigma2_i)),

which is nondecreasing in x, nonincreasing in y, and equals rate_i on the
diagonal. `build_problem` assembles the objective/constraint MMPairs and the
power box for each of the three problem kinds.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boxes import Box, MMPair


def _as_readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InterferenceNetwork:
    """Effective channel gains and noise of an n-user Gaussian network.

    alpha: direct-link power gains (linear, > 0), shape (n,).
    beta: cross-link power gains (linear, >= 0, zero diagonal), shape (n, n);
          beta[i, j] is the gain from transmitter j into receiver i.
    sigma2: noise powers in W (> 0), shape (n,).
    bandwidth: communication bandwidth in Hz (> 0).
    """

    alpha: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    bandwidth: float

    def __post_init__(self):
        alpha = _as_readonly(self.alpha)
        beta = np.array(self.beta, dtype=float, copy=True)
        sigma2 = _as_readonly(self.sigma2)
        n = alpha.size
        if alpha.ndim != 1 or sigma2.shape != (n,) or beta.shape != (n, n):
            raise ValueError("inconsistent network dimensions")
        if not (alpha > 0).all():
            raise ValueError("alpha must be strictly positive")
        if (beta < 0).any():
            raise ValueError("beta must be nonnegative")
        if np.diagonal(beta).any():
            raise ValueError("beta must have a zero diagonal")
        if not (sigma2 > 0).all():
            raise ValueError("sigma2 must be strictly positive")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not (
            np.isfinite(alpha).all()
            and np.isfinite(beta).all()
            and np.isfinite(sigma2).all()
            and np.isfinite(self.bandwidth)
        ):
            raise ValueError("network parameters must be finite")
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def n_users(self) -> int:
        return self.alpha.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, InterferenceNetwork):
            return NotImplemented
        return bool(
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.sigma2, other.sigma2)
            and self.bandwidth == other.bandwidth
        )


@dataclass(frozen=True)
class PowerModel:
    """Dissipated-power model: total power = sum_i mu_i p_i + p_static.

    mu: per-transmitter PA inefficiency factors (>= 0, dimensionless).
    p_static: total static circuit power in W (> 0).
    """

    mu: np.ndarray
    p_static: float

    def __post_init__(self):
        mu = _as_readonly(self.mu)
        if mu.ndim != 1 or (mu < 0).any():
            raise ValueError("mu must be a nonnegative vector")
        if not self.p_static > 0:
            raise ValueError("p_static must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "p_static", float(self.p_static))

    def dissipated(self, p) -> float:
        p = np.asarray(p, dtype=float)
        return float(p @ self.mu + self.p_static)


class ProblemKind(enum.Enum):
    TP_MAX = "tp_max"
    GEE_MAX = "gee_max"
    PMIN_HTEE = "pmin_htee"


@dataclass(frozen=True)
class ProblemSpec:
    """What to optimize over the power box [0, p_max].

    r_min are per-user QoS rate floors in bit/s. For PMIN_HTEE, omega is the
    worsening factor and r_star the previously computed optimal throughput in
    bit/s; the power minimization then requires sum rate >= omega * r_star.
    """

    kind: ProblemKind
    p_max: np.ndarray
    r_min: Optional[np.ndarray] = None
    omega: float = 1.0
    r_star: Optional[float] = None

    def __post_init__(self):
        p_max = _as_readonly(self.p_max)
        if p_max.ndim != 1 or not (p_max > 0).all():
            raise ValueError("p_max must be a strictly positive vector")
        r_min = np.zeros(p_max.size) if self.r_min is None else np.array(self.r_min, dtype=float)
        if r_min.shape != p_max.shape or (r_min < 0).any():
            raise ValueError("r_min must be nonnegative with the same length as p_max")
        r_min.setflags(write=False)
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if (self.r_star is not None) != (self.kind is ProblemKind.PMIN_HTEE):
            raise ValueError("r_star must be set exactly for PMIN_HTEE problems")
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "r_min", r_min)
        object.__setattr__(self, "omega", float(self.omega))


def _check_power(net: InterferenceNetwork, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (net.n_users,):
        raise ValueError(f"power vector must have shape ({net.n_users},)")
    if (p < 0).any():
        raise ValueError("powers must be nonnegative")
    return p


def sinr(net: InterferenceNetwork, p, i: int) -> float:
    """Receive SINR of user i: alpha_i p_i / (sum_{j != i} beta_ij p_j + sigma2_i)."""
    p = _check_power(net, p)
    if not 0 <= i < net.n_users:
        raise IndexError(f"user index {i} out of range")
    interference = float(net.beta[i] @ p)  # zero diagonal excludes j == i
    return float(net.alpha[i] * p[i] / (interference + net.sigma2[i]))


def rate(net: InterferenceNetwork, p, i: int) -> float:
    """Achievable rate of user i in bit/s: bandwidth * log2(1 + SINR)."""
    return net.bandwidth * float(np.log2(1.0 + sinr(net, p, i)))


def sum_rate(net: InterferenceNetwork, p) -> float:
    """System throughput in bit/s."""
    p = _check_power(net, p)
    s = net.alpha * p / (p @ net.beta.T + net.sigma2)
    return net.bandwidth * float(np.log2(1.0 + s).sum())


def gee(net: InterferenceNetwork, power_model: PowerModel, p) -> float:
    """Global energy efficiency in bit/J."""
    return sum_rate(net, p) / power_model.dissipated(p)


def _stacked_rates(net: InterferenceNetwork, x, y) -> np.ndarray:
    """Per-user R_i(x, y) for single points (n,) or stacked rows (m, n)."""
    interference = y @ net.beta.T + net.sigma2
    return net.bandwidth * np.log2(1.0 + net.alpha * x / interference)


def rate_mm(net: InterferenceNetwork, i: int) -> MMPair:
    """MM representation of user i's rate: diagonal equals rate(net, ., i)."""
    if not 0 <= i < net.n_users:
        raise IndexError(f"user index {i} out of range")
    alpha_i = net.alpha[i]
    beta_i = net.beta[i]
    sigma2_i = net.sigma2[i]
    bandwidth = net.bandwidth

    def fn(x, y):
        interference = y @ beta_i + sigma2_i
        return bandwidth * np.log2(1.0 + alpha_i * x[..., i] / interference)

    return MMPair(fn, net.n_users, vectorized=True)


def sum_rate_mm(net: InterferenceNetwork) -> MMPair:
    """MM representation of the system throughput (sum of per-user rates)."""

    def fn(x, y):
        return _stacked_rates(net, x, y).sum(axis=-1)

    return MMPair(fn, net.n_users, vectorized=True)


def gee_mm(net: InterferenceNetwork, power_model: PowerModel) -> MMPair:
    """MM representation of the GEE: throughput in x over dissipation in y."""
    mu = power_model.mu
    p_static = power_model.p_static

    def fn(x, y):
        return _stacked_rates(net, x, y).sum(axis=-1) / (y @ mu + p_static)

    return MMPair(fn, net.n_users, vectorized=True)


def qos_constraint_mm(net: InterferenceNetwork, r_min) -> MMPair:
    """MM form of the QoS floors: max_i (r_min_i - R_i(y, x)) <= 0.

    The argument swap makes the constraint nondecreasing in x and
    nonincreasing in y, as the solvers' pruning rules require.
    """
    r_min = np.asarray(r_min, dtype=float)

    def fn(x, y):
        return (r_min - _stacked_rates(net, y, x)).max(axis=-1)

    return MMPair(fn, net.n_users, vectorized=True)


def merged_constraint_mm(net: InterferenceNetwork, omega: float, r_star: float, r_min) -> MMPair:
    """Single MM constraint merging the throughput floor with the QoS floors.

    G(x, y) = max( omega * r_star - sum_i R_i(y, x),
                   max_i (r_min_i - R_i(y, x)) );
    G(p, p) <= 0 iff sum rate >= omega * r_star and every rate_i >= r_min_i.
    """
    r_min = np.asarray(r_min, dtype=float)
    threshold = float(omega * r_star)

    def fn(x, y):
        rates = _stacked_rates(net, y, x)
        worst_qos = (r_min - rates).max(axis=-1)
        return np.maximum(threshold - rates.sum(axis=-1), worst_qos)

    return MMPair(fn, net.n_users, vectorized=True)


def _shifted_rate_dual(net: InterferenceNetwork):
    """Closed-form dual cap on max_p [throughput(p) - shift . p] over boxes.

    Treats the interference-plus-noise vector z = beta p + sigma2 as an
    independent variable ranging over [z(r), z(s)] and prices the dropped
    coupling with a multiplier matched to the throughput's z-gradient at the
    box midpoint. The relaxed problem separates per user: concave in p_i
    (closed-form water-filling) and convex in z_i (endpoint maximum), so the
    cap is exact for the relaxation and second-order tight in the box width.

    Returns caps(lowers, uppers, shift) -> (m,) with shift an (m, n) array
    of nonnegative per-coordinate linear prices (or None).
    """
    alpha = net.alpha
    beta = net.beta
    sigma2 = net.sigma2
    bandwidth = net.bandwidth
    ln2 = float(np.log(2.0))

    def caps(lowers: np.ndarray, uppers: np.ndarray, shift=None) -> np.ndarray:
        mid = 0.5 * (lowers + uppers)
        z_mid = mid @ beta.T + sigma2
        price = bandwidth * alpha * mid / (ln2 * z_mid * (z_mid + alpha * mid))
        w = price @ beta
        if shift is not None:
            w = w + shift
        z_lo = lowers @ beta.T + sigma2
        z_hi = uppers @ beta.T + sigma2
        best = None
        for z in (z_lo, z_hi):
            with np.errstate(divide="ignore"):
                p_star = bandwidth / (ln2 * w) - z / alpha
            p_star = np.clip(p_star, lowers, uppers)
            phi = (
                bandwidth * np.log2(1.0 + alpha * p_star / z)
                - w * p_star
                + price * z
            )
            best = phi if best is None else np.maximum(best, phi)
        return best.sum(axis=1) - (price * sigma2).sum(axis=1)

    return caps


def sum_rate_box_bound(net: InterferenceNetwork, segments: int = 32, min_frac: float = 1e-7):
    """Batched upper bound on the throughput diagonal over boxes.

    Refines the MM corner bound along one dimension j at a time: with p_j
    restricted to a segment [t_k, t_{k+1}], user j's signal is bounded at
    t_{k+1} while everyone else's interference from j is bounded at t_k, and
    the remaining coordinates keep their usual best corners. The segment max
    upper-bounds the diagonal over the whole box; the minimum over all
    refinement dimensions is kept. Segment edges are geometrically spaced
    from the lower edge because the rate terms turn over at powers orders of
    magnitude below a typical box width. Never above the plain corner bound.

    Returns a callable mapping stacked lower/upper corners (m, n) to (m,)
    bounds.
    """
    alpha = net.alpha
    beta = net.beta
    sigma2 = net.sigma2
    bandwidth = net.bandwidth
    n = net.n_users
    dual_caps = _shifted_rate_dual(net)
    ratio = min_frac ** (1.0 / (segments - 1))
    frac = np.concatenate(([0.0], ratio ** np.arange(segments - 1, -1, -1.0)))  # (K+1,)

    def bound(lowers: np.ndarray, uppers: np.ndarray) -> np.ndarray:
        interference_r = lowers @ beta.T + sigma2  # (m, n), at the lower corner
        best = dual_caps(lowers, uppers)
        for j in range(n):
            t = lowers[:, j][:, None] + (uppers[:, j] - lowers[:, j])[:, None] * frac
            # interference at each receiver with coordinate j's share removed
            base = interference_r - np.outer(lowers[:, j], beta[:, j])
            denom = t[:, :, None] * beta[:, j] + base[:, None, :]  # (m, K+1, n)
            terms = np.log2(1.0 + alpha * uppers[:, None, :] / denom)
            others = terms.sum(axis=2) - terms[:, :, j]  # (m, K+1)
            sig = np.log2(1.0 + alpha[j] * t / interference_r[:, j][:, None])
            value = bandwidth * (sig[:, 1:] + others[:, :-1]).max(axis=1)
            best = np.minimum(best, value)
        return best

    return bound


def gee_box_bound(
    net: InterferenceNetwork,
    power_model: PowerModel,
    segments: int = 32,
    min_frac: float = 1e-7,
):
    """Batched upper bound on the GEE diagonal over boxes, for BB pruning.

    Two valid caps are combined, and their minimum returned:

    * Fixing every user's interference at the box's lower corner makes the
      throughput separable and concave in p while the dissipated power stays
      linear, so the box relaxation is a concave-over-linear program. A few
      Dinkelbach steps solve it essentially exactly; the certified wrap-up
      term max_p (N(p) - lam D(p)) / min_p D(p) makes any iterate safe.

    * The segmented throughput cap of `sum_rate_box_bound`, where each
      segment along the refined dimension is divided by its own least
      dissipated power, which couples the numerator and denominator through
      the one coordinate that matters most.

    Returns a callable mapping stacked lower/upper corners (m, n) to (m,)
    bounds.
    """
    mu = power_model.mu
    p_static = power_model.p_static
    ln2 = float(np.log(2.0))
    bandwidth = net.bandwidth
    alpha = net.alpha
    beta = net.beta
    sigma2 = net.sigma2
    n = net.n_users
    dual_caps = _shifted_rate_dual(net)
    ratio = min_frac ** (1.0 / (segments - 1))
    frac = np.concatenate(([0.0], ratio ** np.arange(segments - 1, -1, -1.0)))

    def bound(lowers: np.ndarray, uppers: np.ndarray) -> np.ndarray:
        interference_r = lowers @ beta.T + sigma2
        d_lower = lowers @ mu + p_static

        # Segmented throughput over segment-minimal dissipation, per dim.
        best = None
        for j in range(n):
            width = (uppers[:, j] - lowers[:, j])[:, None]
            t = lowers[:, j][:, None] + width * frac
            base = interference_r - np.outer(lowers[:, j], beta[:, j])
            denom = t[:, :, None] * beta[:, j] + base[:, None, :]
            terms = np.log2(1.0 + alpha * uppers[:, None, :] / denom)
            others = terms.sum(axis=2) - terms[:, :, j]
            sig = np.log2(1.0 + alpha[j] * t / interference_r[:, j][:, None])
            cell_rate = sig[:, 1:] + others[:, :-1]
            cell_dissipation = d_lower[:, None] + mu[j] * (t[:, :-1] - t[:, :1])
            value = (bandwidth * cell_rate / cell_dissipation).max(axis=1)
            best = value if best is None else np.minimum(best, value)

        # Dinkelbach on the interference-pinned separable relaxation.
        slope = alpha / interference_r

        def numerator(p):
            return bandwidth * np.log2(1.0 + slope * p).sum(axis=-1)

        def denominator(p):
            return p @ mu + p_static

        def argmax_shifted(lam):
            # componentwise water-filling argmax of N(p) - lam * D(p)
            with np.errstate(divide="ignore"):
                p = bandwidth / (ln2 * np.outer(lam, mu)) - 1.0 / slope
            return np.clip(p, lowers, uppers)

        lam = numerator(lowers) / denominator(lowers)
        for _ in range(12):
            p_best = argmax_shifted(lam)
            lam = numerator(p_best) / denominator(p_best)
        # Certify: for any lam, max N/D <= lam + max(N - lam D) / min D.
        p_check = argmax_shifted(lam)
        residual = numerator(p_check) - lam * denominator(p_check)
        fractional = lam + np.maximum(residual, 0.0) / d_lower
        best = np.minimum(fractional, best)

        # Dinkelbach fixed point on the interference-coupled dual throughput
        # cap: max (TP - lam D) <= U(lam) - lam p_static with shift = lam mu.
        # Every iterate certifies a valid bound; the iteration contracts
        # toward the cap's own optimal ratio, so keep the best certificate.
        d_mid = 0.5 * (lowers + uppers) @ mu + p_static
        lam = np.maximum(best, 0.0)
        for _ in range(8):
            shifted = dual_caps(lowers, uppers, shift=lam[:, None] * mu)
            phi = shifted - lam * p_static
            best = np.minimum(best, lam + np.maximum(phi, 0.0) / d_lower)
            lam = np.maximum(lam + phi / d_mid, 0.0)
        return best

    return bound


def powersum_mm(n: int) -> MMPair:
    """MM representation of the total transmit power, diagonal sum_i p_i."""

    def fn(x, y):
        return np.asarray(x, dtype=float).sum(axis=-1)

    return MMPair(fn, n, vectorized=True)


@dataclass(frozen=True)
class BuiltProblem:
    objective: MMPair
    sense: str  # "max" or "min"
    constraint: MMPair
    box: Box


def build_problem(
    net: InterferenceNetwork, power_model: PowerModel, spec: ProblemSpec
) -> BuiltProblem:
    """Assemble the MM objective, the merged MM constraint, and the power box.

    TP_MAX maximizes the throughput under the QoS floors; GEE_MAX maximizes
    the GEE under the same floors; PMIN_HTEE minimizes the total transmit
    power under the merged throughput-and-QoS constraint, and requires the
    throughput optimum r_star to have been computed beforehand.
    """
    if spec.p_max.size != net.n_users:
        raise ValueError("spec dimension does not match the network")
    box = Box(np.zeros(net.n_users), spec.p_max)
    if spec.kind is ProblemKind.TP_MAX:
        return BuiltProblem(sum_rate_mm(net), "max", qos_constraint_mm(net, spec.r_min), box)
    if spec.kind is ProblemKind.GEE_MAX:
        return BuiltProblem(
            gee_mm(net, power_model), "max", qos_constraint_mm(net, spec.r_min), box
        )
    if spec.kind is ProblemKind.PMIN_HTEE:
        if spec.r_star is None:
            raise ValueError("PMIN_HTEE requires r_star (solve the throughput problem first)")
        constraint = merged_constraint_mm(net, spec.omega, spec.r_star, spec.r_min)
        return BuiltProblem(powersum_mm(net.n_users), "min", constraint, box)
    raise ValueError(f"unknown problem kind: {spec.kind!r}")


# Line-oriented text format: header "n bandwidth", then the alpha row, the
# sigma2 row, and n beta rows. 17 significant digits round-trips doubles.

_FMT = "{:.16e}"


def _format_row(values: np.ndarray) -> str:
    return " ".join(_FMT.format(v) for v in values)


def dumps_network(net: InterferenceNetwork) -> str:
    out = io.StringIO()
    out.write(f"{net.n_users} {_FMT.format(net.bandwidth)}\n")
    out.write(_format_row(net.alpha) + "\n")
    out.write(_format_row(net.sigma2) + "\n")
    for i in range(net.n_users):
        out.write(_format_row(net.beta[i]) + "\n")
    return out.getvalue()


def loads_network(text: str) -> InterferenceNetwork:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty network file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("malformed network header: expected 'n bandwidth'")
    n = int(header[0])
    bandwidth = float(header[1])
    if len(lines) != 3 + n:
        raise ValueError(f"expected {3 + n} lines for a {n}-user network, got {len(lines)}")
    alpha = np.array([float(v) for v in lines[1].split()])
    sigma2 = np.array([float(v) for v in lines[2].split()])
    beta = np.array([[float(v) for v in lines[3 + i].split()] for i in range(n)])
    return InterferenceNetwork(alpha=alpha, beta=beta, sigma2=sigma2, bandwidth=bandwidth)


def save_network(net: InterferenceNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(net))


def load_network(path) -> InterferenceNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_network(fh.read())
