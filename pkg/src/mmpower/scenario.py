"""Random multi-cell uplink deployments and channel generation.

A square area is divided into a grid of equal cells with one base station at
each cell center. One user terminal per cell is drawn uniformly over the
whole area; each terminal associates to the base station with the strongest
composite channel (path loss, log-normal shadowing, and Rayleigh fading).
Drops where some base station ends up serving zero or several terminals are
rejected and redrawn as a whole.

Path loss follows the COST231-Hata urban model (medium-city correction),
with distances clamped below to keep the model out of its near-field
singularity. The resulting effective gains populate an InterferenceNetwork:
alpha_i is user i's gain to its serving base station, beta_ij the gain of
user j into that same receiver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .network import InterferenceNetwork, PowerModel


class GenerationError(RuntimeError):
    """Deployment rejection did not produce a valid drop within the attempt cap."""


@dataclass(frozen=True)
class ScenarioParams:
    """Geometry, propagation, and power-consumption constants of a drop.

    p_static is the total static circuit power entering the GEE denominator;
    pa_efficiency sets the PA inefficiency mu = 1 / pa_efficiency per user.
    """

    area_edge_m: float = 1000.0
    n_cells: int = 4
    carrier_freq_mhz: float = 1900.0
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    shadowing_sigma_db: float = 8.0
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 3.0
    bandwidth_hz: float = 180_000.0
    pa_efficiency: float = 0.25
    p_static_w: float = 0.4
    min_distance_m: float = 10.0

    def __post_init__(self):
        positive = (
            self.area_edge_m,
            self.n_cells,
            self.carrier_freq_mhz,
            self.bs_height_m,
            self.ue_height_m,
            self.shadowing_sigma_db,
            self.bandwidth_hz,
            self.pa_efficiency,
            self.p_static_w,
            self.min_distance_m,
        )
        if not all(v > 0 for v in positive):
            raise ValueError("scenario parameters must be positive")
        side = math.isqrt(self.n_cells)
        if side * side != self.n_cells:
            raise ValueError("n_cells must be a perfect square for the grid layout")

    def power_model(self) -> PowerModel:
        mu = np.full(self.n_cells, 1.0 / self.pa_efficiency)
        return PowerModel(mu=mu, p_static=self.p_static_w)


@dataclass(frozen=True)
class Deployment:
    """Positions in meters and the user-to-base-station association."""

    bs_positions: np.ndarray
    ue_positions: np.ndarray
    association: np.ndarray


def noise_power_w(params: ScenarioParams) -> float:
    """Receiver noise power over the full bandwidth, in W."""
    dbm_per_hz = params.noise_density_dbm_hz + params.noise_figure_db
    return 10.0 ** (dbm_per_hz / 10.0 - 3.0) * params.bandwidth_hz


def pathloss_db(d_km, params: ScenarioParams):
    """COST231-Hata urban path loss in dB at distance d_km (scalar or array).

    PL = 46.3 + 33.9 log10(f) - 13.82 log10(h_b) - a(h_m)
         + (44.9 - 6.55 log10(h_b)) log10(d) + C
    with the small/medium-city mobile-antenna term a(h_m) and C = 0.
    Distances are clamped below at min_distance_m.
    """
    d = np.maximum(np.asarray(d_km, dtype=float), params.min_distance_m / 1000.0)
    f = params.carrier_freq_mhz
    h_b = params.bs_height_m
    h_m = params.ue_height_m
    a_hm = (1.1 * math.log10(f) - 0.7) * h_m - (1.56 * math.log10(f) - 0.8)
    pl = (
        46.3
        + 33.9 * math.log10(f)
        - 13.82 * math.log10(h_b)
        - a_hm
        + (44.9 - 6.55 * math.log10(h_b)) * np.log10(d)
    )
    return pl if pl.ndim else float(pl)


def bs_grid(params: ScenarioParams) -> np.ndarray:
    """Base-station positions at the centers of the square cell grid, in m."""
    side = math.isqrt(params.n_cells)
    cell = params.area_edge_m / side
    centers = (np.arange(side) + 0.5) * cell
    xx, yy = np.meshgrid(centers, centers)
    return np.column_stack((xx.ravel(), yy.ravel()))


def shadowing_db(rng: np.random.Generator, size, params: ScenarioParams) -> np.ndarray:
    """Log-normal shadowing samples in the dB domain: Normal(0, sigma^2)."""
    return rng.normal(0.0, params.shadowing_sigma_db, size)


def rayleigh_power(rng: np.random.Generator, size) -> np.ndarray:
    """Squared-magnitude Rayleigh fading samples, Exponential with mean 1."""
    return rng.exponential(1.0, size)


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    """Independent per-realization stream from a (seed, index) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def generate(
    seed: Union[int, np.random.Generator],
    params: Optional[ScenarioParams] = None,
    max_attempts: int = 100_000,
) -> tuple[Deployment, InterferenceNetwork]:
    """Draw one deployment and its effective interference network.

    The draw order per attempt is fixed (positions, shadowing, fading), so a
    given seed always yields the same drop. Whole drops are redrawn until the
    best-channel association is one-to-one; exceeding ``max_attempts``
    raises GenerationError.
    """
    params = params or ScenarioParams()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = params.n_cells
    bs = bs_grid(params)
    sigma2 = noise_power_w(params)

    for _ in range(max_attempts):
        ue = rng.uniform(0.0, params.area_edge_m, size=(n, 2))
        d_km = np.linalg.norm(ue[:, None, :] - bs[None, :, :], axis=-1) / 1000.0
        loss_db = pathloss_db(d_km, params) + shadowing_db(rng, (n, n), params)
        gains = 10.0 ** (-loss_db / 10.0) * rayleigh_power(rng, (n, n))
        association = gains.argmax(axis=1)
        if len(set(association.tolist())) != n:
            continue

        alpha = gains[np.arange(n), association]
        beta = gains.T[association].copy()  # beta[i, j] = gain of UE j at BS of UE i
        np.fill_diagonal(beta, 0.0)
        net = InterferenceNetwork(
            alpha=alpha,
            beta=beta,
            sigma2=np.full(n, sigma2),
            bandwidth=params.bandwidth_hz,
        )
        deployment = Deployment(
            bs_positions=bs, ue_positions=ue, association=association.copy()
        )
        return deployment, net

    raise GenerationError(f"no one-to-one association within {max_attempts} drops")
