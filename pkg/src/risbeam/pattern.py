"""Flat-top target patterns and the average reflected power pattern.

The power reflected by a phase-shifting surface towards angle phi, averaged
over the path gains of the feeding multipath channel, admits a closed form
that depends only on the statistical CSI (path angles and mean powers), the
surface phases theta and the transmit precoder W:

    y(phi) = M^2 * N_BS * a(phi)^H Theta A [I o (P B^H W W^H B)] A^H Theta^H a(phi)

with A/B the stacked steering vectors, P the diagonal of mean path powers,
and `o` the Hadamard product. The pattern is identical at every subcarrier,
so a single (theta, W) pair serves the whole OFDM band.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache, cached_property

import numpy as np

from .channel import ArrayGeometry, ChannelStats, steering_matrix

UNIT_MODULUS_ATOL = 1e-9


@dataclass(frozen=True)
class TargetPattern:
    """Flat-top target: constant ``flat_power`` over a sector, raised-cosine
    roll-off of relative width ``rolloff``, and a ``sidelobe_power`` floor."""

    flat_power: float
    sidelobe_power: float
    center: float
    half_width: float
    rolloff: float = 0.1

    def __post_init__(self) -> None:
        if not (self.flat_power > self.sidelobe_power >= 0.0):
            raise ValueError("need flat_power > sidelobe_power >= 0")
        if not (0.0 <= self.rolloff < 1.0):
            raise ValueError("rolloff factor must lie in [0, 1)")
        if self.half_width <= 0.0:
            raise ValueError("half_width must be positive")
        outer = self.half_width * (1.0 + self.rolloff)
        if self.center - outer < 0.0 or self.center + outer > np.pi:
            raise ValueError("target (including roll-off) must fit inside [0, pi]")

    @classmethod
    def for_coverage(cls, phi_min: float, phi_max: float, flat_power: float,
                     sidelobe_power: float | None = None,
                     rolloff: float = 0.1) -> "TargetPattern":
        """Build a target covering [phi_min, phi_max] (beam edges, radians)."""
        if not phi_min < phi_max:
            raise ValueError("phi_min must be below phi_max")
        if sidelobe_power is None:
            sidelobe_power = flat_power / 100.0
        return cls(flat_power=flat_power, sidelobe_power=sidelobe_power,
                   center=0.5 * (phi_min + phi_max),
                   half_width=0.5 * (phi_max - phi_min), rolloff=rolloff)

    @property
    def inner_half_width(self) -> float:
        return self.half_width * (1.0 - self.rolloff)

    @property
    def outer_half_width(self) -> float:
        return self.half_width * (1.0 + self.rolloff)


def target_value(target: TargetPattern, angle) -> np.ndarray:
    """Evaluate the flat-top target at angles in [0, pi]. Continuous everywhere."""
    d = np.abs(np.asarray(angle, dtype=float) - target.center)
    out = np.full_like(d, target.sidelobe_power)
    out[d <= target.inner_half_width] = target.flat_power
    roll = (d > target.inner_half_width) & (d <= target.outer_half_width)
    if np.any(roll):
        x = np.pi * (d[roll] - target.inner_half_width) / (2.0 * target.rolloff * target.half_width)
        mid = 0.5 * (target.flat_power + target.sidelobe_power)
        amp = 0.5 * (target.flat_power - target.sidelobe_power)
        out[roll] = mid + amp * np.cos(x)
    return out if out.ndim else float(out)


def region_masks(target: TargetPattern, angles: np.ndarray):
    """Boolean masks (flat, sidelobe, rolloff) partitioning the given angles."""
    d = np.abs(np.asarray(angles, dtype=float) - target.center)
    flat = d <= target.inner_half_width
    side = d > target.outer_half_width
    return flat, side, ~flat & ~side


@dataclass(frozen=True)
class AngularGrid:
    """Uniform oversampled grid over [0, pi): angles pi*j/(k*M)."""

    oversampling: int
    num_ris_elements: int

    def __post_init__(self) -> None:
        if self.oversampling <= 1:
            raise ValueError("oversampling factor must exceed 1")
        if self.num_ris_elements < 1:
            raise ValueError("num_ris_elements must be positive")

    @property
    def size(self) -> int:
        return self.oversampling * self.num_ris_elements

    @property
    def spacing(self) -> float:
        return np.pi / self.size

    @cached_property
    def angles(self) -> np.ndarray:
        a = np.arange(self.size) * self.spacing
        a.flags.writeable = False
        return a


def target_on_grid(target: TargetPattern, grid: AngularGrid) -> np.ndarray:
    return target_value(target, grid.angles)


@dataclass(frozen=True)
class WeightConfig:
    """Region weights for the synthesis cost (flat top, sidelobe, roll-off)."""

    flat_weight: float = 10.0
    sidelobe_weight: float = 1.0
    rolloff_weight: float = 0.5

    def __post_init__(self) -> None:
        if min(self.flat_weight, self.sidelobe_weight, self.rolloff_weight) <= 0:
            raise ValueError("all region weights must be positive")


def compute_weights(pattern_values: np.ndarray, target_values: np.ndarray,
                    target: TargetPattern, config: WeightConfig,
                    angles: np.ndarray) -> np.ndarray:
    """Per-sample weights: sidelobe samples already below the target get
    weight zero, everything else its region weight."""
    y = np.asarray(pattern_values, dtype=float)
    f = np.asarray(target_values, dtype=float)
    flat, side, roll = region_masks(target, angles)
    w = np.zeros_like(f)
    w[flat] = config.flat_weight
    w[roll] = config.rolloff_weight
    w[side & (y > f)] = config.sidelobe_weight
    return w


@lru_cache(maxsize=16)
def _grid_steering_rows(oversampling: int, num_elements: int, spacing: float) -> np.ndarray:
    """Rows a(phi_j)^H of the grid steering stack, shape (grid, M). Cached."""
    geom = ArrayGeometry(num_elements, spacing)
    grid = AngularGrid(oversampling, num_elements)
    rows = steering_matrix(geom, grid.angles, "arrival_cos_pos").conj().T
    rows.flags.writeable = False
    return rows


def grid_steering_rows(grid: AngularGrid, element_spacing: float = 0.5) -> np.ndarray:
    """Surface steering vectors at every grid angle, conjugated and stacked as rows."""
    return _grid_steering_rows(grid.oversampling, grid.num_ris_elements, element_spacing)


def _as_precoder(precoder) -> np.ndarray:
    w = np.asarray(precoder, dtype=complex)
    if w.ndim == 1:
        w = w[:, None]
    if w.ndim != 2:
        raise ValueError("precoder must be a vector or a matrix")
    return w


def _check_unit_modulus(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=complex)
    if theta.ndim != 1:
        raise ValueError("phase vector must be 1-D")
    if np.any(np.abs(np.abs(theta) - 1.0) > UNIT_MODULUS_ATOL):
        raise ValueError("phase coefficients must have unit modulus")
    return theta


def path_excitations(stats: ChannelStats, precoder) -> np.ndarray:
    """Nonnegative per-path factors chi_l = P_l * ||W^H b_l||^2.

    These scalars weight the per-path beams whose superposition forms the
    average pattern.
    """
    w = _as_precoder(precoder)
    bw = stats.bs_departure.conj().T @ w
    return stats.path_powers * np.sum(np.abs(bw) ** 2, axis=1)


def _pattern_unchecked(theta: np.ndarray, precoder, stats: ChannelStats,
                       grid: AngularGrid, element_spacing: float) -> np.ndarray:
    """Pattern quadratic form without the unit-modulus check; the synthesis
    gradients are derived for free complex theta, so their finite-difference
    validation needs this unconstrained extension."""
    m = stats.num_ris_elements
    rows = grid_steering_rows(grid, element_spacing)
    beams = (rows * theta[None, :]) @ stats.ris_arrival
    chi = path_excitations(stats, precoder)
    return (m * m * stats.num_bs_antennas) * (np.abs(beams) ** 2 @ chi)


def average_power_pattern(theta, precoder, stats: ChannelStats, grid: AngularGrid,
                          element_spacing: float = 0.5) -> np.ndarray:
    """Average reflected power at every grid angle (independent of subcarrier)."""
    theta = _check_unit_modulus(theta)
    m = stats.num_ris_elements
    if theta.shape != (m,):
        raise ValueError("phase vector length must match the surface size")
    if grid.num_ris_elements != m:
        raise ValueError("grid was built for a different surface size")
    return _pattern_unchecked(theta, precoder, stats, grid, element_spacing)


def normalized_pattern(theta, precoder, stats: ChannelStats, grid: AngularGrid,
                       element_spacing: float = 0.5) -> np.ndarray:
    """Average pattern of the Frobenius-normalized precoder; invariant under
    any nonzero rescaling of the precoder."""
    w = _as_precoder(precoder)
    wnorm2 = float(np.vdot(w, w).real)
    if wnorm2 == 0.0:
        raise ValueError("precoder must be nonzero")
    return average_power_pattern(theta, w, stats, grid, element_spacing) / wnorm2


def pattern_cost(theta, precoder, target_values: np.ndarray, target: TargetPattern,
                 weight_config: WeightConfig, stats: ChannelStats, grid: AngularGrid,
                 weights: np.ndarray | None = None,
                 element_spacing: float = 0.5) -> float:
    """Weighted squared distance between the normalized pattern and the target.

    Weights are recomputed from the current pattern unless a fixed vector is
    supplied (the gradient formulas differentiate with weights held fixed).
    """
    ybar = normalized_pattern(theta, precoder, stats, grid, element_spacing)
    f = np.asarray(target_values, dtype=float)
    if weights is None:
        weights = compute_weights(ybar, f, target, weight_config, grid.angles)
    return float(np.sum(weights * (f - ybar) ** 2))


def pattern_to_csv(path, angles_rad: np.ndarray, pattern: np.ndarray,
                   target_values: np.ndarray) -> None:
    """Write the pattern export: angle_deg, gain_linear, gain_db, target_linear, target_db."""
    floor = 1e-30
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "gain_linear", "gain_db", "target_linear", "target_db"])
        for a, y, f in zip(angles_rad, pattern, target_values):
            writer.writerow([f"{np.degrees(a):.12g}", f"{y:.12g}",
                             f"{10.0 * np.log10(max(y, floor)):.12g}",
                             f"{f:.12g}", f"{10.0 * np.log10(max(f, floor)):.12g}"])
