"""Geometric multipath mmWave channel model for uniform linear arrays.

Channels are sums of discrete plane-wave paths. Each path carries a complex
gain, an arrival angle, a departure angle, and an integer delay tap; the
frequency response at OFDM subcarrier k follows by an N_c-point DFT of the
tapped time-domain impulse response, which reduces to a per-path phase ramp
exp(-2j*pi*k*tap/N_c) on the gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

SteeringConvention = Literal["arrival_cos_neg", "arrival_cos_pos", "departure_sin_neg"]

# (sign of the phase ramp, angle map) per convention
_CONVENTIONS = {
    "arrival_cos_neg": (-1.0, np.cos),
    "arrival_cos_pos": (+1.0, np.cos),
    "departure_sin_neg": (-1.0, np.sin),
}


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: element count and spacing in wavelengths."""

    num_elements: int
    element_spacing_over_wavelength: float = 0.5

    def __post_init__(self) -> None:
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise ValueError("num_elements must be a positive integer")
        s = self.element_spacing_over_wavelength
        if not (math.isfinite(s) and s > 0):
            raise ValueError("element spacing must be positive and finite")


def steering_vector(geometry: ArrayGeometry, angle: float,
                    convention: SteeringConvention) -> np.ndarray:
    """Unit-norm array response vector of a plane wave at ``angle`` (radians).

    Entry m has phase ``sign * 2*pi*m*(spacing/wavelength) * trig(angle)``
    where sign/trig are fixed by the convention:

    * ``arrival_cos_neg``   -- -cos ramp (wave impinging on the reflecting array)
    * ``arrival_cos_pos``   -- +cos ramp (wave leaving the reflecting array)
    * ``departure_sin_neg`` -- -sin ramp (transmit/receive terminals)

    All entries have magnitude 1/sqrt(num_elements) so the vector has unit
    2-norm.
    """
    if not np.all(np.isfinite(angle)):
        raise ValueError("steering angle must be finite")
    try:
        sign, trig = _CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown steering convention: {convention!r}") from None
    n = geometry.num_elements
    ramp = sign * 2.0 * np.pi * geometry.element_spacing_over_wavelength * trig(angle)
    return np.exp(1j * ramp * np.arange(n)) / np.sqrt(n)


def steering_matrix(geometry: ArrayGeometry, angles: np.ndarray,
                    convention: SteeringConvention) -> np.ndarray:
    """Stack steering vectors for several angles as columns, shape (N, len(angles))."""
    angles = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(angles)):
        raise ValueError("steering angles must be finite")
    sign, trig = _CONVENTIONS[convention]
    n = geometry.num_elements
    ramp = sign * 2.0 * np.pi * geometry.element_spacing_over_wavelength * trig(angles)
    return np.exp(1j * np.outer(np.arange(n), ramp)) / np.sqrt(n)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PathSet:
    """One sampled multipath channel. Immutable after construction.

    ``mean_powers`` holds the per-path average power E{|gain|^2}; the total
    channel power is normalized so the mean powers sum to one.
    """

    gains: np.ndarray
    arrival_angles: np.ndarray
    departure_angles: np.ndarray
    tap_indices: np.ndarray
    mean_powers: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "gains", _readonly(np.asarray(self.gains, dtype=complex)))
        for name in ("arrival_angles", "departure_angles", "mean_powers"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "tap_indices", _readonly(np.asarray(self.tap_indices, dtype=int)))
        n = self.gains.shape[0]
        if n < 1:
            raise ValueError("a PathSet needs at least one path")
        for name in ("arrival_angles", "departure_angles", "tap_indices", "mean_powers"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have the same length as gains")
        if np.any(self.mean_powers < 0):
            raise ValueError("mean path powers must be nonnegative")
        if abs(float(self.mean_powers.sum()) - 1.0) > 1e-12:
            raise ValueError("mean path powers must sum to one")
        if np.any(self.tap_indices < 0):
            raise ValueError("delay tap indices must be nonnegative")

    @property
    def num_paths(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class ChannelConfig:
    """Sampling recipe for a PathSet.

    ``k_factor_db`` splits the unit channel power between a line-of-sight
    path (index 0, deterministic magnitude, uniform random phase) and the
    remaining paths; ``None`` makes every path zero-mean complex Gaussian.
    ``math.inf`` puts all power in the line-of-sight path.
    ``power_profile`` shapes the diffuse paths: "uniform" or an explicit
    list (normalized internally).
    ``angle_distribution`` is "uniform" for i.i.d. angles over [0, pi], or a
    pair (arrival_angles, departure_angles) of fixed lists.
    ``los_arrival``/``los_departure`` pin the line-of-sight angles; left
    ``None`` they are drawn like any other path.
    """

    num_paths: int
    k_factor_db: float | None = None
    power_profile: str | tuple[float, ...] = "uniform"
    delay_spread_taps: int = 0
    angle_distribution: str | tuple = "uniform"
    los_arrival: float | None = None
    los_departure: float | None = None

    def __post_init__(self) -> None:
        if int(self.num_paths) != self.num_paths or self.num_paths < 1:
            raise ValueError("num_paths must be a positive integer")
        if self.delay_spread_taps < 0:
            raise ValueError("delay_spread_taps must be nonnegative")
        if self.k_factor_db is not None:
            if math.isnan(self.k_factor_db):
                raise ValueError("k_factor_db must not be NaN")
            if self.num_paths == 1 and math.isfinite(self.k_factor_db):
                raise ValueError("a finite K-factor needs at least one diffuse path "
                                 "to carry the residual power")
        if not isinstance(self.power_profile, str):
            prof = np.asarray(self.power_profile, dtype=float)
            if np.any(prof < 0) or prof.sum() <= 0:
                raise ValueError("custom power profile must be nonnegative with positive sum")
        elif self.power_profile != "uniform":
            raise ValueError("power_profile must be 'uniform' or an explicit list")
        if isinstance(self.angle_distribution, str) and self.angle_distribution != "uniform":
            raise ValueError("angle_distribution must be 'uniform' or fixed lists")


def _nlos_profile(config: ChannelConfig, count: int) -> np.ndarray:
    if count == 0:
        return np.zeros(0)
    if isinstance(config.power_profile, str):
        return np.full(count, 1.0 / count)
    prof = np.asarray(config.power_profile, dtype=float)
    if prof.shape[0] != count:
        raise ValueError(f"power profile has {prof.shape[0]} entries, expected {count}")
    return prof / prof.sum()


def sample_paths(config: ChannelConfig, rng: int | np.random.Generator) -> PathSet:
    """Draw one PathSet. Deterministic given (config, seed).

    The random stream is consumed in a fixed, documented order so results
    reproduce across platforms:

    1. line-of-sight phase (one uniform draw, only when a K-factor is set)
    2. diffuse gains (standard normal pairs, path order)
    3. arrival angles (uniform draws for every path, then fixed values
       overwrite where configured)
    4. departure angles (same scheme)
    5. delay taps (uniform integers over {0, ..., delay_spread_taps})
    """
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    q = config.num_paths

    if config.k_factor_db is None:
        los_power = None
        powers = _nlos_profile(config, q).copy()
        # force the exact unit sum the rest of the model relies on
        powers[-1] = 1.0 - powers[:-1].sum()
        gains = np.empty(q, dtype=complex)
        noise = gen.standard_normal((q, 2))
        gains[:] = (noise[:, 0] + 1j * noise[:, 1]) * np.sqrt(powers / 2.0)
    else:
        k = np.inf if math.isinf(config.k_factor_db) else 10.0 ** (config.k_factor_db / 10.0)
        los_power = 1.0 if math.isinf(k) else k / (k + 1.0)
        residual = 0.0 if math.isinf(k) else 1.0 / (k + 1.0)
        nlos = _nlos_profile(config, q - 1) * residual
        powers = np.concatenate(([los_power], nlos))
        if q > 1:
            powers[-1] = 1.0 - powers[:-1].sum()
        else:
            powers[0] = 1.0
        gains = np.empty(q, dtype=complex)
        gains[0] = np.sqrt(powers[0]) * np.exp(2j * np.pi * gen.uniform())
        if q > 1:
            noise = gen.standard_normal((q - 1, 2))
            gains[1:] = (noise[:, 0] + 1j * noise[:, 1]) * np.sqrt(powers[1:] / 2.0)

    arrivals = gen.uniform(0.0, np.pi, size=q)
    departures = gen.uniform(0.0, np.pi, size=q)
    if not isinstance(config.angle_distribution, str):
        fixed_arr, fixed_dep = config.angle_distribution
        arrivals = np.asarray(fixed_arr, dtype=float).copy()
        departures = np.asarray(fixed_dep, dtype=float).copy()
        if arrivals.shape != (q,) or departures.shape != (q,):
            raise ValueError("fixed angle lists must match num_paths")
    if los_power is not None:
        if config.los_arrival is not None:
            arrivals[0] = config.los_arrival
        if config.los_departure is not None:
            departures[0] = config.los_departure

    taps = gen.integers(0, config.delay_spread_taps + 1, size=q)
    return PathSet(gains, arrivals, departures, taps, powers)


def freq_gain(path_gain, tap_index, subcarrier, num_subcarriers):
    """Frequency-domain gain of a path at one subcarrier.

    A path delayed by ``tap_index`` samples contributes
    ``gain * exp(-2j*pi*subcarrier*tap/num_subcarriers)``; the magnitude is
    delay-invariant. Accepts scalars or equal-length arrays.
    """
    k = np.asarray(subcarrier)
    if np.any(k < 0) or np.any(k >= num_subcarriers):
        raise ValueError("subcarrier index out of range")
    phase = -2j * np.pi * k * np.asarray(tap_index) / num_subcarriers
    return np.asarray(path_gain) * np.exp(phase)


class ChannelFactors(NamedTuple):
    """Factored frequency response: scale * arrival @ diag(tap_phases) @ diag(gains) @ departure^H."""

    arrival: np.ndarray
    tap_phases: np.ndarray
    gains: np.ndarray
    departure: np.ndarray
    scale: float


def channel_factors(paths: PathSet, tx_geometry: ArrayGeometry, rx_geometry: ArrayGeometry,
                    subcarrier: int, num_subcarriers: int,
                    rx_convention: SteeringConvention = "arrival_cos_neg",
                    tx_convention: SteeringConvention = "departure_sin_neg") -> ChannelFactors:
    if np.any(paths.tap_indices >= num_subcarriers):
        raise ValueError("delay taps must be below the subcarrier count")
    arrival = steering_matrix(rx_geometry, paths.arrival_angles, rx_convention)
    departure = steering_matrix(tx_geometry, paths.departure_angles, tx_convention)
    tap_phases = np.exp(-2j * np.pi * subcarrier * paths.tap_indices / num_subcarriers)
    scale = math.sqrt(tx_geometry.num_elements * rx_geometry.num_elements)
    return ChannelFactors(arrival, tap_phases, paths.gains.copy(), departure, scale)


def assemble_channel(paths: PathSet, tx_geometry: ArrayGeometry, rx_geometry: ArrayGeometry,
                     subcarrier: int, num_subcarriers: int,
                     rx_convention: SteeringConvention = "arrival_cos_neg",
                     tx_convention: SteeringConvention = "departure_sin_neg") -> np.ndarray:
    """Frequency-domain channel matrix at one subcarrier, shape (N_rx, N_tx).

    Equals sqrt(N_tx*N_rx) * sum over paths of the frequency gain times the
    outer product of receive and transmit steering vectors.
    """
    f = channel_factors(paths, tx_geometry, rx_geometry, subcarrier, num_subcarriers,
                        rx_convention, tx_convention)
    delta = f.gains * f.tap_phases
    return f.scale * (f.arrival * delta) @ f.departure.conj().T


def time_domain_channel(paths: PathSet, tx_geometry: ArrayGeometry, rx_geometry: ArrayGeometry,
                        num_subcarriers: int,
                        rx_convention: SteeringConvention = "arrival_cos_neg",
                        tx_convention: SteeringConvention = "departure_sin_neg") -> np.ndarray:
    """Tapped impulse response, shape (num_subcarriers, N_rx, N_tx).

    With a rectangular pulse of one sample period, each path lands entirely
    on its integer delay tap. The DFT of this array over the first axis
    reproduces ``assemble_channel`` at every subcarrier.
    """
    if np.any(paths.tap_indices >= num_subcarriers):
        raise ValueError("delay taps must be below the subcarrier count")
    arrival = steering_matrix(rx_geometry, paths.arrival_angles, rx_convention)
    departure = steering_matrix(tx_geometry, paths.departure_angles, tx_convention)
    scale = math.sqrt(tx_geometry.num_elements * rx_geometry.num_elements)
    out = np.zeros((num_subcarriers, rx_geometry.num_elements, tx_geometry.num_elements),
                   dtype=complex)
    for gain, tap, a, b in zip(paths.gains, paths.tap_indices,
                               arrival.T, departure.T):
        out[tap] += scale * gain * np.outer(a, b.conj())
    return out


def path_loss_linear(distance_m: float, exponent: float) -> float:
    """Large-scale fading factor: 30 dB at 1 m plus 10*exponent*log10(d)."""
    if not (math.isfinite(distance_m) and distance_m >= 1.0):
        raise ValueError("distance must be at least the 1 m reference")
    return 10.0 ** (-0.1 * (30.0 + 10.0 * exponent * math.log10(distance_m)))


@dataclass(frozen=True)
class ChannelStats:
    """Statistical description of the transmitter-to-surface link.

    ``ris_arrival`` stacks the surface-side steering vectors of the paths as
    columns (M, L); ``bs_departure`` the transmitter-side ones (N_BS, L);
    ``path_powers`` is the diagonal of the mean-power matrix.
    """

    ris_arrival: np.ndarray
    bs_departure: np.ndarray
    path_powers: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "ris_arrival", _readonly(np.asarray(self.ris_arrival, dtype=complex)))
        object.__setattr__(self, "bs_departure", _readonly(np.asarray(self.bs_departure, dtype=complex)))
        object.__setattr__(self, "path_powers", _readonly(np.asarray(self.path_powers, dtype=float)))
        if self.ris_arrival.ndim != 2 or self.bs_departure.ndim != 2:
            raise ValueError("steering stacks must be 2-D")
        l = self.ris_arrival.shape[1]
        if self.bs_departure.shape[1] != l or self.path_powers.shape != (l,):
            raise ValueError("inconsistent path counts in channel statistics")
        if np.any(self.path_powers < 0):
            raise ValueError("path powers must be nonnegative")

    @property
    def num_ris_elements(self) -> int:
        return self.ris_arrival.shape[0]

    @property
    def num_bs_antennas(self) -> int:
        return self.bs_departure.shape[0]

    @property
    def num_paths(self) -> int:
        return self.path_powers.shape[0]


def channel_stats(paths: PathSet, ris_geometry: ArrayGeometry,
                  bs_geometry: ArrayGeometry) -> ChannelStats:
    """Statistical CSI of a transmitter-to-surface PathSet (angles and mean powers)."""
    return ChannelStats(
        ris_arrival=steering_matrix(ris_geometry, paths.arrival_angles, "arrival_cos_neg"),
        bs_departure=steering_matrix(bs_geometry, paths.departure_angles, "departure_sin_neg"),
        path_powers=paths.mean_powers,
    )
