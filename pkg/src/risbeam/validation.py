"""Numerical validation of the analytic gradients.

Central finite differences over the real and imaginary parts of each entry
approximate the conjugate-coordinate gradient of a real cost: for f(z) real,
grad_conj f = (df/dRe + j*df/dIm) / 2. The pattern cost is also evaluated
with a full (unstructured) phase matrix, both by finite differences and in
closed form, to check that the diagonal of the full-matrix gradient
reproduces the vector gradient used by the phase solver.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .channel import ChannelStats
from .pattern import (AngularGrid, TargetPattern, WeightConfig, _as_precoder,
                      _pattern_unchecked, compute_weights, grid_steering_rows,
                      normalized_pattern, target_on_grid)
from .synthesis import phase_gradient, precoder_gradient


def wirtinger_finite_difference(fn: Callable[[np.ndarray], float], z: np.ndarray,
                                step: float = 1e-6) -> np.ndarray:
    """Conjugate-coordinate gradient of a real-valued ``fn`` by central
    differences over the real and imaginary part of every entry."""
    z = np.asarray(z, dtype=complex)
    grad = np.zeros(z.shape, dtype=complex)
    for idx in np.ndindex(z.shape):
        parts = []
        for unit in (1.0, 1j):
            zp = z.copy()
            zm = z.copy()
            zp[idx] += step * unit
            zm[idx] -= step * unit
            parts.append((fn(zp) - fn(zm)) / (2.0 * step))
        grad[idx] = 0.5 * (parts[0] + 1j * parts[1])
    return grad


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Max-norm deviation normalized by the max-norm of the exact value."""
    exact = np.asarray(exact)
    denom = max(float(np.max(np.abs(exact))), np.finfo(float).tiny)
    return float(np.max(np.abs(np.asarray(approx) - exact))) / denom


def _full_matrix_pattern(theta_matrix: np.ndarray, precoder, stats: ChannelStats,
                         grid: AngularGrid, element_spacing: float):
    """Normalized pattern via explicit dense products (no per-path shortcut)."""
    w = _as_precoder(precoder)
    rows = grid_steering_rows(grid, element_spacing)
    bw = stats.bs_departure.conj().T @ w
    gram = bw @ bw.conj().T
    excite = np.diag(np.diag(np.diag(stats.path_powers) @ gram))
    v = stats.ris_arrival @ excite @ stats.ris_arrival.conj().T
    reflected = rows @ theta_matrix @ v @ theta_matrix.conj().T @ rows.conj().T
    m = stats.num_ris_elements
    wnorm2 = float(np.vdot(w, w).real)
    ybar = m * m * stats.num_bs_antennas * np.real(np.diag(reflected)) / wnorm2
    return ybar, rows, v, wnorm2, w


def full_matrix_pattern_cost(theta_matrix: np.ndarray, precoder, target_values: np.ndarray,
                             weights: np.ndarray, stats: ChannelStats, grid: AngularGrid,
                             element_spacing: float = 0.5) -> float:
    """Fixed-weight cost with an arbitrary full phase matrix."""
    theta_matrix = np.asarray(theta_matrix, dtype=complex)
    ybar, _, _, _, _ = _full_matrix_pattern(theta_matrix, precoder, stats, grid,
                                            element_spacing)
    f = np.asarray(target_values, dtype=float)
    return float(np.sum(np.asarray(weights, dtype=float) * (f - ybar) ** 2))


def full_matrix_phase_gradient(theta_matrix: np.ndarray, precoder,
                               target_values: np.ndarray, weights: np.ndarray,
                               stats: ChannelStats, grid: AngularGrid,
                               element_spacing: float = 0.5) -> np.ndarray:
    """Closed-form conjugate gradient of the fixed-weight cost with respect to
    an unstructured phase matrix, shape (M, M). The production phase gradient
    must equal its diagonal."""
    theta_matrix = np.asarray(theta_matrix, dtype=complex)
    ybar, rows, v, wnorm2, _ = _full_matrix_pattern(theta_matrix, precoder, stats,
                                                    grid, element_spacing)
    f = np.asarray(target_values, dtype=float)
    u = np.asarray(weights, dtype=float) * (ybar - f)
    m = stats.num_ris_elements
    scale = 2.0 * m * m * stats.num_bs_antennas / wnorm2
    return scale * (rows.conj().T * u[None, :]) @ (rows @ theta_matrix @ v)


def gradient_check(stats: ChannelStats, target: TargetPattern,
                   weight_config: WeightConfig, grid: AngularGrid,
                   theta: np.ndarray, precoder, fd_step: float = 1e-6,
                   include_full_matrix: bool = True,
                   element_spacing: float = 0.5) -> dict[str, float]:
    """Relative errors of the analytic gradients at one point.

    * ``precoder_fd`` / ``phase_fd`` -- analytic gradients against central
      finite differences of the fixed-weight cost (phases treated as free
      complex variables).
    * ``full_matrix_fd`` -- closed-form full-matrix gradient against finite
      differences over all matrix entries.
    * ``diag_extraction`` -- production phase gradient against the diagonal
      of the closed-form full-matrix gradient (pure algebra, so this should
      hold to machine precision).
    """
    theta = np.asarray(theta, dtype=complex)
    w = _as_precoder(precoder)
    f = target_on_grid(target, grid)
    ybar = normalized_pattern(theta, w, stats, grid, element_spacing)
    weights = compute_weights(ybar, f, target, weight_config, grid.angles)

    def cost_of_precoder(wc: np.ndarray) -> float:
        y = _pattern_unchecked(theta, wc, stats, grid, element_spacing)
        return float(np.sum(weights * (f - y / np.vdot(wc, wc).real) ** 2))

    def cost_of_theta(th: np.ndarray) -> float:
        y = _pattern_unchecked(th, w, stats, grid, element_spacing)
        return float(np.sum(weights * (f - y / np.vdot(w, w).real) ** 2))

    errors = {
        "precoder_fd": relative_error(
            wirtinger_finite_difference(cost_of_precoder, w, fd_step),
            precoder_gradient(w, theta, stats, f, weights, grid, element_spacing)),
        "phase_fd": relative_error(
            wirtinger_finite_difference(cost_of_theta, theta, fd_step),
            phase_gradient(theta, w, stats, f, weights, grid, element_spacing)),
    }
    if include_full_matrix:
        def cost_of_matrix(tm: np.ndarray) -> float:
            return full_matrix_pattern_cost(tm, w, f, weights, stats, grid,
                                            element_spacing)

        tm0 = np.diag(theta)
        analytic_full = full_matrix_phase_gradient(tm0, w, f, weights, stats, grid,
                                                   element_spacing)
        errors["full_matrix_fd"] = relative_error(
            wirtinger_finite_difference(cost_of_matrix, tm0, fd_step), analytic_full)
        errors["diag_extraction"] = relative_error(
            np.diag(analytic_full),
            phase_gradient(theta, w, stats, f, weights, grid, element_spacing))
    return errors
