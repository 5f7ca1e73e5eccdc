"""Joint synthesis of the surface phases and the transmit precoder.

The weighted pattern-fit cost is minimized by alternating two conjugate
gradient solvers: a plain Euclidean CG over the precoder and a Riemannian CG
over the unit-modulus phases, each fed its analytic conjugate-coordinate
gradient. Weights are refreshed from the current pattern inside every cost
evaluation but held fixed inside the gradient formulas. Also provides the
closed-form prediction of how a synthesized flat-top region shifts when the
incident angle changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats
from .manifold import (ArmijoParams, CgResult, euclidean_cg_minimize,
                       random_unit_modulus, rcg_minimize)
from .pattern import (AngularGrid, TargetPattern, WeightConfig, _as_precoder,
                      compute_weights, grid_steering_rows, normalized_pattern,
                      pattern_cost, region_masks, target_on_grid)


def _pattern_scale(stats: ChannelStats) -> float:
    m = stats.num_ris_elements
    return float(m * m * stats.num_bs_antennas)


def precoder_gradient(precoder, theta, stats: ChannelStats, target_values: np.ndarray,
                      weights: np.ndarray, grid: AngularGrid,
                      element_spacing: float = 0.5) -> np.ndarray:
    """Conjugate-coordinate gradient of the fixed-weight cost in the precoder.

    Two terms: a radial component along W from the pattern normalization and
    a term routing the weighted pattern residual back through the transmit
    steering stack.
    """
    w = _as_precoder(precoder)
    theta = np.asarray(theta, dtype=complex)
    f = np.asarray(target_values, dtype=float)
    rows = grid_steering_rows(grid, element_spacing)
    beams = (rows * theta[None, :]) @ stats.ris_arrival
    bw = stats.bs_departure.conj().T @ w
    wnorm2 = float(np.vdot(w, w).real)
    if wnorm2 == 0.0:
        raise ValueError("precoder must be nonzero")
    scale = _pattern_scale(stats)
    ybar = scale * (np.abs(beams) ** 2 @ (stats.path_powers * np.sum(np.abs(bw) ** 2, axis=1))) / wnorm2
    radial = (2.0 / wnorm2) * float(np.sum(weights * ybar * (f - ybar))) * w
    per_path = np.abs(beams) ** 2
    d = per_path.T @ (weights * (ybar - f))
    routed = (2.0 * scale / wnorm2) * (stats.bs_departure @ ((stats.path_powers * d)[:, None] * bw))
    return radial + routed


def phase_gradient(theta, precoder, stats: ChannelStats, target_values: np.ndarray,
                   weights: np.ndarray, grid: AngularGrid,
                   element_spacing: float = 0.5) -> np.ndarray:
    """Conjugate-coordinate gradient of the fixed-weight cost in the phases.

    Equals the diagonal of the unconstrained full-matrix gradient of the
    pattern quadratic form, which is what makes optimizing only the diagonal
    phase matrix legitimate.
    """
    theta = np.asarray(theta, dtype=complex)
    w = _as_precoder(precoder)
    f = np.asarray(target_values, dtype=float)
    rows = grid_steering_rows(grid, element_spacing)
    a = stats.ris_arrival
    beams = (rows * theta[None, :]) @ a
    bw = stats.bs_departure.conj().T @ w
    chi = stats.path_powers * np.sum(np.abs(bw) ** 2, axis=1)
    wnorm2 = float(np.vdot(w, w).real)
    if wnorm2 == 0.0:
        raise ValueError("precoder must be nonzero")
    scale = _pattern_scale(stats)
    ybar = scale * (np.abs(beams) ** 2 @ chi) / wnorm2
    u = weights * (ybar - f)
    routed = rows.conj().T @ ((u[:, None] * beams) * chi[None, :])
    return (2.0 * scale / wnorm2) * np.sum(routed * a.conj(), axis=1)


def optimize_precoder(precoder0, theta, stats: ChannelStats, target: TargetPattern,
                      grid: AngularGrid, weight_config: WeightConfig = WeightConfig(),
                      armijo: ArmijoParams = ArmijoParams(),
                      grad_tol: float = 1e-6, cost_tol: float = 1e-8,
                      max_iters: int = 500, element_spacing: float = 0.5) -> CgResult:
    """Euclidean CG over the precoder with the phases held fixed.

    The cost is invariant under rescaling of the precoder, so the returned
    matrix is renormalized to unit Frobenius norm for free.
    """
    theta = np.asarray(theta, dtype=complex)
    w0 = _as_precoder(precoder0)
    if float(np.vdot(w0, w0).real) == 0.0:
        raise ValueError("starting precoder must be nonzero")
    f = target_on_grid(target, grid)
    angles = grid.angles
    rows = grid_steering_rows(grid, element_spacing)
    beams_abs2 = np.abs((rows * theta[None, :]) @ stats.ris_arrival) ** 2
    b = stats.bs_departure
    powers = stats.path_powers
    scale = _pattern_scale(stats)

    def ybar_of(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        bw = b.conj().T @ w
        chi = powers * np.sum(np.abs(bw) ** 2, axis=1)
        wnorm2 = float(np.vdot(w, w).real)
        return scale * (beams_abs2 @ chi) / wnorm2, bw, wnorm2

    def cost(w: np.ndarray) -> float:
        ybar, _, _ = ybar_of(w)
        wts = compute_weights(ybar, f, target, weight_config, angles)
        return float(np.sum(wts * (f - ybar) ** 2))

    def grad(w: np.ndarray) -> np.ndarray:
        ybar, bw, wnorm2 = ybar_of(w)
        wts = compute_weights(ybar, f, target, weight_config, angles)
        radial = (2.0 / wnorm2) * float(np.sum(wts * ybar * (f - ybar))) * w
        d = beams_abs2.T @ (wts * (ybar - f))
        return radial + (2.0 * scale / wnorm2) * (b @ ((powers * d)[:, None] * bw))

    result = euclidean_cg_minimize(cost, grad, w0, armijo, grad_tol, cost_tol, max_iters)
    result.point = result.point / np.linalg.norm(result.point)
    return result


@dataclass
class SynthesisResult:
    """Winning multi-start design plus its diagnostics.

    ``outer_cost_trace`` records the cost after every alternation round;
    ``inner_cost_traces`` the per-subproblem traces in execution order
    (precoder step, phase step, precoder step, ...).
    """

    theta: np.ndarray
    precoder: np.ndarray
    outer_cost_trace: np.ndarray
    inner_cost_traces: tuple
    achieved_pattern: np.ndarray
    flat_top_ripple_db: float
    grid: AngularGrid
    target_values: np.ndarray
    start_index: int
    final_cost: float

    def concatenated_trace(self) -> np.ndarray:
        """All inner traces joined in execution order (nonincreasing)."""
        if not self.inner_cost_traces:
            return self.outer_cost_trace
        return np.concatenate(self.inner_cost_traces)


def flat_top_ripple_db(pattern: np.ndarray, target: TargetPattern,
                       angles: np.ndarray) -> float:
    """Max-to-min spread, in dB, of the pattern over the flat-top region."""
    flat, _, _ = region_masks(target, angles)
    vals = np.asarray(pattern, dtype=float)[flat]
    if vals.size == 0:
        raise ValueError("no grid samples fall inside the flat-top region")
    lo = float(vals.min())
    if lo <= 0.0:
        return math.inf
    return 10.0 * math.log10(float(vals.max()) / lo)


def synthesize(target: TargetPattern, stats: ChannelStats, num_streams: int,
               oversampling: int = 10, weight_config: WeightConfig = WeightConfig(),
               armijo: ArmijoParams = ArmijoParams(),
               seed: int | np.random.SeedSequence = 0,
               num_starts: int = 3, inner_max_iters: int = 500,
               inner_grad_tol: float = 1e-6, inner_cost_tol: float = 1e-8,
               outer_max_iters: int = 50, outer_tol: float = 1e-4,
               element_spacing: float = 0.5) -> SynthesisResult:
    """Alternating pattern synthesis, best of ``num_starts`` random starts.

    Each start draws uniform random phases and a Gaussian precoder from a
    child seed of ``seed``, then alternates the precoder and phase solvers
    until the relative cost drop per round falls below ``outer_tol`` or the
    round cap is hit. The start with the lowest final cost wins; ties go to
    the lowest start index.
    """
    m = stats.num_ris_elements
    grid = AngularGrid(oversampling, m)
    if 2.0 * target.inner_half_width < grid.spacing:
        raise ValueError("flat-top region narrower than one grid bin; "
                         "increase the beamwidth or the oversampling")
    if num_starts < 1:
        raise ValueError("need at least one start")
    f = target_on_grid(target, grid)
    n_bs = stats.num_bs_antennas

    seed_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    best: SynthesisResult | None = None
    for start, child in enumerate(seed_seq.spawn(num_starts)):
        rng = np.random.default_rng(child)
        theta = random_unit_modulus(m, rng)
        w = rng.standard_normal((n_bs, num_streams)) + 1j * rng.standard_normal((n_bs, num_streams))
        w = w / np.linalg.norm(w)

        cost_now = pattern_cost(theta, w, f, target, weight_config, stats, grid,
                                element_spacing=element_spacing)
        outer_trace = [cost_now]
        inner_traces = []
        for _ in range(outer_max_iters):
            w_step = optimize_precoder(w, theta, stats, target, grid, weight_config,
                                       armijo, inner_grad_tol, inner_cost_tol,
                                       inner_max_iters, element_spacing)
            w = w_step.point
            inner_traces.append(w_step.cost_trace)

            def cost_theta(th: np.ndarray, _w=w) -> float:
                return pattern_cost(th, _w, f, target, weight_config, stats, grid,
                                    element_spacing=element_spacing)

            def grad_theta(th: np.ndarray, _w=w) -> np.ndarray:
                ybar = normalized_pattern(th, _w, stats, grid, element_spacing)
                wts = compute_weights(ybar, f, target, weight_config, grid.angles)
                return phase_gradient(th, _w, stats, f, wts, grid, element_spacing)

            t_step = rcg_minimize(cost_theta, grad_theta, theta, armijo,
                                  inner_grad_tol, inner_cost_tol, inner_max_iters)
            theta = t_step.point
            inner_traces.append(t_step.cost_trace)

            cost_new = t_step.final_cost
            rel_drop = (cost_now - cost_new) / max(abs(cost_now), np.finfo(float).tiny)
            cost_now = cost_new
            outer_trace.append(cost_now)
            if rel_drop < outer_tol:
                break

        achieved = normalized_pattern(theta, w, stats, grid, element_spacing)
        candidate = SynthesisResult(
            theta=theta, precoder=w / np.linalg.norm(w),
            outer_cost_trace=np.asarray(outer_trace),
            inner_cost_traces=tuple(inner_traces),
            achieved_pattern=achieved,
            flat_top_ripple_db=flat_top_ripple_db(achieved, target, grid.angles),
            grid=grid, target_values=f, start_index=start,
            final_cost=float(cost_now),
        )
        if best is None or candidate.final_cost < best.final_cost:
            best = candidate
    return best


@dataclass(frozen=True)
class CoverageRegion:
    """Angular interval [phi_min, phi_max] within [0, pi]."""

    phi_min: float
    phi_max: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.phi_min < self.phi_max <= np.pi):
            raise ValueError("need 0 <= phi_min < phi_max <= pi")

    @property
    def width(self) -> float:
        return self.phi_max - self.phi_min


def predict_shifted_region(region: CoverageRegion, incident_from: float,
                           incident_to: float) -> CoverageRegion | None:
    """Where a flat-top beam lands when the incident angle moves.

    A surface configured to reflect an arriving wave from ``incident_from``
    onto ``region`` maps features at angle phi to the angle whose cosine is
    cos(phi) + cos(incident_from) - cos(incident_to) when re-illuminated from
    ``incident_to``. Returns ``None`` when the whole region is pushed outside
    [0, pi]. The prediction assumes the region lies in the upper half
    [pi/2, pi]; under that hypothesis a shift towards smaller angles can
    never push the lower edge past zero, and a violation raises.
    """
    if not (np.pi / 2 <= region.phi_min and region.phi_max <= np.pi):
        raise ValueError("prediction requires the region inside [pi/2, pi]")
    for name, val in (("incident_from", incident_from), ("incident_to", incident_to)):
        if not 0.0 < val < np.pi:
            raise ValueError(f"{name} must lie strictly inside (0, pi)")
    xi = math.cos(incident_from) - math.cos(incident_to)
    if xi == 0.0:
        return region
    c_lo = math.cos(region.phi_min) + xi
    c_hi = math.cos(region.phi_max) + xi
    if xi < 0.0:
        # shift towards pi; the far edge may be cut off at pi
        if c_lo <= -1.0:
            return None
        return CoverageRegion(math.acos(c_lo), math.acos(max(-1.0, c_hi)))
    # shift towards 0
    if c_hi >= 1.0:
        return None
    if c_lo > 1.0:
        raise ValueError("shift drives the lower edge past zero, outside the "
                         "prediction's hypothesis")
    return CoverageRegion(math.acos(min(1.0, c_lo)), math.acos(c_hi))


def measure_minus3db_region(angles: np.ndarray, pattern: np.ndarray) -> tuple[float, float]:
    """Edges of the contiguous -3 dB region around the pattern peak.

    Edge positions are refined by linear interpolation of the dB pattern
    between the bracketing grid samples, so the resolution is finer than one
    grid bin.
    """
    p = np.asarray(pattern, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("pattern must be a 1-D vector with at least two samples")
    if np.any(p < 0):
        raise ValueError("power pattern must be nonnegative")
    peak = int(np.argmax(p))
    floor = np.finfo(float).tiny
    db = 10.0 * np.log10(np.maximum(p, floor))
    thr = db[peak] - 3.0
    lo = peak
    while lo > 0 and db[lo - 1] >= thr:
        lo -= 1
    hi = peak
    while hi < p.size - 1 and db[hi + 1] >= thr:
        hi += 1
    if lo > 0:
        frac = (db[lo] - thr) / (db[lo] - db[lo - 1])
        lo_angle = angles[lo] - frac * (angles[lo] - angles[lo - 1])
    else:
        lo_angle = float(angles[0])
    if hi < p.size - 1:
        frac = (db[hi] - thr) / (db[hi] - db[hi + 1])
        hi_angle = angles[hi] + frac * (angles[hi + 1] - angles[hi])
    else:
        hi_angle = float(angles[-1])
    return float(lo_angle), float(hi_angle)
