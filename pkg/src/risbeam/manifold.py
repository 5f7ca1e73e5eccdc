"""Optimization on the product of unit circles (one circle per surface element).

The feasible set {theta : |theta_m| = 1} is treated as a Riemannian
submanifold of C^M with the real inner product Re[x^H y]. Tangent vectors at
theta satisfy Re[x o conj(theta)] = 0 entrywise; the retraction normalizes
each entry back to the circle. A Polak-Ribiere conjugate-gradient iteration
with Armijo backtracking searches the manifold; the same engine with identity
projection/retraction doubles as the plain Euclidean CG used for the precoder
subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

RETRACTION_EPS = 1e-14


class RetractionError(ValueError):
    """An entry is too close to the origin to be normalized onto its circle."""


class LineSearchError(RuntimeError):
    """Armijo backtracking exhausted its halving budget without acceptance."""


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of entrywise Re[conj(a) * b]; the manifold's ambient inner product."""
    return float(np.vdot(a, b).real)


def project_tangent(base: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the tangent space at ``base``:
    d - Re[d o conj(base)] o base."""
    base = np.asarray(base)
    vector = np.asarray(vector)
    if vector.shape != base.shape:
        raise ValueError("vector and base point must have the same shape")
    return vector - (vector * base.conj()).real * base


def retract(point: np.ndarray) -> np.ndarray:
    """Entrywise normalization x_m / |x_m| back onto the manifold."""
    mags = np.abs(point)
    if np.any(mags < RETRACTION_EPS):
        raise RetractionError("cannot retract a vector with a near-zero entry")
    return point / mags


def riemannian_gradient(base: np.ndarray, euclidean_grad: np.ndarray) -> np.ndarray:
    """Riemannian gradient: tangent projection of the Euclidean gradient."""
    return project_tangent(base, euclidean_grad)


def random_unit_modulus(size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. phases on the unit circle."""
    return np.exp(2j * np.pi * rng.uniform(size=size))


def is_unit_modulus(theta: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(np.abs(theta) - 1.0) <= atol))


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking constants: step q * contraction^n, sufficient-decrease
    factor, and the halving budget."""

    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_halvings: int = 50

    def __post_init__(self) -> None:
        if self.initial_step <= 0:
            raise ValueError("initial step must be positive")
        if not 0.0 < self.contraction < 1.0:
            raise ValueError("contraction factor must lie in (0, 1)")
        if not 0.0 < self.sufficient_decrease < 1.0:
            raise ValueError("sufficient-decrease factor must lie in (0, 1)")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be nonnegative")


class ArmijoResult(NamedTuple):
    step: float
    point: np.ndarray
    cost: float


def armijo_search(cost: Callable[[np.ndarray], float], base: np.ndarray,
                  direction: np.ndarray, grad: np.ndarray,
                  params: ArmijoParams = ArmijoParams(),
                  cost_at_base: float | None = None,
                  retraction: Callable[[np.ndarray], np.ndarray] = retract) -> ArmijoResult:
    """Smallest-n Armijo backtracking along a descent direction.

    Accepts the first step q*l^n (n = 0, 1, ...) whose retracted point drops
    the cost by at least the sufficient-decrease fraction of the predicted
    linear decrease. Trial points that cannot be retracted count as rejected
    steps. Raises LineSearchError when the halving budget runs out and
    ValueError when handed an ascent direction.
    """
    slope = real_inner(grad, direction)
    if slope > 0.0:
        raise ValueError("armijo_search needs a descent direction (got ascent)")
    j0 = cost(base) if cost_at_base is None else cost_at_base
    step = params.initial_step
    for _ in range(params.max_halvings + 1):
        try:
            candidate = retraction(base + step * direction)
        except RetractionError:
            step *= params.contraction
            continue
        jc = cost(candidate)
        if j0 - jc >= -params.sufficient_decrease * step * slope:
            return ArmijoResult(step=step, point=candidate, cost=jc)
        step *= params.contraction
    raise LineSearchError(f"no Armijo step within {params.max_halvings} halvings")


@dataclass
class CgResult:
    """Outcome of a conjugate-gradient run. ``cost_trace`` holds the cost at
    the start point and after every accepted step (nonincreasing)."""

    point: np.ndarray
    cost_trace: np.ndarray
    status: str
    iterations: int
    grad_norm: float

    @property
    def converged(self) -> bool:
        return self.status in ("gradient_tolerance", "cost_tolerance")

    @property
    def final_cost(self) -> float:
        return float(self.cost_trace[-1])


def _cg_minimize(cost, euclidean_grad, x0, project, retraction, armijo,
                 grad_tol, cost_tol, max_iters) -> CgResult:
    """Polak-Ribiere(+) CG shared by the manifold and Euclidean solvers.

    The previous gradient and search direction are transported by the same
    tangent projection before entering the Polak-Ribiere parameter, which is
    clamped at zero; any non-descent direction triggers a reset to steepest
    descent.
    """
    x = np.asarray(x0, dtype=complex)
    g = project(x, euclidean_grad(x))
    d = -g
    j = float(cost(x))
    trace = [j]
    status = "max_iterations"
    gnorm = float(np.linalg.norm(g))
    it = 0
    for it in range(1, max_iters + 1):
        if gnorm < grad_tol:
            status = "gradient_tolerance"
            it -= 1
            break
        if real_inner(g, d) >= 0.0 and np.any(d != 0):
            d = -g
        try:
            accepted = armijo_search(cost, x, d, g, armijo, cost_at_base=j,
                                     retraction=retraction)
        except LineSearchError:
            if np.array_equal(d, -g):
                status = "line_search_stalled"
                it -= 1
                break
            d = -g
            try:
                accepted = armijo_search(cost, x, d, g, armijo, cost_at_base=j,
                                         retraction=retraction)
            except LineSearchError:
                status = "line_search_stalled"
                it -= 1
                break
        x_new, j_new = accepted.point, accepted.cost
        g_new = project(x_new, euclidean_grad(x_new))
        beta = max(0.0, real_inner(g_new, g_new - project(x_new, g)) / (gnorm * gnorm))
        d = -g_new + beta * project(x_new, d)
        rel_drop = (j - j_new) / max(abs(j), np.finfo(float).tiny)
        x, g, j = x_new, g_new, j_new
        gnorm = float(np.linalg.norm(g))
        trace.append(j)
        if rel_drop < cost_tol:
            status = "cost_tolerance"
            break
    return CgResult(point=x, cost_trace=np.asarray(trace), status=status,
                    iterations=it, grad_norm=gnorm)


def rcg_minimize(cost: Callable[[np.ndarray], float],
                 euclidean_grad: Callable[[np.ndarray], np.ndarray],
                 theta0: np.ndarray,
                 armijo: ArmijoParams = ArmijoParams(),
                 grad_tol: float = 1e-6,
                 cost_tol: float = 1e-8,
                 max_iters: int = 500) -> CgResult:
    """Riemannian CG over the unit-modulus phases.

    ``euclidean_grad`` must return the conjugate-coordinate (Wirtinger)
    gradient of the real cost; it is projected to the tangent space at every
    iterate. Terminates on small Riemannian gradient norm, small relative
    cost drop, or the iteration cap. Line-search stalls end the run with the
    best point so far and status "line_search_stalled".
    """
    theta0 = np.asarray(theta0, dtype=complex)
    if not is_unit_modulus(theta0, atol=1e-9):
        raise ValueError("theta0 must lie on the unit-modulus manifold")
    return _cg_minimize(cost, euclidean_grad, theta0, project_tangent, retract,
                        armijo, grad_tol, cost_tol, max_iters)


def _euclid_project(_x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return v


def _euclid_retract(x: np.ndarray) -> np.ndarray:
    return x


def euclidean_cg_minimize(cost, euclidean_grad, x0,
                          armijo: ArmijoParams = ArmijoParams(),
                          grad_tol: float = 1e-6,
                          cost_tol: float = 1e-8,
                          max_iters: int = 500) -> CgResult:
    """Unconstrained complex CG with the same Armijo rule (identity retraction)."""
    return _cg_minimize(cost, euclidean_grad, x0, _euclid_project, _euclid_retract,
                        armijo, grad_tol, cost_tol, max_iters)
