"""
Reference solvers for checking the polynomial-only solver.

Nothing here is restricted to additions and multiplications: these routines use
root finding and linear solves freely.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from src.errors import NumericalError, ValidationError
from src.penalty import PenaltySchedule
from src.quadforms import Problem, as_vector, spectral_bounds

logger = logging.getLogger(__name__)

_RTOL = 4.0 * np.finfo(float).eps


class OracleMethod(str, Enum):
    CLOSED_FORM_1D = "closed-form-1d"
    MULTIPLIER_ROOT = "multiplier-root"
    PROJECTED_GRADIENT = "projected-gradient"
    DENSE_GRID = "dense-grid"
    ROOT_FINDING_1D = "root-finding-1d"
    PENALTY_WEIGHT_ROOT = "penalty-weight-root"


@dataclass(frozen=True)
class OracleResult:
    """
    Attributes:
      x_star: The minimizer found.
      f_star: Objective value there (f for constrained problems, J_k for auxiliary ones).
      method: How it was computed.
      residual: KKT residual, gradient norm or grid resolution, depending on the method.
    """

    x_star: NDArray[np.float64]
    f_star: float
    method: OracleMethod
    residual: float


def project(p: Problem, z: ArrayLike) -> NDArray[np.float64]:
    """
    Euclidean projection of z onto the constraint set.

    In the eigenbasis of A the projection is v + (y_i / (1 + mu w_i)) for the multiplier
    mu >= 0 that puts the point on the boundary; mu is found by bracketing root finding.
    """
    z = as_vector(z, "z", p.n)
    e = p.constraint
    w, V = np.linalg.eigh(e.A)
    y = V.T @ (z - e.v)
    if float(w @ (y * y)) <= 1.0:
        return z

    def excess(mu: float) -> float:
        s = y / (1.0 + mu * w)
        return float(w @ (s * s)) - 1.0

    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
    mu = brentq(excess, 0.0, hi, xtol=1e-300, rtol=_RTOL, maxiter=500)
    return e.v + V @ (y / (1.0 + mu * w))


def _closed_form_1d(p: Problem) -> OracleResult:
    Q, q = float(p.cost.Q[0, 0]), float(p.cost.q[0])
    v, half = float(p.constraint.v[0]), float(p.constraint.inv_sqrt[0, 0])
    lo, hi = v - half, v + half
    if Q > 0.0:
        x = min(max(-q / Q, lo), hi)
    elif q > 0.0:
        x = lo
    elif q < 0.0:
        x = hi
    else:
        x = v
    x_star = np.array([x])
    grad = Q * x + q
    # Stationary inside, or the gradient points into the interval at an endpoint.
    residual = abs(grad) if lo < x < hi else max(0.0, -grad if x == lo else grad)
    return OracleResult(x_star, p.eval_f(x_star), OracleMethod.CLOSED_FORM_1D, residual)


def _shifted_minimizer(p: Problem, s: float) -> NDArray[np.float64]:
    """Minimizer of f + s g, the solution of (Q + 2sA) x = -q + 2sAv."""
    A = p.constraint.A
    return np.linalg.solve(p.cost.Q + 2.0 * s * A, -p.cost.q + 2.0 * s * (A @ p.constraint.v))


def _multiplier_root(p: Problem, tol: float) -> OracleResult:
    Q, q = p.cost.Q, p.cost.q
    A, v = p.constraint.A, p.constraint.v
    q_bounds = spectral_bounds(Q)
    scale = 1.0 + float(np.linalg.norm(q)) + q_bounds.sigma_max

    def x_of(lam: float) -> NDArray[np.float64]:
        return _shifted_minimizer(p, lam)

    def kkt(x: NDArray[np.float64], lam: float) -> float:
        return float(np.linalg.norm(Q @ x + q + 2.0 * lam * (A @ (x - v))))

    if q_bounds.sigma_min > 1e-12 * q_bounds.sigma_max:
        x0 = np.linalg.solve(Q, -q)
        if p.eval_g(x0) <= 1.0:
            return OracleResult(x0, p.eval_f(x0), OracleMethod.MULTIPLIER_ROOT, kkt(x0, 0.0))

    def excess(lam: float) -> float:
        return p.eval_g(x_of(lam)) - 1.0

    lam_lo = 1e-14 * scale / spectral_bounds(A).sigma_max
    if excess(lam_lo) <= 0.0:
        # Singular Q whose unconstrained minimizers meet the set; x(lam) tends to the one closest to v.
        x = x_of(lam_lo)
        return OracleResult(x, p.eval_f(x), OracleMethod.MULTIPLIER_ROOT, float(np.linalg.norm(Q @ x + q)))
    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e30:
            raise NumericalError("no Lagrange multiplier bracket found")
    lam = brentq(excess, lam_lo, hi, xtol=1e-300, rtol=_RTOL, maxiter=500)
    x = x_of(lam)
    residual = kkt(x, lam)
    if residual > tol * scale:
        raise NumericalError(f"KKT residual {residual:.3e} above tolerance")
    return OracleResult(x, p.eval_f(x), OracleMethod.MULTIPLIER_ROOT, residual)


def _projected_gradient(p: Problem, tol: float, max_iter: int) -> OracleResult:
    sigma = spectral_bounds(p.cost.Q).sigma_max
    if sigma > 0.0:
        step = 1.0 / sigma
    else:
        # Linear cost: move at most one semi-axis per step.
        step = float(np.max(np.diag(p.constraint.inv_sqrt))) / max(float(np.linalg.norm(p.cost.q)), 1e-300)
    x = p.constraint.v.copy()
    for it in range(max_iter):
        x_next = project(p, x - step * p.grad_f(x))
        residual = float(np.linalg.norm(x_next - x)) / step
        x = x_next
        if residual <= tol:
            logger.debug("projected gradient converged after %d iterations", it + 1)
            return OracleResult(x, p.eval_f(x), OracleMethod.PROJECTED_GRADIENT, residual)
    raise NumericalError(f"projected gradient did not reach {tol:g} in {max_iter} iterations")


def _dense_grid(p: Problem, resolution: int) -> OracleResult:
    if p.n > 2:
        raise ValidationError("method", "dense grid search supports n <= 2")
    t = np.linspace(-1.0, 1.0, resolution)
    if p.n == 1:
        U = t[:, None]
    else:
        g1, g2 = np.meshgrid(t, t)
        U = np.column_stack([g1.ravel(), g2.ravel()])
        U = U[np.einsum("ij,ij->i", U, U) <= 1.0]
    X = p.constraint.v + U @ p.constraint.inv_sqrt.T
    values = 0.5 * np.einsum("ij,jk,ik->i", X, p.cost.Q, X) + X @ p.cost.q
    best = int(np.argmin(values))
    spacing = 2.0 / (resolution - 1) * float(np.max(np.diag(p.constraint.inv_sqrt)))
    return OracleResult(X[best].copy(), float(values[best]), OracleMethod.DENSE_GRID, spacing)


def solve_constrained(
    p: Problem,
    tol: float = 1e-10,
    method: OracleMethod | None = None,
    max_iter: int = 100000,
    resolution: int = 401,
) -> OracleResult:
    """
    A minimizer of f over the constraint set.

    Args:
      p: Problem.
      tol: KKT or gradient-mapping tolerance.
      method: CLOSED_FORM_1D (default for n = 1), MULTIPLIER_ROOT (default otherwise),
        PROJECTED_GRADIENT or DENSE_GRID.
      max_iter: Iteration cap of the projected gradient method.
      resolution: Points per axis of the dense grid.

    Raises:
      NumericalError: if the chosen method does not converge.
    """
    if not tol > 0.0:
        raise ValidationError("tol", f"must be > 0, got {tol}")
    if method is None:
        method = OracleMethod.CLOSED_FORM_1D if p.n == 1 else OracleMethod.MULTIPLIER_ROOT
    if method is OracleMethod.CLOSED_FORM_1D:
        if p.n != 1:
            raise ValidationError("method", "the closed form needs n = 1")
        return _closed_form_1d(p)
    if method is OracleMethod.MULTIPLIER_ROOT:
        return _multiplier_root(p, tol)
    if method is OracleMethod.PROJECTED_GRADIENT:
        return _projected_gradient(p, tol, max_iter)
    if method is OracleMethod.DENSE_GRID:
        return _dense_grid(p, resolution)
    raise ValidationError("method", f"{method.value} does not solve constrained problems")


def _root_1d(schedule: PenaltySchedule, k: int) -> OracleResult:
    p = schedule.problem
    v, half = float(p.constraint.v[0]), float(p.constraint.inv_sqrt[0, 0])

    def slope(x: float) -> float:
        return float(schedule.grad_J(k, [x])[0])

    lo, hi = v - half, v + half
    for _ in range(200):
        if slope(lo) <= 0.0:
            break
        lo = v - 2.0 * (v - lo)
    for _ in range(200):
        if slope(hi) >= 0.0:
            break
        hi = v + 2.0 * (hi - v)
    if not (slope(lo) <= 0.0 <= slope(hi)):
        raise NumericalError(f"could not bracket the minimizer of J_{k}")
    x = brentq(slope, lo, hi, xtol=1e-300, rtol=_RTOL, maxiter=500)
    x_star = np.array([x])
    return OracleResult(x_star, schedule.eval_J(k, x_star), OracleMethod.ROOT_FINDING_1D, abs(slope(x)))


def _penalty_weight_root(schedule: PenaltySchedule, k: int, tol: float) -> OracleResult:
    """
    x_k* solves grad f + s grad g = 0 with s = m g(x)^(k-1), so it is the minimizer of
    f + s g at the weight s where both agree. The mismatch
    log s - log m - (k-1) log g(x(s)) increases with s and is solved on a log scale.
    """
    p, m = schedule.problem, schedule.m
    if m == 0.0:
        x = np.linalg.solve(p.cost.Q, -p.cost.q)
    elif k == 1:
        x = _shifted_minimizer(p, m)
    else:

        def mismatch(t: float) -> float:
            g = p.eval_g(_shifted_minimizer(p, math.exp(t)))
            return math.inf if g == 0.0 else t - math.log(m) - (k - 1) * math.log(g)

        t_lo = t_hi = math.log(m)
        while mismatch(t_lo) > 0.0 and t_lo > -700.0:
            t_lo -= 1.0
        while mismatch(t_hi) < 0.0:
            t_hi += 1.0
            if t_hi > 700.0:
                raise NumericalError(f"could not bracket the penalty weight of J_{k}")
        if mismatch(t_lo) > 0.0:
            # The weight vanishes: x_k* is an unconstrained minimizer of f.
            x = _shifted_minimizer(p, math.exp(t_lo))
        else:
            t = brentq(mismatch, t_lo, t_hi, xtol=1e-15, rtol=_RTOL, maxiter=500)
            x = _shifted_minimizer(p, math.exp(t))
    residual = float(np.linalg.norm(schedule.grad_J(k, x)))
    if residual > tol * (1.0 + float(np.linalg.norm(p.grad_f(x)))):
        raise NumericalError(f"|grad J_{k}| = {residual:.3e} at the computed minimizer")
    return OracleResult(x, schedule.eval_J(k, x), OracleMethod.PENALTY_WEIGHT_ROOT, residual)


def solve_auxiliary(p: Problem, m: float, k: int, tol: float = 1e-9) -> OracleResult:
    """
    The unconstrained minimizer x_k* of J_k = f + m g^k / k.

    One-dimensional problems are solved by bracketing root finding on J_k', larger
    ones through the scalar penalty weight; both reach full double precision.

    Args:
      tol: Accepted |grad J_k| at the result, relative to 1 + |grad f|.

    Raises:
      ValidationError: if the minimizer is not unique (m = 0 with singular Q).
      NumericalError: on non-convergence.
    """
    if not tol > 0.0:
        raise ValidationError("tol", f"must be > 0, got {tol}")
    if k < 1:
        raise ValidationError("k", f"penalty index must be >= 1, got {k}")
    if m <= 0.0 and spectral_bounds(p.cost.Q).sigma_min <= 0.0:
        raise ValidationError("m", "a unique auxiliary minimizer needs m > 0 or Q positive definite")
    schedule = PenaltySchedule(p, m)
    if p.n == 1:
        return _root_1d(schedule, k)
    return _penalty_weight_root(schedule, k, tol)


@dataclass(frozen=True)
class AuxiliarySequence:
    """
    Attributes:
      frame: Columns k, x[0..n-1], g, f, J, distance (to x_star).
      x_star: Constrained minimizer from solve_constrained.
      contained: Every x_k* satisfies g <= 1 + tol.
      approaching: The last x_k* is no farther from x_star than the first.
    """

    frame: pd.DataFrame
    x_star: NDArray[np.float64]
    contained: bool
    approaching: bool


def auxiliary_sequence_report(p: Problem, m: float, k_max: int, tol: float = 1e-8) -> AuxiliarySequence:
    if k_max < 1:
        raise ValidationError("k_max", f"must be >= 1, got {k_max}")
    x_star = solve_constrained(p).x_star
    schedule = PenaltySchedule(p, m)
    rows = []
    for k in range(1, k_max + 1):
        x = solve_auxiliary(p, m, k).x_star
        rows.append(
            [k, *x.tolist(), p.eval_g(x), p.eval_f(x), schedule.eval_J(k, x),
             float(np.linalg.norm(x - x_star))]
        )
    columns = ["k", *[f"x[{i}]" for i in range(p.n)], "g", "f", "J", "distance"]
    frame = pd.DataFrame(rows, columns=columns)
    contained = bool((frame["g"] <= 1.0 + tol).all())
    distance = frame["distance"].to_numpy()
    approaching = bool(distance[-1] <= distance[0] + tol)
    if not contained:
        logger.warning("auxiliary minimizers leave the constraint set; m may be below m_min")
    return AuxiliarySequence(frame=frame, x_star=x_star, contained=contained, approaching=approaching)
