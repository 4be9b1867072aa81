import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.linalg import ArpackError, eigsh
from scipy.special import ndtri
from scipy.stats import qmc

from src import config
from src.errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_vector(x: ArrayLike, name: str, n: int | None = None) -> NDArray[np.float64]:
    """
    Convert x to a finite 1-D float array, optionally checking its length.
    """
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValidationError(name, f"expected a vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValidationError(name, f"expected length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(name, "entries must be finite")
    return v


def as_symmetric(M: ArrayLike, name: str) -> NDArray[np.float64]:
    """
    Convert M to a finite square float matrix and symmetrize it.

    Asymmetry up to the configured warning level is removed silently, larger
    asymmetry is logged, and asymmetry beyond the rejection level (relative to
    the largest entry) is refused.
    """
    a = np.atleast_2d(np.asarray(M, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(name, f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(name, "entries must be finite")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))), 1.0)
    if asym > config.asymmetry_reject() * scale:
        raise ValidationError(name, f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    if asym > config.asymmetry_warn():
        logger.warning("%s: symmetrizing matrix with asymmetry %.3e", name, asym)
    return (a + a.T) / 2.0


class Membership(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class SpectralBounds:
    """
    Extreme eigenvalues of a symmetric PSD matrix.

    Attributes:
      sigma_max: Largest eigenvalue.
      sigma_min: Smallest eigenvalue (clipped at 0 for round-off).
      curvature_radius: sqrt(sigma_min) / sigma_max, the radius of the largest ball
        that touches the ellipsoid {x | x^T M x <= 1} from inside at any boundary
        point. 0 when sigma_max is 0.
    """

    sigma_max: float
    sigma_min: float
    curvature_radius: float


def extreme_eigenvalue(M: NDArray[np.float64], which: str) -> float:
    """
    Largest ("LA") or smallest ("SA") eigenvalue of a symmetric matrix by Lanczos.

    The start vector is fixed, so repeated calls give identical results.

    Raises:
      NumericalError: if ARPACK does not converge.
    """
    n = M.shape[0]
    v0 = np.ones(n) + np.arange(n) / (n + 1.0)
    try:
        w = eigsh(M, k=1, which=which, v0=v0, tol=0.0, return_eigenvectors=False)
    except ArpackError as exc:
        raise NumericalError(f"Lanczos iteration failed ({which}): {exc}") from exc
    return float(w[0])


def spectral_bounds(M: ArrayLike) -> SpectralBounds:
    """
    Largest and smallest eigenvalue of a symmetric PSD matrix.

    Small matrices use a full symmetric eigendecomposition, larger ones Lanczos
    iteration at each end of the spectrum.
    """
    a = as_symmetric(M, "M")
    n = a.shape[0]
    if n <= config.dense_eig_max_n():
        try:
            w = np.linalg.eigvalsh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        top, bottom = float(w[-1]), float(w[0])
    else:
        top = extreme_eigenvalue(a, "LA")
        bottom = extreme_eigenvalue(a, "SA")
    bottom = max(bottom, 0.0)
    radius = np.sqrt(bottom) / top if top > 0.0 else 0.0
    return SpectralBounds(sigma_max=top, sigma_min=bottom, curvature_radius=float(radius))


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """
    The cost f(x) = 1/2 x^T Q x + q^T x with Q symmetric positive semidefinite.
    """

    Q: NDArray[np.float64]
    q: NDArray[np.float64]

    def __post_init__(self):
        Q = as_symmetric(self.Q, "Q")
        q = as_vector(self.q, "q", Q.shape[0])
        w = np.linalg.eigvalsh(Q)
        if w[0] < -1e-10 * max(abs(float(w[-1])), np.finfo(float).tiny):
            raise ValidationError("Q", f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "q", _frozen(q))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def value(self, x: NDArray[np.float64]) -> float:
        return float(0.5 * x @ self.Q @ x + self.q @ x)

    def gradient(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.Q @ x + self.q


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """
    The constraint g(x) = (x - v)^T A (x - v) <= 1 with A symmetric positive definite.

    Attributes:
      A: Shape matrix (inverse squared semi-axes along its eigenvectors).
      v: Center.
    """

    A: NDArray[np.float64]
    v: NDArray[np.float64]

    def __post_init__(self):
        A = as_symmetric(self.A, "A")
        v = as_vector(self.v, "v", A.shape[0])
        w = np.linalg.eigvalsh(A)
        if not w[0] > 1e-10:
            raise ValidationError("A", f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "v", _frozen(v))

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @cached_property
    def _eigh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return np.linalg.eigh(self.A)

    @cached_property
    def inv_sqrt(self) -> NDArray[np.float64]:
        """A^(-1/2), from the eigendecomposition of A."""
        w, V = self._eigh
        if not np.all(w > 0):
            raise NumericalError("A^(-1/2) requires a positive definite A")
        return _frozen((V / np.sqrt(w)) @ V.T)

    @cached_property
    def bounds(self) -> SpectralBounds:
        return spectral_bounds(self.A)

    def value(self, x: NDArray[np.float64]) -> float:
        d = x - self.v
        return float(d @ self.A @ d)

    def gradient(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return 2.0 * (self.A @ (x - self.v))

    def membership(self, x: NDArray[np.float64], tol: float) -> Membership:
        if tol < 0:
            raise ValidationError("tol", "must be nonnegative")
        gx = self.value(x)
        if gx < 1.0 - tol:
            return Membership.INTERIOR
        if abs(gx - 1.0) <= tol:
            return Membership.BOUNDARY
        return Membership.EXTERIOR

    def boundary_samples(self, count: int, seed: int) -> NDArray[np.float64]:
        return boundary_samples(self, count, seed)


def sphere_directions(n: int, count: int, seed: int) -> NDArray[np.float64]:
    """
    Deterministic unit vectors in R^n from a scrambled Halton sequence.

    The first `count` directions for a given seed are always a prefix of the
    directions returned for a larger count, so sample sets nest.
    """
    engine = qmc.Halton(d=n, scramble=True, rng=np.random.default_rng(seed))
    pts = np.clip(engine.random(count), 1e-12, 1.0 - 1e-12)
    gauss = ndtri(pts)
    norms = np.linalg.norm(gauss, axis=1)
    degenerate = norms == 0.0
    gauss[degenerate] = np.eye(n)[0]
    norms[degenerate] = 1.0
    return gauss / norms[:, None]


def boundary_samples(e: Ellipsoid, count: int, seed: int) -> NDArray[np.float64]:
    """
    Points on the ellipsoid surface g(x) = 1, one per row.

    For n = 1 the surface is two points and both are returned whatever the count.
    """
    if count < 1:
        raise ValidationError("count", "must be at least 1")
    if e.n == 1:
        half_width = float(e.inv_sqrt[0, 0])
        return np.array([[e.v[0] - half_width], [e.v[0] + half_width]])
    u = sphere_directions(e.n, count, seed)
    return e.v + u @ e.inv_sqrt.T


@dataclass(frozen=True, eq=False)
class Problem:
    """
    minimize f(x) subject to g(x) <= 1, a convex QCQP with one ellipsoidal constraint.
    """

    cost: QuadraticCost
    constraint: Ellipsoid

    def __post_init__(self):
        if self.cost.n != self.constraint.n:
            raise ValidationError(
                "A", f"cost has dimension {self.cost.n} but constraint has {self.constraint.n}"
            )

    @property
    def n(self) -> int:
        return self.cost.n

    def _x(self, x: ArrayLike) -> NDArray[np.float64]:
        return as_vector(x, "x", self.n)

    def eval_f(self, x: ArrayLike) -> float:
        return self.cost.value(self._x(x))

    def grad_f(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.cost.gradient(self._x(x))

    def eval_g(self, x: ArrayLike) -> float:
        return self.constraint.value(self._x(x))

    def grad_g(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.constraint.gradient(self._x(x))

    def membership(self, x: ArrayLike, tol: float | None = None) -> Membership:
        return self.constraint.membership(
            self._x(x), config.membership_tol() if tol is None else tol
        )


def problem_from_arrays(Q: ArrayLike, q: ArrayLike, A: ArrayLike, v: ArrayLike) -> Problem:
    """Build and validate a Problem from raw array data."""
    return Problem(QuadraticCost(np.asarray(Q, float), np.asarray(q, float)),
                   Ellipsoid(np.asarray(A, float), np.asarray(v, float)))
