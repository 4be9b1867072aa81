import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src import config
from src.errors import NumericalError, ValidationError
from src.quadforms import Problem, boundary_samples, spectral_bounds

logger = logging.getLogger(__name__)

REQ_MIN = "minimum-inside"
REQ_INV = "invariance"


@dataclass(frozen=True)
class ScalingReport:
    """
    Penalty scalings estimated from boundary samples.

    Attributes:
      m_min_hat: Largest sampled ratio -<grad g, grad f> / <grad g, grad g> (before flooring).
      m_min: Scaling for auxiliary minimizers inside the constraint set, safety applied.
      m_inv: Scaling for positive invariance of the constraint set, safety applied.
      samples: Number of boundary samples used.
      certified: True only when the boundary is finite (n = 1) and the estimate exact.
    """

    m_min_hat: float
    m_min: float
    m_inv: float
    samples: int
    certified: bool

    def __post_init__(self):
        if not (self.m_inv >= self.m_min >= 0.0):
            raise NumericalError(f"inconsistent scalings m_min={self.m_min}, m_inv={self.m_inv}")

    def as_dict(self) -> dict:
        return {
            "m_min_hat": self.m_min_hat,
            "m_min": self.m_min,
            "m_inv": self.m_inv,
            "samples": self.samples,
            "certified": self.certified,
        }


@dataclass(frozen=True)
class Violation:
    requirement: str
    point: tuple[float, ...]
    margin: float


@dataclass(frozen=True)
class RequirementCheck:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_args(samples: int, safety: float) -> None:
    if samples < 2:
        raise ValidationError("samples", f"need at least 2 boundary samples, got {samples}")
    if not safety >= 1.0:
        raise ValidationError("safety", f"safety factor must be >= 1, got {safety}")


def _boundary_gradients(
    p: Problem, samples: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Boundary points with grad f and grad g at each, one row per sample."""
    X = boundary_samples(p.constraint, samples, seed)
    grad_f = X @ p.cost.Q.T + p.cost.q
    grad_g = 2.0 * (X - p.constraint.v) @ p.constraint.A.T
    if np.any(np.einsum("ij,ij->i", grad_g, grad_g) == 0.0):
        raise NumericalError("grad g vanished at a boundary sample")
    return X, grad_f, grad_g


def _min_ratios(grad_f: NDArray[np.float64], grad_g: NDArray[np.float64]) -> NDArray[np.float64]:
    return -np.einsum("ij,ij->i", grad_g, grad_f) / np.einsum("ij,ij->i", grad_g, grad_g)


def _invariance_margins(
    p: Problem, m: float, grad_f: NDArray[np.float64], grad_g: NDArray[np.float64]
) -> NDArray[np.float64]:
    """
    2 r L_1(m) <h, grad g>/|grad g| - |h|^2 per sample, with h = grad f + m grad g.

    Nonnegative margins are the invariance condition |h| <= 2 r L_1 cos(phi) multiplied
    through by |h|; a negative cosine makes the margin negative.
    """
    r = p.constraint.bounds.curvature_radius
    L1 = spectral_bounds(p.cost.Q + 2.0 * m * p.constraint.A).sigma_max
    h = grad_f + m * grad_g
    inner = np.einsum("ij,ij->i", h, grad_g)
    return 2.0 * r * L1 * inner / np.linalg.norm(grad_g, axis=1) - np.einsum("ij,ij->i", h, h)


def _slack(m: float, grad_f: NDArray[np.float64], grad_g: NDArray[np.float64]) -> float:
    scale = float(np.max(np.linalg.norm(grad_f + m * grad_g, axis=1))) ** 2
    return 1e-12 * (1.0 + scale)


def _feasible(p: Problem, m: float, grad_f, grad_g) -> bool:
    return bool(np.all(_invariance_margins(p, m, grad_f, grad_g) >= -_slack(m, grad_f, grad_g)))


def estimate_m_min(
    p: Problem, samples: int | None = None, seed: int = 0, safety: float | None = None
) -> float:
    """
    Sampled m_min: safety * max(0, max over boundary samples of -<grad g, grad f>/<grad g, grad g>).

    Exact for n = 1, where the boundary is two points.
    """
    samples = config.boundary_samples() if samples is None else samples
    safety = config.safety() if safety is None else safety
    _check_args(samples, safety)
    _, grad_f, grad_g = _boundary_gradients(p, samples, seed)
    return safety * max(0.0, float(np.max(_min_ratios(grad_f, grad_g))))


def estimate_m_inv(
    p: Problem,
    samples: int | None = None,
    seed: int = 0,
    safety: float | None = None,
    cap: float | None = None,
) -> float:
    """
    Smallest sampled m >= m_min satisfying the invariance condition, times the safety factor.

    The condition is not known to be monotone in m, so a geometric grid is scanned for
    the first feasible value and the bracket below it is bisected to 1e-6 relative.
    The scaled result is re-checked and pushed further up the grid if the safety
    factor moved it out of the feasible set.

    Raises:
      NumericalError: if no feasible m exists below the cap.
    """
    samples = config.boundary_samples() if samples is None else samples
    safety = config.safety() if safety is None else safety
    cap = config.scaling_cap() if cap is None else cap
    _check_args(samples, safety)
    _, grad_f, grad_g = _boundary_gradients(p, samples, seed)
    m_floor = max(0.0, float(np.max(_min_ratios(grad_f, grad_g))))
    if p.n == 1:
        return safety * m_floor

    def feasible(m: float) -> bool:
        return _feasible(p, m, grad_f, grad_g)

    if feasible(m_floor):
        m_hat = m_floor
    else:
        ratio = np.linalg.norm(grad_f, axis=1) / np.linalg.norm(grad_g, axis=1)
        lo = m_floor
        hi = max(m_floor, 1e-8 * (1.0 + float(np.max(ratio))))
        while not feasible(hi):
            lo = hi
            hi *= 2.0
            if hi > cap:
                raise NumericalError(
                    f"no penalty scaling below {cap:g} satisfies the invariance condition "
                    f"at {samples} boundary samples"
                )
        while hi - lo > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        m_hat = hi
    m_inv = safety * m_hat
    while not feasible(m_inv):
        m_inv *= 2.0
        if m_inv > cap:
            raise NumericalError(f"safety-scaled penalty scaling exceeds the cap {cap:g}")
    logger.debug("m_inv: floor %.6g, bracket result %.6g, scaled %.6g", m_floor, m_hat, m_inv)
    return m_inv


def scaling_report(
    p: Problem, samples: int | None = None, seed: int = 0, safety: float | None = None
) -> ScalingReport:
    samples = config.boundary_samples() if samples is None else samples
    safety = config.safety() if safety is None else safety
    _check_args(samples, safety)
    _, grad_f, grad_g = _boundary_gradients(p, samples, seed)
    report = ScalingReport(
        m_min_hat=float(np.max(_min_ratios(grad_f, grad_g))),
        m_min=estimate_m_min(p, samples, seed, safety),
        m_inv=estimate_m_inv(p, samples, seed, safety),
        samples=2 if p.n == 1 else samples,
        certified=p.n == 1,
    )
    logger.info(
        "scaling: m_min=%.6g m_inv=%.6g (%s)",
        report.m_min, report.m_inv, "certified" if report.certified else "sampled",
    )
    return report


def verify_requirements(
    p: Problem, m: float, samples: int | None = None, seed: int = 0
) -> RequirementCheck:
    """
    Check both scaling requirements for a given m at the boundary samples.

    Each violated sample is reported with its margin: m minus the sampled ratio for
    the minimum-inside requirement, and the invariance margin otherwise.
    """
    if not m >= 0.0:
        raise ValidationError("m", f"must be >= 0, got {m}")
    samples = config.boundary_samples() if samples is None else samples
    _check_args(samples, 1.0)
    X, grad_f, grad_g = _boundary_gradients(p, samples, seed)
    violations = []
    min_margins = m - _min_ratios(grad_f, grad_g)
    for x, margin in zip(X, min_margins):
        if margin < -1e-12 * (1.0 + m):
            violations.append(Violation(REQ_MIN, tuple(float(c) for c in x), float(margin)))
    inv_margins = _invariance_margins(p, m, grad_f, grad_g)
    slack = _slack(m, grad_f, grad_g)
    for x, margin in zip(X, inv_margins):
        if margin < -slack:
            violations.append(Violation(REQ_INV, tuple(float(c) for c in x), float(margin)))
    return RequirementCheck(violations)
