import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Iterator, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from src import config
from src.errors import NumericalError, ValidationError
from src.kernel import PowerStrategy, StepData, gradient_step
from src.penalty import PenaltySchedule, StepPolicy
from src.quadforms import Problem, as_vector

if TYPE_CHECKING:
    from src.circuit import CircuitStats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Settings of one sequential gradient descent run.

    Attributes:
      iterations: Number of steps N, fixed up front.
      m: Penalty scaling.
      step_policy: gamma_k rule, 1/L_k by default.
      x1: Starting point, None for the ellipsoid center.
      diagnostics: Run the invariance and descent checks after the solve.
      power_strategy: Expansion of g^(k-1) into multiplications.
      m_inv: Invariance scaling of the problem if known; the run is certified when m >= m_inv.
    """

    iterations: int
    m: float
    step_policy: StepPolicy = field(default_factory=StepPolicy.reciprocal)
    x1: tuple[float, ...] | None = None
    diagnostics: bool = False
    power_strategy: PowerStrategy = field(
        default_factory=lambda: PowerStrategy(config.power_strategy())
    )
    m_inv: float | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("N", f"iteration count must be >= 1, got {self.iterations}")
        if not (math.isfinite(self.m) and self.m >= 0.0):
            raise ValidationError("m", f"penalty scaling must be finite and >= 0, got {self.m}")
        if self.x1 is not None:
            object.__setattr__(self, "x1", tuple(float(c) for c in np.atleast_1d(self.x1)))
        object.__setattr__(self, "power_strategy", PowerStrategy(self.power_strategy))

    @property
    def certified(self) -> bool:
        return self.m_inv is not None and self.m >= self.m_inv


@dataclass(frozen=True)
class IterationRecord:
    """
    One row of a trace.

    Attributes:
      k: Penalty index of the step.
      x: The iterate x_k.
      f, g, J: f(x_k), g(x_k), J_k(x_k).
      grad_norm: |grad J_k(x_k)|.
      gamma: Step size gamma_k.
      J_next: J_k(x_{k+1}), used by the descent check.
    """

    k: int
    x: tuple[float, ...]
    f: float
    g: float
    J: float
    grad_norm: float
    gamma: float
    J_next: float


@dataclass(frozen=True)
class SolveTrace:
    records: tuple[IterationRecord, ...]
    final_x: tuple[float, ...]
    final_f: float
    final_g: float
    m: float
    certified: bool
    stats: "CircuitStats | None" = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.final_x)

    @property
    def final_grad_norm(self) -> float:
        """|grad J_N(x_N)|; plaintext diagnostics only, never a stopping rule."""
        return self.records[-1].grad_norm if self.records else float("nan")

    def iterates(self) -> NDArray[np.float64]:
        """x_1 .. x_{N+1}, one per row."""
        rows = [r.x for r in self.records] + [self.final_x]
        return np.array(rows, dtype=float)

    def to_frame(self) -> pd.DataFrame:
        """
        The trace as a table with columns k, x[0..n-1], f, g, J, grad_norm, gamma.

        The last row holds x_{N+1} with J, grad_norm and gamma left empty.
        """
        xcols = [f"x[{i}]" for i in range(self.n)]
        rows = []
        for r in self.records:
            rows.append([r.k, *r.x, r.f, r.g, r.J, r.grad_norm, r.gamma])
        nan = float("nan")
        rows.append([len(self.records) + 1, *self.final_x, self.final_f, self.final_g, nan, nan, nan])
        df = pd.DataFrame(rows, columns=["k", *xcols, "f", "g", "J", "grad_norm", "gamma"])
        df["k"] = df["k"].astype(int)
        return df

    def to_csv(self, path_or_buf=None) -> str | None:
        return self.to_frame().to_csv(path_or_buf, index=False, float_format=config.FLOAT_FORMAT)

    def to_dict(self) -> dict:
        return {
            "schema_version": config.SCHEMA_VERSION,
            "m": self.m,
            "certified": self.certified,
            "records": [
                {
                    "k": r.k, "x": list(r.x), "f": r.f, "g": r.g, "J": r.J,
                    "grad_norm": r.grad_norm, "gamma": r.gamma, "J_next": r.J_next,
                }
                for r in self.records
            ],
            "final": {"x": list(self.final_x), "f": self.final_f, "g": self.final_g},
            "stats": None if self.stats is None else self.stats.as_dict(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        # repr-based float output round-trips every double exactly.
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, payload: dict) -> "SolveTrace":
        records = tuple(
            IterationRecord(
                k=int(r["k"]), x=tuple(float(c) for c in r["x"]), f=r["f"], g=r["g"], J=r["J"],
                grad_norm=r["grad_norm"], gamma=r["gamma"], J_next=r["J_next"],
            )
            for r in payload["records"]
        )
        final = payload["final"]
        return cls(
            records=records,
            final_x=tuple(float(c) for c in final["x"]),
            final_f=final["f"],
            final_g=final["g"],
            m=payload["m"],
            certified=payload["certified"],
            diagnostics=payload.get("diagnostics", {}),
        )


def default_start(p: Problem) -> NDArray[np.float64]:
    """The ellipsoid center, always a feasible starting point."""
    return p.constraint.v.copy()


def float_data(p: Problem) -> StepData[float]:
    return StepData(
        Q=p.cost.Q.tolist(), q=p.cost.q.tolist(), A=p.constraint.A.tolist(), v=p.constraint.v.tolist()
    )


def start_point(p: Problem, cfg: SolverConfig) -> NDArray[np.float64]:
    """
    x_1 from the config, checked against the constraint.

    Raises:
      ValidationError: if an explicit x1 lies outside the constraint set.
    """
    if cfg.x1 is None:
        return default_start(p)
    x1 = as_vector(cfg.x1, "x1", p.n)
    g1 = p.eval_g(x1)
    if g1 > 1.0 + config.membership_tol():
        raise ValidationError("x1", f"starting point is infeasible (g(x1) = {g1:.6g} > 1)")
    return x1


def iterate_steps(
    schedule: PenaltySchedule,
    cfg: SolverConfig,
    data: StepData,
    x: list,
    iterations: int,
) -> Iterator[tuple[int, list, list, list, float]]:
    """Yield (k, x_k, x_{k+1}, grad J_k(x_k), gamma_k) for k = 1..iterations."""
    two_m = 2.0 * schedule.m
    for k in range(1, iterations + 1):
        gamma = schedule.step_size(k, cfg.step_policy)
        x_next, grad = gradient_step(x, k, data, two_m, -gamma, cfg.power_strategy)
        yield k, x, x_next, grad, gamma
        x = x_next


def _identity(c: float) -> float:
    return c


class TraceBuilder:
    """Accumulates iteration records from any execution mode's numbers."""

    def __init__(self, schedule: PenaltySchedule, value_of: Callable[[Any], float] = _identity):
        self.schedule = schedule
        self.value_of = value_of
        self.records: list[IterationRecord] = []

    def _floats(self, values: Sequence[Any], k: int) -> NDArray[np.float64]:
        arr = np.array([self.value_of(c) for c in values], dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"iterate x_{k} is not finite; check m and the step sizes")
        return arr

    def add(self, k: int, x: Sequence[Any], x_next: Sequence[Any], grad: Sequence[Any], gamma: float) -> None:
        xf = self._floats(x, k)
        xn = self._floats(x_next, k + 1)
        gf = np.array([self.value_of(c) for c in grad], dtype=float)
        p = self.schedule.problem
        self.records.append(
            IterationRecord(
                k=k,
                x=tuple(xf.tolist()),
                f=p.eval_f(xf),
                g=p.eval_g(xf),
                J=self.schedule.eval_J(k, xf),
                grad_norm=float(math.sqrt(float(gf @ gf))),
                gamma=gamma,
                J_next=self.schedule.eval_J(k, xn),
            )
        )
        logger.debug("k=%d f=%.6g g=%.6g |grad J|=%.3e", k, self.records[-1].f, self.records[-1].g,
                     self.records[-1].grad_norm)

    def finish(self, final_x: Sequence[Any], cfg: SolverConfig) -> SolveTrace:
        xf = self._floats(final_x, len(self.records) + 1)
        p = self.schedule.problem
        trace = SolveTrace(
            records=tuple(self.records),
            final_x=tuple(xf.tolist()),
            final_f=p.eval_f(xf),
            final_g=p.eval_g(xf),
            m=self.schedule.m,
            certified=cfg.certified,
        )
        if cfg.m_inv is not None and not cfg.certified:
            logger.warning("uncertified run: m = %.6g is below m_inv = %.6g", cfg.m, cfg.m_inv)
        if cfg.diagnostics:
            trace = run_diagnostics(trace)
        return trace


def run_diagnostics(trace: SolveTrace) -> SolveTrace:
    invariance = check_invariance(trace, config.invariance_tol())
    descent = check_descent(trace, config.descent_tol())
    if invariance is not None:
        logger.warning("iterate x_%d left the constraint set", invariance)
    if descent is not None:
        logger.warning("descent chain broken at k=%d", descent)
    return replace(trace, diagnostics={"invariance_violation": invariance, "descent_violation": descent})


def solve(p: Problem, cfg: SolverConfig) -> SolveTrace:
    """
    Sequential gradient descent x_{k+1} = x_k - gamma_k grad J_k(x_k), k = 1..N.

    The penalty index advances after every step and exactly N steps are taken.

    Raises:
      ValidationError: infeasible x1 or inadmissible step sizes.
      NumericalError: a non-finite iterate.
    """
    schedule = PenaltySchedule(p, cfg.m)
    x = start_point(p, cfg).tolist()
    builder = TraceBuilder(schedule)
    for k, xk, x_next, grad, gamma in iterate_steps(schedule, cfg, float_data(p), x, cfg.iterations):
        builder.add(k, xk, x_next, grad, gamma)
        x = x_next
    trace = builder.finish(x, cfg)
    logger.info(
        "solve: N=%d m=%.6g f(x_N+1)=%.10g g(x_N+1)=%.6g%s",
        cfg.iterations, cfg.m, trace.final_f, trace.final_g, "" if trace.certified else " (uncertified)",
    )
    return trace


def check_invariance(trace: SolveTrace, tol: float) -> int | None:
    """First k with g(x_k) > 1 + tol, counting x_{N+1} as k = N+1; None if there is none."""
    for r in trace.records:
        if r.g > 1.0 + tol:
            return r.k
    if trace.records and trace.final_g > 1.0 + tol:
        return len(trace.records) + 1
    return None


def check_descent(trace: SolveTrace, tol: float) -> int | None:
    """
    First k where J_{k+1}(x_{k+1}) <= J_k(x_{k+1}) <= J_k(x_k) fails by more than
    the absolute slack tol; None if the chain holds.
    """
    records = trace.records
    for i, r in enumerate(records):
        if r.J_next > r.J + tol:
            return r.k
        if i + 1 < len(records) and records[i + 1].J > r.J_next + tol:
            return r.k
    return None


def step_energy(p: Problem, trace: SolveTrace) -> pd.DataFrame:
    """
    Per step: (1/gamma_k - L_k/2) |x_{k+1} - x_k|^2 next to the decrease J_k(x_k) - J_{k+1}(x_{k+1}).

    With admissible step sizes the first column never exceeds the second.
    """
    schedule = PenaltySchedule(p, trace.m)
    xs = trace.iterates()
    rows = []
    for i, r in enumerate(trace.records):
        step = xs[i + 1] - xs[i]
        delta = 1.0 / r.gamma - schedule.smoothness_L(r.k) / 2.0
        J_following = trace.records[i + 1].J if i + 1 < len(trace.records) else r.J_next
        rows.append(
            {
                "k": r.k,
                "energy": delta * float(step @ step),
                "step_sq": (r.gamma * r.grad_norm) ** 2,
                "decrease": r.J - J_following,
            }
        )
    return pd.DataFrame(rows, columns=["k", "energy", "step_sq", "decrease"])


def convergence_bound(p: Problem, trace: SolveTrace, x_star: ArrayLike) -> NDArray[np.float64]:
    """
    Upper bounds on J_k(x_k) - f(x*) for k = 1..N:

        (|x_1 - x*|^2 + sum gamma_i^2 |grad J_i(x_i)|^2 + 2m sum gamma_i g(x*)^i / i) / (2 sum gamma_i)
    """
    xs = as_vector(x_star, "x_star", p.n)
    x1 = np.array(trace.records[0].x) if trace.records else np.array(trace.final_x)
    g_star = p.eval_g(xs)
    dist0 = float((x1 - xs) @ (x1 - xs))
    energy = penalty_sum = gamma_sum = 0.0
    bounds = []
    for r in trace.records:
        energy += (r.gamma * r.grad_norm) ** 2
        penalty_sum += r.gamma * g_star ** r.k / r.k
        gamma_sum += r.gamma
        bounds.append((dist0 + energy + 2.0 * trace.m * penalty_sum) / (2.0 * gamma_sum))
    return np.array(bounds)
