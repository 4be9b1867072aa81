import os

from src.errors import ValidationError

# Module-level defaults. Setters mirror the runtime knobs exposed by the CLI.
_safety = 1.1
_boundary_samples = 256
_scaling_cap = 1e12
_membership_tol = 1e-9
_invariance_tol = 1e-9
_descent_tol = 1e-10
_asymmetry_warn = 1e-9
_asymmetry_reject = 1e-6
_level_budget: int | None = None
_power_strategy = "repeated-squaring"
_dense_eig_max_n = 64

FLOAT_FORMAT = "%.17g"
SCHEMA_VERSION = 1


def set_safety(safety: float) -> None:
    """
    Set the default safety factor applied to the scaling estimates.
    """
    global _safety
    if not safety >= 1.0:
        raise ValueError(f"safety factor must be >= 1, got {safety}")
    _safety = safety


def safety() -> float:
    return _safety


def set_boundary_samples(count: int) -> None:
    global _boundary_samples
    if count < 2:
        raise ValueError(f"need at least 2 boundary samples, got {count}")
    _boundary_samples = count


def boundary_samples() -> int:
    return _boundary_samples


def scaling_cap() -> float:
    return _scaling_cap


def membership_tol() -> float:
    return _membership_tol


def invariance_tol() -> float:
    return _invariance_tol


def descent_tol() -> float:
    return _descent_tol


def asymmetry_warn() -> float:
    return _asymmetry_warn


def asymmetry_reject() -> float:
    return _asymmetry_reject


def dense_eig_max_n() -> int:
    return _dense_eig_max_n


def set_level_budget(budget: int | None) -> None:
    """
    Set the default multiplicative-depth budget checked by circuit runs (None disables it).
    """
    global _level_budget
    _level_budget = budget


def level_budget() -> int | None:
    return _level_budget


def set_power_strategy(strategy: str) -> None:
    global _power_strategy
    if strategy not in ("repeated-squaring", "sequential"):
        raise ValueError(f"unknown power strategy {strategy!r}")
    _power_strategy = strategy


def power_strategy() -> str:
    return _power_strategy


def default_seed() -> int:
    """Seed used when none is given: POLYPEN_SEED if set, else 0."""
    raw = os.environ.get("POLYPEN_SEED", "").strip()
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError("POLYPEN_SEED", f"must be an integer, got {raw!r}") from None
