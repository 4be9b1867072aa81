"""
The arithmetic core shared by every execution mode.

Everything here is written against a minimal number protocol (+, -, * and
multiplication by Python floats) so the same code runs on floats, on tape
values that count operations and levels, and on fixed-point numbers. The
order of operations is fixed; the float and tape runs are bitwise identical
because they perform the same IEEE operations in the same sequence.

Branches depend only on public quantities (the penalty index k and the
exponent bits), never on data values.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Generic, Sequence, TypeVar

T = TypeVar("T")


class PowerStrategy(str, Enum):
    REPEATED_SQUARING = "repeated-squaring"
    SEQUENTIAL = "sequential"


def power(base: T, exponent: int, strategy: PowerStrategy) -> T:
    """
    base ** exponent for exponent >= 1 using only multiplications.

    Repeated squaring multiplies the squares for the set bits of the exponent in
    increasing bit order, which reaches depth ceil(log2(exponent)); the
    sequential strategy multiplies by the base exponent - 1 times.
    """
    if exponent < 1:
        raise ValueError(f"exponent must be >= 1, got {exponent}")
    if exponent == 1:
        return base
    if strategy is PowerStrategy.SEQUENTIAL:
        result = base
        for _ in range(exponent - 1):
            result = result * base
        return result
    result = None
    square = base
    e = exponent
    while e:
        if e & 1:
            result = square if result is None else result * square
        e >>= 1
        if e:
            square = square * square
    return result


def power_depth(exponent: int, strategy: PowerStrategy) -> int:
    """Multiplicative depth added by power(base, exponent, strategy) on a ciphertext base."""
    if exponent <= 1:
        return 0
    if strategy is PowerStrategy.SEQUENTIAL:
        return exponent - 1
    return (exponent - 1).bit_length()


def power_multiplications(exponent: int, strategy: PowerStrategy) -> int:
    if exponent <= 1:
        return 0
    if strategy is PowerStrategy.SEQUENTIAL:
        return exponent - 1
    return exponent.bit_length() - 1 + bin(exponent).count("1") - 1


def dot(row: Sequence[T], vec: Sequence[T]) -> T:
    """Left-to-right accumulation of row[j] * vec[j]."""
    acc = row[0] * vec[0]
    for j in range(1, len(vec)):
        acc = acc + row[j] * vec[j]
    return acc


@dataclass(frozen=True)
class StepData(Generic[T]):
    """
    Problem data in the number type of one execution mode.

    Attributes:
      Q, A: Matrices as row lists.
      q, v: Vectors as lists.
    """

    Q: list[list[T]]
    q: list[T]
    A: list[list[T]]
    v: list[T]

    @property
    def n(self) -> int:
        return len(self.q)


def gradient_step(
    x: list[T],
    k: int,
    data: StepData[T],
    two_m: float,
    neg_gamma: float,
    strategy: PowerStrategy,
) -> tuple[list[T], list[T]]:
    """
    One sequential gradient descent step x - gamma_k * grad J_k(x).

    grad J_k(x) = (Q x + q) + 2m * g(x)^(k-1) * A (x - v), with g(x) = (x - v)^T A (x - v).
    For k = 1 the power factor is absent, so g is never formed.

    Args:
      x: Current iterate.
      k: Penalty index (public).
      data: Problem data.
      two_m: The public constant 2m.
      neg_gamma: The public constant -gamma_k.
      strategy: How g^(k-1) is expanded into multiplications.

    Returns:
      (next iterate, gradient at x)
    """
    n = data.n
    d = [x[i] - data.v[i] for i in range(n)]
    Ad = [dot(data.A[i], d) for i in range(n)]
    grad_f = [dot(data.Q[i], x) + data.q[i] for i in range(n)]
    if k == 1:
        pen = [two_m * Ad[i] for i in range(n)]
    else:
        w = power(dot(d, Ad), k - 1, strategy)
        pen = [two_m * (w * Ad[i]) for i in range(n)]
    grad = [grad_f[i] + pen[i] for i in range(n)]
    x_next = [x[i] + neg_gamma * grad[i] for i in range(n)]
    return x_next, grad


def minab_step(
    x: T,
    k: int,
    v: T,
    diff_sq: T,
    A: Any,
    m: float,
    strategy: PowerStrategy,
) -> T:
    """
    The min(a, b) update
        x - (a-b)^2 / (4(4k-2)m) - 2/(4k-2) * A^(k-1) * (x - v)^(2k-1),
    where v = (a+b)/2 and A = 4/(a-b)^2. Only the precomputed (a-b)^2 enters for k = 1.
    """
    d = x - v
    shift = diff_sq * (1.0 / (4.0 * (4 * k - 2) * m))
    coef = 2.0 / (4 * k - 2)
    if k == 1:
        term = d * coef
    else:
        d_odd = d * power(d * d, k - 1, strategy)
        term = (power(A, k - 1, strategy) * d_odd) * coef
    return (x - shift) - term
