import json

import numpy as np
import pytest

from src import minab
from src.quadforms import Problem, problem_from_arrays


def random_problem(rng: np.random.Generator, n: int) -> Problem:
    """Random PSD cost and an ellipsoid with eigenvalues in [1, 3], optimum usually on the boundary."""
    B = rng.standard_normal((n, n))
    Q = B @ B.T / n
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = V @ np.diag(rng.uniform(1.0, 3.0, n)) @ V.T
    v = rng.uniform(-1.0, 1.0, n)
    q = -Q @ v + 3.0 * rng.standard_normal(n)
    return problem_from_arrays(Q, q, A, v)


@pytest.fixture
def edge1d() -> Problem:
    """f = x^2/4 - x on [-1, 1]; the constrained minimizer is x* = 1."""
    return problem_from_arrays([[0.5]], [-1.0], [[1.0]], [0.0])


@pytest.fixture
def min26() -> minab.MinProblem:
    return minab.MinProblem(2.0, 6.0, 1.0)


@pytest.fixture
def flat_face() -> Problem:
    """Minimizers form the segment x[0] = 0.5; the one closest to v is (0.5, 0.3)."""
    return problem_from_arrays([[1.0, 0.0], [0.0, 0.0]], [-0.5, 0.0], np.eye(2), [0.0, 0.3])


@pytest.fixture
def interior() -> Problem:
    """Strictly convex cost with its unconstrained minimizer (0.2, -0.1) inside the set."""
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    x0 = np.array([0.2, -0.1])
    return problem_from_arrays(Q, -Q @ x0, [[1.0, 0.2], [0.2, 2.0]], [0.0, 0.0])


@pytest.fixture
def random_problems() -> list[Problem]:
    rng = np.random.default_rng(20240611)
    return [random_problem(rng, int(rng.integers(1, 6))) for _ in range(50)]


@pytest.fixture
def edge1d_file(tmp_path):
    path = tmp_path / "edge1d.json"
    path.write_text(json.dumps({"Q": [[0.5]], "q": [-1.0], "A": [[1.0]], "v": [0.0], "m": 1.0, "N": 100}))
    return path


@pytest.fixture
def disk() -> Problem:
    """f = |x|^2/2 - 3 x[0] on the unit disk: x* = (1, 0) with multiplier 1."""
    return problem_from_arrays(np.eye(2), [-3.0, 0.0], np.eye(2), [0.0, 0.0])


@pytest.fixture
def stretched() -> Problem:
    return problem_from_arrays(np.diag([1.0, 4.0]), [-2.0, -2.0], np.eye(2), [0.0, 0.0])
