import logging

import numpy as np
import pytest

from src import minab
from src.errors import ValidationError
from src.penalty import PenaltySchedule, StepPolicy
from src.quadforms import problem_from_arrays
from src.scaling import estimate_m_min

from conftest import random_problem


def interior_points(p, count, rng):
    """Uniform-radius points of the constraint set."""
    u = rng.standard_normal((count, p.n))
    u /= np.linalg.norm(u, axis=1)[:, None]
    r = rng.uniform(0.0, 1.0, count)[:, None]
    return p.constraint.v + (r * u) @ p.constraint.inv_sqrt.T


def test_eval_p_examples(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    assert s.eval_p(1, [1.0]) == 1.0
    assert s.eval_p(3, [1.0]) == pytest.approx(1.0 / 3.0)
    for k in (1, 2, 7):
        assert s.eval_p(k, [0.0]) == 0.0


def test_grad_p_examples(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    assert s.grad_p(1, [0.4])[0] == pytest.approx(0.8)
    assert s.grad_p(1, [0.0])[0] == 0.0
    assert s.grad_p(5, [0.0])[0] == 0.0
    assert s.grad_p(2, [1.0])[0] == pytest.approx(2.0)


def test_eval_J_examples(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    assert s.eval_J(1, [0.4]) == pytest.approx(-0.2)
    assert s.eval_J(4, [0.0]) == edge1d.eval_f([0.0])
    assert s.eval_J(1, [1.0]) == pytest.approx(0.25)


def test_grad_J_examples(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    assert s.grad_J(1, [0.4])[0] == pytest.approx(0.0, abs=1e-15)
    assert s.grad_J(1, [0.0])[0] == -1.0
    assert s.grad_J(2, [0.68940])[0] == pytest.approx(0.0, abs=1e-4)


def test_grad_J_matches_finite_differences():
    rng = np.random.default_rng(11)
    p = random_problem(rng, 3)
    s = PenaltySchedule(p, 1.7)
    h = 1e-6
    for x in interior_points(p, 20, rng):
        for k in (1, 2, 5):
            fd = np.array([(s.eval_J(k, x + h * e) - s.eval_J(k, x - h * e)) / (2 * h) for e in np.eye(3)])
            np.testing.assert_allclose(s.grad_J(k, x), fd, rtol=1e-5, atol=1e-7)


def test_hess_J_matches_finite_differences():
    rng = np.random.default_rng(12)
    p = random_problem(rng, 2)
    s = PenaltySchedule(p, 0.8)
    h = 1e-6
    for x in interior_points(p, 10, rng):
        for k in (1, 3, 6):
            fd = np.column_stack([(s.grad_J(k, x + h * e) - s.grad_J(k, x - h * e)) / (2 * h) for e in np.eye(2)])
            np.testing.assert_allclose(s.hess_J(k, x), fd, rtol=1e-5, atol=1e-6)


def test_smoothness_examples(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    assert s.smoothness_L(1) == pytest.approx(2.5)
    assert s.smoothness_L(2) == pytest.approx(6.5)
    off = PenaltySchedule(edge1d, 0.0)
    assert [off.smoothness_L(k) for k in (1, 5, 20)] == pytest.approx([0.5, 0.5, 0.5])


def test_smoothness_nondecreasing():
    p = random_problem(np.random.default_rng(4), 4)
    s = PenaltySchedule(p, 0.3)
    L = [s.smoothness_L(k) for k in range(1, 65)]
    assert all(b >= a for a, b in zip(L, L[1:]))


def test_hessian_bounded_by_smoothness_inside_set():
    rng = np.random.default_rng(13)
    for n in (1, 2, 3):
        p = random_problem(rng, n)
        s = PenaltySchedule(p, 1.3)
        points = interior_points(p, 100, rng)
        for k in (1, 2, 8, 32, 64):
            top = max(float(np.linalg.eigvalsh(s.hess_J(k, x))[-1]) for x in points)
            assert top <= s.smoothness_L(k) * (1 + 1e-4)


def test_step_size_examples(edge1d, min26):
    assert PenaltySchedule(edge1d, 1.0).step_size(1) == pytest.approx(0.4)
    s = PenaltySchedule(minab.to_problem(min26), min26.m)
    assert s.step_size(1) == pytest.approx(2.0)


def test_user_step_sequence_validated(edge1d):
    s = PenaltySchedule(edge1d, 1.0)
    exact = StepPolicy.sequence([1.0 / s.smoothness_L(1)])
    assert s.step_size(1, exact) == 1.0 / s.smoothness_L(1)
    with pytest.raises(ValidationError) as exc:
        s.step_size(1, StepPolicy.sequence([0.5]))
    assert exc.value.field == "step_policy"
    with pytest.raises(ValidationError):
        s.step_size(1, StepPolicy.sequence([0.0]))
    with pytest.raises(ValidationError):
        s.step_size(2, exact)


def test_zero_curvature_has_no_step():
    flat = problem_from_arrays([[0.0]], [1.0], [[1.0]], [0.0])
    with pytest.raises(ValidationError) as exc:
        PenaltySchedule(flat, 0.0).step_size(1)
    assert exc.value.field == "m"


def test_negative_m_rejected(edge1d):
    with pytest.raises(ValidationError):
        PenaltySchedule(edge1d, -1.0)


def test_uniform_penalty_bound():
    rng = np.random.default_rng(14)
    p = random_problem(rng, 2)
    m = 2.5
    s = PenaltySchedule(p, m)
    points = interior_points(p, 1000, rng)
    for k in range(1, 65):
        values = np.array([s.eval_p(k, x) for x in points])
        assert values.min() >= 0.0
        assert values.max() <= m / k


def test_acute_angle_at_boundary():
    rng = np.random.default_rng(15)
    for n in (2, 3):
        p = random_problem(rng, n)
        m = estimate_m_min(p, samples=128, seed=0)
        s = PenaltySchedule(p, m)
        for x in p.constraint.boundary_samples(128, seed=0):
            for k in (1, 4, 16):
                assert float(p.grad_g(x) @ s.grad_J(k, x)) >= -1e-9


def test_non_finite_penalty_is_flagged(edge1d, caplog):
    s = PenaltySchedule(edge1d, 1.0)
    with caplog.at_level(logging.WARNING):
        value = s.eval_p(300, [100.0])
    assert value == float("inf")
    assert "not finite" in caplog.text
