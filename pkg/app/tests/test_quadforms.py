import logging

import numpy as np
import pytest

from src import config
from src.errors import ValidationError
from src.quadforms import (
    Ellipsoid,
    Membership,
    QuadraticCost,
    boundary_samples,
    extreme_eigenvalue,
    problem_from_arrays,
    spectral_bounds,
    sphere_directions,
)


def test_eval_f_examples(edge1d):
    assert edge1d.eval_f([0.0]) == 0.0
    assert edge1d.eval_f([0.4]) == pytest.approx(-0.36)
    p = problem_from_arrays(np.eye(2) * 2.0, [0.0, 0.0], np.eye(2), [0.0, 0.0])
    assert p.eval_f([1.0, 1.0]) == pytest.approx(2.0)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((3, 3))
    p = problem_from_arrays(B @ B.T, rng.standard_normal(3), np.diag([1.0, 2.0, 3.0]), [0.1, 0.2, 0.3])
    h = 1e-6
    for x in rng.standard_normal((100, 3)):
        for fn, grad in ((p.eval_f, p.grad_f), (p.eval_g, p.grad_g)):
            fd = np.array([(fn(x + h * e) - fn(x - h * e)) / (2 * h) for e in np.eye(3)])
            np.testing.assert_allclose(grad(x), fd, rtol=1e-5, atol=1e-7)


def test_membership(edge1d):
    assert edge1d.membership([0.5]) is Membership.INTERIOR
    assert edge1d.membership([1.0]) is Membership.BOUNDARY
    assert edge1d.membership([1.5]) is Membership.EXTERIOR


def test_dimension_mismatch_names_field(edge1d):
    with pytest.raises(ValidationError) as exc:
        edge1d.eval_f([1.0, 2.0])
    assert exc.value.field == "x"
    with pytest.raises(ValidationError) as exc:
        problem_from_arrays([[1.0]], [0.0], np.eye(2), [0.0, 0.0])
    assert exc.value.field == "A"


def test_asymmetric_matrix_rejected():
    with pytest.raises(ValidationError) as exc:
        Ellipsoid(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2))
    assert exc.value.field == "A"


def test_small_asymmetry_symmetrized_with_warning(caplog):
    A = np.array([[1.0, 1e-8], [0.0, 1.0]])
    with caplog.at_level(logging.WARNING):
        e = Ellipsoid(A, np.zeros(2))
    np.testing.assert_array_equal(e.A, e.A.T)
    assert "symmetrizing" in caplog.text


def test_not_positive_definite_rejected():
    with pytest.raises(ValidationError) as exc:
        Ellipsoid(np.diag([1.0, 0.0]), np.zeros(2))
    assert exc.value.field == "A"
    with pytest.raises(ValidationError) as exc:
        QuadraticCost(np.diag([1.0, -1.0]), np.zeros(2))
    assert exc.value.field == "Q"


def test_non_finite_rejected():
    with pytest.raises(ValidationError):
        Ellipsoid(np.array([[np.inf]]), np.zeros(1))


def test_spectral_bounds():
    b = spectral_bounds(np.diag([4.0, 1.0]))
    assert b.sigma_max == pytest.approx(4.0)
    assert b.sigma_min == pytest.approx(1.0)
    assert b.curvature_radius == pytest.approx(0.25)


def test_boundary_samples_lie_on_boundary():
    e = Ellipsoid(np.array([[2.0, 0.3], [0.3, 1.0]]), np.array([1.0, -1.0]))
    X = boundary_samples(e, 64, seed=1)
    assert X.shape == (64, 2)
    np.testing.assert_allclose([e.value(x) for x in X], 1.0, rtol=1e-12)


def test_one_dimensional_boundary_is_two_points(edge1d):
    X = boundary_samples(edge1d.constraint, 100, seed=0)
    np.testing.assert_allclose(X.ravel(), [-1.0, 1.0])


def test_sphere_directions_nest_and_are_deterministic():
    small = sphere_directions(3, 10, seed=7)
    large = sphere_directions(3, 40, seed=7)
    np.testing.assert_array_equal(small, large[:10])
    np.testing.assert_allclose(np.linalg.norm(large, axis=1), 1.0)
    assert not np.array_equal(small, sphere_directions(3, 10, seed=8))


def _jacobi_eigenvalues(M: np.ndarray, sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(M, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        if np.sqrt(np.sum(np.tril(a, -1) ** 2)) <= 1e-15 * np.linalg.norm(a):
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if a[i, j] == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                t = 1.0 if theta == 0.0 else np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                R = np.eye(n)
                R[i, i] = R[j, j] = c
                R[i, j], R[j, i] = t * c, -t * c
                a = R.T @ a @ R
    return np.sort(np.diag(a))


def test_spectral_bounds_worked_example():
    b = spectral_bounds(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert b.sigma_max == pytest.approx(3.0, rel=1e-12)
    assert b.sigma_min == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_spectral_bounds_match_jacobi(n, monkeypatch):
    rng = np.random.default_rng(100 + n)
    for _ in range(10):
        B = rng.standard_normal((n, n))
        M = B @ B.T + 0.1 * np.eye(n)
        w = _jacobi_eigenvalues(M)
        dense = spectral_bounds(M)
        assert dense.sigma_max == pytest.approx(w[-1], rel=1e-7)
        assert dense.sigma_min == pytest.approx(w[0], rel=1e-7)
    if n >= 3:
        monkeypatch.setattr(config, "_dense_eig_max_n", 1)
        lanczos = spectral_bounds(M)
        assert lanczos.sigma_max == pytest.approx(w[-1], rel=1e-7)
        assert lanczos.sigma_min == pytest.approx(w[0], rel=1e-7)


def test_large_matrix_branch_keeps_small_eigenvalue_accurate(monkeypatch):
    rng = np.random.default_rng(9)
    V, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    M = V @ np.diag(np.geomspace(1e-4, 1.0, 3)) @ V.T
    monkeypatch.setattr(config, "_dense_eig_max_n", 1)
    b = spectral_bounds(M)
    assert b.sigma_max == pytest.approx(1.0, rel=1e-10)
    assert b.sigma_min == pytest.approx(1e-4, rel=1e-8)


def test_extreme_eigenvalue_agrees_with_eigvalsh():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((8, 8))
    M = B @ B.T + np.eye(8)
    w = np.linalg.eigvalsh(M)
    assert extreme_eigenvalue(M, "LA") == pytest.approx(float(w[-1]), rel=1e-9)
    assert extreme_eigenvalue(M, "SA") == pytest.approx(float(w[0]), rel=1e-8)


def test_sphere_directions_any_dimension():
    u = sphere_directions(40, 16, seed=0)
    assert u.shape == (16, 40)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
