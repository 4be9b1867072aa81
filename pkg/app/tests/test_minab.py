import logging

import numpy as np
import pytest

from src import minab, oracle
from src.errors import ValidationError
from src.kernel import PowerStrategy
from src.solver import SolverConfig, solve

ALPHAS = [1.0, 1.5, 2.0, 4.0]


def test_to_problem(min26):
    p = minab.to_problem(min26)
    assert p.cost.Q[0, 0] == 0.0
    assert p.cost.q[0] == 1.0
    assert p.constraint.A[0, 0] == 0.25
    assert p.constraint.v[0] == 4.0
    assert p.eval_g([2.0]) == 1.0
    assert p.eval_g([6.0]) == 1.0
    swapped = minab.to_problem(minab.MinProblem(6.0, 2.0))
    assert swapped.constraint.A[0, 0] == 0.25 and swapped.constraint.v[0] == 4.0
    unit = minab.to_problem(minab.MinProblem(0.0, 1.0))
    assert unit.constraint.A[0, 0] == 4.0 and unit.constraint.v[0] == 0.5


def test_iterate_examples(min26):
    assert minab.iterate(min26, 4.0, 1) == 2.0
    assert minab.iterate(minab.MinProblem(2.0, 6.0, 2.0), 4.0, 1) == 3.0
    # 2 is the minimizer of J_1 for alpha = 1.
    assert minab.iterate(min26, 2.0, 1) == 2.0


def test_iterate_rejects_bad_index(min26):
    with pytest.raises(ValidationError):
        minab.iterate(min26, 4.0, 0)


def test_analysis_form_agrees():
    for alpha in ALPHAS:
        mp = minab.MinProblem(-1.0, 2.5, alpha)
        for x in np.linspace(-1.0, 2.5, 15):
            for k in range(1, 7):
                assert minab.iterate(mp, x, k) == pytest.approx(minab.iterate_analysis(mp, x, k), rel=1e-12, abs=1e-12)


def test_strategies_agree_closely():
    mp = minab.MinProblem(2.0, 6.0, 3.0)
    rs = minab.run(mp, 30, PowerStrategy.REPEATED_SQUARING)
    seq = minab.run(mp, 30, PowerStrategy.SEQUENTIAL)
    np.testing.assert_allclose(rs, seq, rtol=1e-12)


@pytest.mark.parametrize("pair", [(2.0, 6.0), (6.0, 2.0), (-3.0, 1.5), (0.0, 1e-3)])
@pytest.mark.parametrize("alpha", [1.0, 2.0, 4.0])
def test_equivalent_to_general_solver(pair, alpha):
    mp = minab.MinProblem(*pair, alpha)
    xs = minab.run(mp, 50)
    trace = solve(minab.to_problem(mp), SolverConfig(iterations=50, m=mp.m))
    np.testing.assert_allclose(xs, trace.iterates()[:, 0], rtol=1e-12, atol=1e-12 * mp.spread)


def test_sandwich():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = rng.uniform(-100.0, 100.0, 2)
        mp = minab.MinProblem(a, b, rng.uniform(1.0, 5.0))
        lo = min(a, b)
        slack = 1e-12 * (abs(a) + abs(b))
        assert lo - slack <= minab.single_step_estimate(mp) < mp.center
        assert minab.naive_bound_estimate(mp) <= lo + slack


def test_single_step_and_naive_examples(min26):
    assert minab.single_step_estimate(min26) == 2.0
    assert minab.single_step_estimate(minab.MinProblem(2.0, 6.0, 2.0)) == 3.0
    assert minab.naive_bound_estimate(min26) == 2.0
    assert minab.naive_bound_estimate(minab.MinProblem(2.0, 6.0, 2.0)) == 0.0
    assert minab.naive_bound_estimate(minab.MinProblem(0.0, 1.0, 1.5)) == -0.25


def test_single_step_matches_first_iterate():
    for alpha in ALPHAS:
        mp = minab.MinProblem(-2.0, 7.0, alpha)
        assert minab.run(mp, 1)[1] == pytest.approx(minab.single_step_estimate(mp), rel=1e-12)


def test_auxiliary_error_examples():
    assert all(minab.auxiliary_error(minab.MinProblem(2.0, 6.0), k) == 0.0 for k in range(1, 20))
    mp = minab.MinProblem(2.0, 6.0, 2.0)
    assert minab.auxiliary_error(mp, 2) == pytest.approx(2.0 * (1.0 - 2.0 ** (-1.0 / 3.0)))
    errors = [minab.auxiliary_error(mp, k) for k in range(1, 51)]
    assert all(b < a for a, b in zip(errors, errors[1:]))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_auxiliary_error_matches_oracle(alpha):
    mp = minab.MinProblem(2.0, 6.0, alpha)
    p = minab.to_problem(mp)
    for k in range(1, 11):
        x_k = oracle.solve_auxiliary(p, mp.m, k).x_star[0]
        assert abs(x_k - 2.0) == pytest.approx(minab.auxiliary_error(mp, k), abs=1e-8)


def test_iterations_for_precision_examples(min26):
    assert minab.iterations_for_precision(min26, 0.1) == 1
    mp = minab.MinProblem(2.0, 6.0, 2.0)
    assert minab.iterations_for_precision(mp, 0.1) == 8
    assert minab.iterations_for_precision(mp, 1.999) == 1


@pytest.mark.parametrize("alpha", [1.5, 2.0, 4.0, 10.0])
@pytest.mark.parametrize("delta", [0.5, 0.1, 0.01, 1e-3])
def test_iterations_for_precision_is_tight(alpha, delta):
    mp = minab.MinProblem(2.0, 6.0, alpha)
    k = minab.iterations_for_precision(mp, delta)
    assert minab.auxiliary_error(mp, k) <= delta
    if k > 1:
        assert minab.auxiliary_error(mp, k - 1) > delta


def test_iterations_for_precision_range(min26):
    mp = minab.MinProblem(2.0, 6.0, 2.0)
    for delta in (0.0, -1.0, 2.0, 3.0):
        with pytest.raises(ValidationError) as err:
            minab.iterations_for_precision(mp, delta)
        assert err.value.field == "delta"
    with pytest.raises(ValidationError):
        minab.iterations_for_precision(minab.MinProblem(2.0, 6.0, 0.9), 0.1)


def test_below_one_alpha_stays_finite(caplog):
    with caplog.at_level(logging.WARNING):
        mp = minab.MinProblem(2.0, 6.0, 0.9)
    assert "alpha" in caplog.text
    xs = minab.run(mp, 100)
    assert np.all(np.isfinite(xs))


def test_compatible(min26):
    assert minab.compatible(min26, 1.0)
    assert not minab.compatible(min26, 0.99)


def test_degenerate_pair():
    mp = minab.MinProblem(5.0, 5.0)
    assert mp.degenerate
    with pytest.raises(ValidationError) as err:
        minab.to_problem(mp)
    assert err.value.field == "b"
    assert minab.iterate(mp, 1.0, 3) == 5.0
    assert np.all(minab.run(mp, 4) == 5.0)
    assert minab.auxiliary_error(mp, 3) == 0.0
    assert minab.iterations_for_precision(mp, 0.1) == 1
    assert minab.single_step_estimate(mp) == 5.0
    assert minab.naive_bound_estimate(mp) == 5.0


def test_constructor_validation():
    with pytest.raises(ValidationError):
        minab.MinProblem(1.0, 2.0, 0.0)
    with pytest.raises(ValidationError):
        minab.MinProblem(float("nan"), 2.0)
    with pytest.raises(ValidationError):
        minab.run(minab.MinProblem(1.0, 2.0), 0)
    with pytest.raises(ValidationError):
        minab.tape_minab(minab.MinProblem(1.0, 2.0), 0)
