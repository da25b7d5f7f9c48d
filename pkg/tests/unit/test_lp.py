"""
線性規劃求解器測試
"""

import numpy as np
import pytest

from src.config import SolverConfig
from src.core.errors import InputError, NumericError
from src.core.lp import LinearProgram, LpStatus, Sense, solve


def test_minimize_with_ge_constraint() -> None:
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0]], [1.0], [Sense.GE])
    solution = solve(lp)
    assert solution.is_optimal
    assert solution.optimal_value == pytest.approx(1.0)
    assert solution.primal.sum() == pytest.approx(1.0)


def test_maximize_with_upper_bound() -> None:
    lp = LinearProgram([3.0, 2.0], [[1.0, 1.0]], [4.0], upper=[3.0, np.inf], maximize=True)
    solution = solve(lp)
    assert solution.optimal_value == pytest.approx(11.0)
    assert solution.primal == pytest.approx([3.0, 1.0])


def test_equality_and_negative_lower_bound() -> None:
    # min t，滿足 x − t ≤ 0.25、x = 1，t ≥ −1
    lp = LinearProgram([0.0, 1.0], [[1.0, -1.0], [1.0, 0.0]], [0.25, 1.0], ["<=", "="], lower=[0.0, -1.0])
    solution = solve(lp)
    assert solution.optimal_value == pytest.approx(0.75)


def test_free_variable() -> None:
    lp = LinearProgram([1.0], [[1.0]], [-2.0], [Sense.GE], lower=[-np.inf])
    assert solve(lp).optimal_value == pytest.approx(-2.0)


def test_infeasible() -> None:
    lp = LinearProgram([1.0], [[1.0], [1.0]], [2.0, 1.0], [Sense.GE, Sense.LE])
    solution = solve(lp)
    assert solution.status == LpStatus.INFEASIBLE
    assert not solution.is_optimal
    assert solution.to_dict()["optimal_value"] is None


def test_unbounded() -> None:
    lp = LinearProgram([1.0], [[1.0]], [1.0], [Sense.GE], maximize=True)
    assert solve(lp).status == LpStatus.UNBOUNDED


def test_redundant_equalities() -> None:
    lp = LinearProgram([1.0, 2.0], [[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], [Sense.EQ, Sense.EQ])
    solution = solve(lp)
    assert solution.optimal_value == pytest.approx(1.0)


def test_iteration_limit_raises_numeric_error() -> None:
    lp = LinearProgram([-1.0, -1.0], [[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])
    with pytest.raises(NumericError):
        solve(lp, SolverConfig(max_iterations=0))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"objective": [], "constraint_matrix": [], "constraint_rhs": []},
        {"objective": [1.0, 1.0], "constraint_matrix": [[1.0]], "constraint_rhs": [1.0]},
        {"objective": [1.0], "constraint_matrix": [[np.nan]], "constraint_rhs": [1.0]},
        {"objective": [1.0], "constraint_matrix": [[1.0]], "constraint_rhs": [1.0], "senses": ["<"]},
        {"objective": [1.0], "constraint_matrix": [[1.0]], "constraint_rhs": [1.0], "lower": [2.0], "upper": [1.0]},
    ],
)
def test_invalid_programs(kwargs: dict) -> None:
    with pytest.raises(InputError):
        LinearProgram(**kwargs)


def test_solution_is_reproducible() -> None:
    rng = np.random.default_rng(3)
    A = rng.uniform(0.0, 1.0, size=(6, 4))
    lp = LinearProgram(-np.ones(4), A, np.ones(6))
    first, second = solve(lp), solve(lp)
    assert first.optimal_value == second.optimal_value
    assert np.array_equal(first.primal, second.primal)
