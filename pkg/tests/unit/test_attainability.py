"""
可達性判定、偏序與區域邊界測試
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.attainability import (
    AttainabilityVerdict,
    AttainMode,
    GuaranteeVector,
    MultiCost,
    avoided_sets,
    coin_response,
    envelope_check,
    is_coin_attainable,
    is_dice_attainable,
    precedes,
    scalarize,
    separating_subsets,
    simplex_grid,
    trace_boundary,
)
from src.core.errors import CapacityError, InputError
from src.core.games import CostMatrix, game_value


class TestModels:
    def test_multi_cost_requires_common_k(self) -> None:
        with pytest.raises(ValidationError):
            MultiCost(costs=[CostMatrix.zero_one(2), CostMatrix.zero_one(3)])

    def test_guarantee_range(self) -> None:
        with pytest.raises(ValidationError):
            GuaranteeVector.of(0.5, 1.2)

    def test_load_accepts_single_matrix(self, tmp_path, zero_one_3: CostMatrix) -> None:
        path = tmp_path / "w.json"
        zero_one_3.dump(path)
        multi = MultiCost.load(path)
        assert multi.r == 1
        assert multi.k == 3

    def test_load_multi(self, tmp_path, graded_pair: MultiCost) -> None:
        path = tmp_path / "w.json"
        graded_pair.dump(path)
        assert MultiCost.load(path) == graded_pair

    def test_verdict_carries_exactly_one_witness(self) -> None:
        with pytest.raises(ValidationError):
            AttainabilityVerdict(attainable=True, subset=[0, 1], mode=AttainMode.GRID)
        with pytest.raises(ValidationError):
            AttainabilityVerdict(attainable=False, subset=[0, 1], mode=AttainMode.GRID)


class TestGridsAndScalarization:
    def test_simplex_grid_size_and_sums(self) -> None:
        grid = simplex_grid(3, 4)
        assert grid.shape == (math.comb(6, 2), 3)
        assert np.allclose(grid.sum(axis=1), 1.0)
        assert grid.min() >= 0.0

    def test_simplex_grid_order(self) -> None:
        assert simplex_grid(2, 4)[:, 0].tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_scalarize(self, population_driven: MultiCost) -> None:
        w = scalarize(population_driven, [0.25, 0.75])
        assert w.w_minus == pytest.approx(0.25)
        assert w.w_plus == pytest.approx(0.75)

    def test_scalarize_length_check(self, population_driven: MultiCost) -> None:
        with pytest.raises(InputError):
            scalarize(population_driven, [1.0])


class TestCoinAttainability:
    @pytest.mark.parametrize("mode", [AttainMode.GRID, AttainMode.DUALITY, AttainMode.CROSS_CHECK])
    def test_population_driven_boundary_is_attainable(self, population_driven: MultiCost, mode: AttainMode) -> None:
        verdict = is_coin_attainable(population_driven, GuaranteeVector.of(0.25, 0.25), mode)
        assert verdict.attainable
        assert verdict.certificate
        assert not verdict.disagreements

    @pytest.mark.parametrize("mode", [AttainMode.GRID, AttainMode.DUALITY])
    def test_population_driven_inside_is_avoided(self, population_driven: MultiCost, mode: AttainMode) -> None:
        z = GuaranteeVector.of(0.2, 0.2)
        verdict = is_coin_attainable(population_driven, z, mode)
        assert not verdict.attainable
        assert verdict.alpha_witness is not None
        assert verdict.witness_gap is not None and verdict.witness_gap > 0
        alpha = np.array(verdict.alpha_witness)
        assert game_value(scalarize(population_driven, alpha)).value > z.scalarize(alpha)

    def test_grid_reports_failing_marginal(self, population_driven: MultiCost) -> None:
        verdict = is_coin_attainable(population_driven, GuaranteeVector.of(0.2, 0.2), AttainMode.GRID)
        assert verdict.failing_q is not None
        excess, _ = coin_response(population_driven, GuaranteeVector.of(0.2, 0.2), np.array(verdict.failing_q))
        assert excess > 0

    def test_certificate_points_meet_guarantee(self, population_driven: MultiCost) -> None:
        z = GuaranteeVector.of(0.3, 0.3)
        verdict = is_coin_attainable(population_driven, z, AttainMode.GRID)
        for point in verdict.certificate:
            assert np.all(np.array(point.costs) <= z.array + 1e-6)

    def test_coin_response_on_boundary(self, population_driven: MultiCost) -> None:
        excess, p = coin_response(population_driven, GuaranteeVector.of(0.25, 0.25), np.array([0.5, 0.5]))
        assert excess == pytest.approx(0.0, abs=1e-9)
        assert p == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_single_objective_matches_game_value(self, zero_one_3: CostMatrix) -> None:
        w = MultiCost.single(zero_one_3)
        assert is_dice_attainable(w, GuaranteeVector.of(0.5), [0, 1]).attainable
        assert not is_dice_attainable(w, GuaranteeVector.of(0.49), [0, 1]).attainable
        assert is_dice_attainable(w, GuaranteeVector.of(0.0), [2]).attainable

    def test_grid_mode_capacity(self) -> None:
        w = MultiCost.single(CostMatrix.zero_one(6))
        with pytest.raises(CapacityError):
            is_coin_attainable(w, GuaranteeVector.of(0.9), AttainMode.GRID)
        verdict = is_coin_attainable(w, GuaranteeVector.of(0.9))
        assert verdict.attainable
        assert verdict.mode == AttainMode.DUALITY

    def test_dimension_mismatch(self, population_driven: MultiCost) -> None:
        with pytest.raises(InputError):
            is_coin_attainable(population_driven, GuaranteeVector.of(0.5))


class TestAvoidedSets:
    def test_population_driven(self, population_driven: MultiCost) -> None:
        assert avoided_sets(population_driven, GuaranteeVector.of(0.2, 0.2)).sets == [[0, 1]]
        assert avoided_sets(population_driven, GuaranteeVector.of(0.3, 0.3)).sets == []

    def test_superset_propagation(self, graded_pair: MultiCost) -> None:
        avoided = avoided_sets(graded_pair, GuaranteeVector.of(0.5, 0.45))
        assert avoided.sets == [[0, 2], [0, 1, 2]]
        assert avoided.minimal == [[0, 2]]

    def test_only_full_set_avoided(self, graded_pair: MultiCost) -> None:
        avoided = avoided_sets(graded_pair, GuaranteeVector.of(0.5, 0.5))
        assert avoided.sets == [[0, 1, 2]]

    def test_precedes(self, graded_pair: MultiCost) -> None:
        z = GuaranteeVector.of(0.5, 0.5)
        assert precedes(graded_pair, z, GuaranteeVector.of(0.55, 0.5))
        assert not precedes(graded_pair, z, GuaranteeVector.of(0.5, 0.45))
        assert separating_subsets(graded_pair, z, GuaranteeVector.of(0.5, 0.45)) == [(0, 2)]

    def test_precedes_is_reflexive(self, population_driven: MultiCost) -> None:
        z = GuaranteeVector.of(0.1, 0.4)
        assert precedes(population_driven, z, z)


class TestBoundary:
    def test_population_driven_curve(self, population_driven: MultiCost) -> None:
        points = trace_boundary(population_driven, resolution=21)
        assert len(points) == 21
        for point in points:
            if point.z1 >= 0.04:
                assert point.z2 == pytest.approx((1.0 - math.sqrt(point.z1)) ** 2, abs=2e-3)

    def test_boundary_points_are_attainable(self, population_driven: MultiCost) -> None:
        for point in trace_boundary(population_driven, resolution=6)[1:]:
            z = GuaranteeVector.of(point.z1, min(point.z2 + 1e-6, 1.0))
            assert is_coin_attainable(population_driven, z).attainable

    def test_envelope_matches_grid(self, population_driven: MultiCost) -> None:
        report = envelope_check(population_driven, alpha_grid=400, resolution=21)
        assert report.max_discrepancy <= 5e-3
        assert report.domain_mismatches == 0

    def test_boundary_requires_two_objectives(self, zero_one_3: CostMatrix) -> None:
        with pytest.raises(InputError):
            trace_boundary(MultiCost.single(zero_one_3))
