"""
實驗驅動測試：配置驗證、神諭比對、執行目錄與可重現性
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest
from pydantic import ValidationError

from src.config import Config
from src.core.boosting import BoostConfig, boost_to_list
from src.core.errors import CapacityError, InputError
from src.core.games import CostMatrix, game_value, margin
from src.core.learners import Instance, planted_noise_learner
from src.harness.models import CostPreset, CostSource, ExperimentConfig, ExperimentKind
from src.harness.oracle import check_all_subsets, check_game_value, oracle_game_value
from src.harness.runner import (
    execute,
    run_dichotomy_binary,
    run_experiment,
    run_multichotomy,
    run_oracle,
    run_region_trace,
)

pytestmark = pytest.mark.integration


def _config(tmp_path: Path, **overrides: Any) -> ExperimentConfig:
    data: Dict[str, Any] = {"experiment_id": "test", "kind": "oracle", "seed": 7, "output_dir": str(tmp_path)}
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


class TestOracle:
    def test_zero_one_full_set(self, zero_one_3: CostMatrix) -> None:
        assert oracle_game_value(zero_one_3, [0, 1, 2]) == pytest.approx(0.67, abs=1e-9)
        assert check_game_value(zero_one_3, [0, 1, 2]).passed

    def test_singleton_is_zero(self, zero_one_3: CostMatrix) -> None:
        assert oracle_game_value(zero_one_3, [1]) == 0.0

    def test_random_costs_agree(self) -> None:
        for seed in range(3):
            reports = check_all_subsets(CostMatrix.random(3, np.random.default_rng(seed)))
            assert len(reports) == 7
            assert all(r.passed for r in reports)

    def test_fine_grid(self, asymmetric_binary: CostMatrix) -> None:
        report = check_game_value(asymmetric_binary, [0, 1], grid_step=1e-3)
        assert report.discrepancy <= 2e-3

    def test_capacity(self) -> None:
        with pytest.raises(CapacityError):
            oracle_game_value(CostMatrix.zero_one(4), [0, 1])

    def test_grid_step_choices(self, zero_one_3: CostMatrix) -> None:
        with pytest.raises(InputError):
            oracle_game_value(zero_one_3, [0, 1], grid_step=0.05)


class TestExperimentConfig:
    def test_seed_is_required(self) -> None:
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment_id": "x", "kind": "oracle"})

    def test_experiment_id_pattern(self) -> None:
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment_id": "a/b", "kind": "oracle", "seed": 1})

    def test_random_preset_needs_seed(self) -> None:
        with pytest.raises(ValidationError):
            CostSource(preset=CostPreset.RANDOM, k=3)

    def test_missing_cost_file(self, tmp_path: Path) -> None:
        with pytest.raises(ValidationError):
            CostSource(preset=CostPreset.FILE, file=str(tmp_path / "missing.json"))

    def test_boost_overrides_are_validated(self, tmp_path: Path) -> None:
        with pytest.raises(ValidationError):
            _config(tmp_path, boost={"T": 0})

    def test_cost_sources_expand(self, tmp_path: Path) -> None:
        cfg = _config(tmp_path, costs=[{"preset": "population_driven"}], guarantees=[0.3, 0.3])
        assert cfg.multi_cost().r == 2
        assert cfg.guarantee_vector().z == [0.3, 0.3]
        assert cfg.boost_config(11).seed == 11

    def test_load(self, tmp_path: Path) -> None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"experiment_id": "loaded", "kind": "multichotomy", "seed": 3, "guarantees": [0.3]}))
        cfg = ExperimentConfig.load(path)
        assert cfg.kind == ExperimentKind.MULTICHOTOMY
        assert cfg.costs[0].preset == CostPreset.ZERO_ONE


class TestRunner:
    def test_oracle_run_writes_report_and_tables(self, tmp_path: Path, test_config: Config) -> None:
        cfg = _config(tmp_path, costs=[{"k": 3}], trials=2)
        outcome = run_experiment(cfg)
        run_dir = Path(outcome.run_dir or "")
        assert run_dir == tmp_path / "test-7"
        assert outcome.passed

        report = json.loads((run_dir / "report.json").read_text())
        assert report["seed"] == 7
        assert report["summary"]["trials"] == 2
        with open(run_dir / "oracle.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 14

    def test_reports_are_reproducible(self, tmp_path: Path) -> None:
        first = run_experiment(_config(tmp_path / "a", costs=[{"k": 3}], trials=2))
        second = run_experiment(_config(tmp_path / "b", costs=[{"k": 3}], trials=2))
        first_bytes = (Path(first.run_dir or "") / "report.json").read_bytes()
        second_bytes = (Path(second.run_dir or "") / "report.json").read_bytes()
        assert json.loads(first_bytes)["summary"] == json.loads(second_bytes)["summary"]
        assert json.loads(first_bytes)["cells"] == json.loads(second_bytes)["cells"]

    def test_worker_pool_matches_serial(self, tmp_path: Path) -> None:
        cfg = _config(tmp_path, costs=[{"k": 2}], trials=3)
        serial, _ = execute(cfg, workers=1)
        parallel, _ = execute(cfg, workers=2)
        assert serial["cells"] == parallel["cells"]

    def test_kind_mismatch(self, tmp_path: Path) -> None:
        with pytest.raises(InputError):
            run_dichotomy_binary(_config(tmp_path))

    def test_run_oracle_returns_report(self, tmp_path: Path) -> None:
        report = run_oracle(_config(tmp_path, costs=[{"k": 2}], trials=1))
        assert report["kind"] == "oracle"
        assert report["summary"]["passed"]


class TestExperiments:
    def test_dichotomy_binary(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="dichotomy_binary",
            costs=[{"preset": "binary", "w_plus": 1.0, "w_minus": 1.0}],
            guarantees=[0.3, 0.6],
            domain_size=20,
            sample_size=200,
            boost={"m_hat": 1000},
        )
        report = run_dichotomy_binary(cfg)
        cells = report["cells"]
        assert [c["outcome"] for c in cells] == ["boosted", "trivial"]
        assert cells[0]["consistent"]
        assert cells[0]["holdout_loss"] <= 0.05
        assert cells[1]["rejected"]
        assert cells[1]["certified"]
        assert report["summary"]["threshold"] == pytest.approx(0.5)
        assert report["summary"]["passed"]

    def test_dichotomy_requires_binary_cost(self, tmp_path: Path) -> None:
        with pytest.raises(InputError):
            run_dichotomy_binary(_config(tmp_path, kind="dichotomy_binary", costs=[{"k": 3}]))

    def test_multichotomy_lowest_bucket(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="multichotomy",
            costs=[{"k": 3}],
            guarantees=[0.3],
            domain_size=20,
            sample_size=200,
            boost={"m_hat": 1000},
        )
        report = run_multichotomy(cfg)
        (cell,) = report["cells"]
        assert cell["bucket"] == 1
        assert cell["level"] == 0.0
        assert cell["achieved_ok"]
        assert cell["floor_ok"]

    def test_multichotomy_capacity(self, tmp_path: Path) -> None:
        with pytest.raises(CapacityError):
            run_multichotomy(_config(tmp_path, kind="multichotomy", costs=[{"k": 7}], guarantees=[0.3]))

    def test_region_trace_population_driven(self, tmp_path: Path) -> None:
        cfg = _config(tmp_path, kind="region_trace", costs=[{"preset": "population_driven"}], resolution=11)
        outcome = run_experiment(cfg)
        summary = outcome.report["summary"]
        assert summary["points"] == 11
        assert summary["sqrt_error"] <= 5e-3
        assert summary["max_discrepancy"] <= 5e-3
        assert outcome.passed
        assert (Path(outcome.run_dir or "") / "boundary.csv").exists()

    def test_region_trace_report(self, tmp_path: Path) -> None:
        report = run_region_trace(
            _config(tmp_path, kind="region_trace", costs=[{"preset": "population_driven"}], resolution=6)
        )
        assert report["summary"]["domain_mismatches"] == 0

    def test_equivalence_structure(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="equivalence",
            costs=[{"preset": "population_driven"}],
            guarantees=[0.2, 0.3],
            domain_size=20,
            sample_size=400,
            boost={"m_hat": 1000},
        )
        outcome = run_experiment(cfg)
        (cell,) = outcome.report["cells"]
        assert cell["regret_ok"]
        assert len(cell["holdout_losses"]) == 2
        assert len(cell["projections"]) == 7
        assert len(outcome.tables["projections"]) == 7


@pytest.mark.performance
class TestAcceptance:
    """完整規模的實驗重現；以 pytest -m performance 執行"""

    def test_dichotomy_default_offsets(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="dichotomy_binary",
            costs=[{"preset": "binary", "w_plus": 0.6, "w_minus": 0.3}],
            domain_size=50,
            sample_size=400,
            boost={"m_hat": 2000},
        )
        assert run_experiment(cfg, workers=4).passed

    def test_multichotomy_zero_one_four_labels(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="multichotomy",
            costs=[{"k": 4}],
            guarantees=[0.3, 0.55, 0.7, 0.8],
            boost={"m_hat": 2000},
        )
        assert run_experiment(cfg, workers=4).passed

    def test_oracle_many_trials(self, tmp_path: Path) -> None:
        assert run_experiment(_config(tmp_path, costs=[{"k": 3}], trials=50, oracle_step=1e-3)).passed

    @pytest.mark.parametrize("w_plus, w_minus", [(1.0, 1.0), (1.0, 0.25)])
    def test_dichotomy_reproduction(self, tmp_path: Path, w_plus: float, w_minus: float) -> None:
        cfg = _config(
            tmp_path,
            kind="dichotomy_binary",
            costs=[{"preset": "binary", "w_plus": w_plus, "w_minus": w_minus}],
            guarantees=[-0.1, -0.05, 0.0],
            relative=True,
            domain_size=50,
            sample_size=4000,
        )
        outcome = run_experiment(cfg, workers=3)
        cells = outcome.report["cells"]
        assert [c["outcome"] for c in cells] == ["boosted", "boosted", "trivial"]
        for cell in cells[:2]:
            assert cell["training_error"] == 0.0
            assert cell["holdout_zero_one"] <= 0.02
        assert cells[2]["z"] == pytest.approx(w_plus * w_minus / (w_plus + w_minus))
        assert cells[2]["certified"]
        assert cells[2]["rejected"]

    def test_sqrt_boundary(self, tmp_path: Path) -> None:
        cfg = _config(tmp_path, kind="region_trace", costs=[{"preset": "population_driven"}], resolution=100)
        summary = run_experiment(cfg).report["summary"]
        assert summary["points"] == 100
        assert summary["sqrt_error"] <= 5e-3
        assert summary["max_discrepancy"] <= 5e-3

    def test_multichotomy_middle_bucket(self, tmp_path: Path) -> None:
        cfg = _config(tmp_path, kind="multichotomy", costs=[{"k": 3}], guarantees=[0.55])
        (cell,) = run_experiment(cfg).report["cells"]
        assert cell["level"] == pytest.approx(0.5)
        assert cell["achieved"] <= 0.5 + 0.02
        assert cell["floor"] >= 0.5 - 0.02

    def test_list_boundedness_fuzz(self) -> None:
        rng = np.random.default_rng(2024)
        for run in range(1000):
            k = int(rng.integers(2, 5))
            w = CostMatrix.random(k, rng)
            z = float(rng.uniform(0.0, game_value(w).value))
            if margin(w, z) <= 1e-3:
                continue
            inst = Instance.random(10, k, rng)
            result = boost_to_list(
                w, planted_noise_learner(w, z, inst), inst.draw(40, rng), BoostConfig(T=30, m_hat=40, seed=run)
            )
            assert result.lists is not None
            bound = z + result.report.config["sigma"] + 1e-9
            for x in range(result.lists.domain_size):
                labels = result.lists.at(x)
                if labels:
                    assert game_value(w, labels).value <= bound

    def test_equivalence_population_driven(self, tmp_path: Path) -> None:
        cfg = _config(
            tmp_path,
            kind="equivalence",
            costs=[{"preset": "population_driven"}],
            guarantees=[0.1, 0.4],
            sample_size=1000,
        )
        outcome = run_experiment(cfg)
        (cell,) = outcome.report["cells"]
        assert cell["forward_slack"] <= 0.05
        assert cell["converse_ok"]
        assert all(f <= 1 / (5 * 2) + 0.02 for f in cell["violation_fractions"])
        assert outcome.passed
