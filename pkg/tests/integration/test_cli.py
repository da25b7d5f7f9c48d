"""
命令行介面測試：輸出格式、1 起算的子集合與結束碼
"""

import json
import math
from pathlib import Path
from typing import List

import pytest

from src.cli import main
from src.core.attainability import MultiCost
from src.core.games import CostMatrix

pytestmark = pytest.mark.integration


def _exit_code(argv: List[str]) -> int:
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return int(exc.value.code or 0)


@pytest.fixture
def binary_file(tmp_path: Path, asymmetric_binary: CostMatrix) -> str:
    path = tmp_path / "binary.json"
    asymmetric_binary.dump(path)
    return str(path)


@pytest.fixture
def graded_file(tmp_path: Path, graded_pair: MultiCost) -> str:
    path = tmp_path / "graded.json"
    graded_pair.dump(path)
    return str(path)


class TestGameCommands:
    def test_zero_one_value(self, capsys: pytest.CaptureFixture[str]) -> None:
        main(["game-value", "--cost", "zero_one:3"])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "0.666666667"
        assert lines[1] == "p: 0.333333333 0.333333333 0.333333333"

    def test_binary_file(self, binary_file: str, capsys: pytest.CaptureFixture[str]) -> None:
        main(["game-value", "--cost", binary_file])
        assert capsys.readouterr().out.splitlines()[0] == "0.200000000"

    def test_subset_is_one_indexed(self, capsys: pytest.CaptureFixture[str]) -> None:
        main(["game-value", "--cost", "zero_one:3", "--subset", "1,3"])
        assert capsys.readouterr().out.splitlines()[0] == "0.500000000"

    def test_oracle_line(self, capsys: pytest.CaptureFixture[str]) -> None:
        main(["game-value", "--cost", "zero_one:3", "--oracle"])
        assert capsys.readouterr().out.splitlines()[2].startswith("oracle: 0.670000000")

    @pytest.mark.parametrize("subset", ["0", "4", "1,x"])
    def test_bad_subset_exits_with_input_error(self, subset: str) -> None:
        assert _exit_code(["game-value", "--cost", "zero_one:3", "--subset", subset]) == 2

    @pytest.mark.parametrize("source", ["zero_one:x", "zero_one:1", "zero_one:13"])
    def test_bad_cost_source(self, source: str) -> None:
        assert _exit_code(["game-value", "--cost", source]) == 2

    def test_thresholds(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "ladder.json"
        main(["thresholds", "--cost", "zero_one:3", "--report", str(report)])
        payload = json.loads(capsys.readouterr().out)
        assert payload["levels"] == [0.0, 0.5, 0.666666667]
        assert json.loads(report.read_text())["k"] == 3


class TestAttainabilityCommands:
    def test_population_driven_boundary(self, capsys: pytest.CaptureFixture[str]) -> None:
        main(["attainable", "--cost", "population_driven", "--z", "0.25,0.25"])
        assert capsys.readouterr().out.splitlines()[0] == "attainable"

    def test_population_driven_inside(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "verdict.json"
        main(["attainable", "--cost", "population_driven", "--z", "0.2,0.2", "--report", str(report)])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "not attainable"
        assert lines[1].startswith("alpha: ")
        assert json.loads(report.read_text())["attainable"] is False

    def test_duality_mode_on_subset(self, graded_file: str, capsys: pytest.CaptureFixture[str]) -> None:
        main(["attainable", "--cost", graded_file, "--z", "0.5,0.45", "--subset", "1,3", "--mode", "duality"])
        assert capsys.readouterr().out.splitlines()[0] == "not attainable"

    def test_guarantee_length_mismatch(self) -> None:
        assert _exit_code(["attainable", "--cost", "population_driven", "--z", "0.5"]) == 2

    def test_guarantee_out_of_range(self) -> None:
        assert _exit_code(["attainable", "--cost", "population_driven", "--z", "0.5,1.5"]) == 2

    def test_precedes(self, graded_file: str, capsys: pytest.CaptureFixture[str]) -> None:
        main(["precedes", "--cost", graded_file, "--z", "0.5,0.5", "--z-prime", "0.5,0.45"])
        assert capsys.readouterr().out.splitlines() == ["false", "separating: 1,3"]


class TestBoostCommands:
    def test_seed_is_mandatory(self) -> None:
        assert _exit_code(["boost-binary", "--cost", "zero_one:2", "--z", "0.3"]) == 2

    def test_guarantee_above_threshold_exits_with_contract_error(self, binary_file: str) -> None:
        assert _exit_code(["boost-binary", "--cost", binary_file, "--z", "0.25", "--seed", "1"]) == 1

    def test_boost_binary_writes_report(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "binary-report.json"
        main([
            "boost-binary", "--cost", "zero_one:2", "--z", "0.3", "--seed", "1",
            "--domain-size", "20", "--sample-size", "200", "--m-hat", "1000", "--report", str(report),
        ])
        out = capsys.readouterr().out
        assert "consistent: True" in out
        payload = json.loads(report.read_text())
        assert payload["report"]["algorithm"] == "boost_binary"
        assert payload["report"]["config"]["seed"] == 1

    def test_boost_binary_default_parameters(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "defaults.json"
        main(["boost-binary", "--cost", "zero_one:2", "--z", "0.3", "--seed", "4", "--report", str(report)])
        assert "holdout_loss: " in capsys.readouterr().out
        config = json.loads(report.read_text())["report"]["config"]
        assert config["m_hat"] == 200
        assert config["gamma"] == pytest.approx(0.2)
        assert config["T"] == math.ceil(18 * math.log(200) / config["gamma"] ** 2)

    def test_boost_list_s_list(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "list-report.json"
        main([
            "boost-list", "--cost", "zero_one:3", "--z", "0.55", "--seed", "2", "--s-list",
            "--domain-size", "20", "--sample-size", "200", "--rounds", "100", "--m-hat", "300",
            "--report", str(report),
        ])
        assert "max_list_size: " in capsys.readouterr().out
        assert json.loads(report.read_text())["report"]["config"]["s"] == 2

    def test_boost_mo(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        report = tmp_path / "mo-report.json"
        main([
            "boost-mo", "--cost", "population_driven", "--z", "0.2,0.3", "--seed", "3",
            "--domain-size", "20", "--sample-size", "200", "--rounds", "30", "--m-hat", "200",
            "--report", str(report),
        ])
        assert capsys.readouterr().out.startswith("holdout_losses: ")
        assert json.loads(report.read_text())["report"]["algorithm"] == "boost_mo"


class TestExperimentCommand:
    def test_runs_config(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        config = tmp_path / "oracle.json"
        config.write_text(json.dumps({"experiment_id": "cli", "kind": "oracle", "seed": 5, "trials": 1}))
        main(["experiment", "--config", str(config), "--output-dir", str(tmp_path / "runs")])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == str(tmp_path / "runs" / "cli-5")
        assert lines[1] == "passed"

    def test_missing_config(self, tmp_path: Path) -> None:
        assert _exit_code(["experiment", "--config", str(tmp_path / "missing.json")]) == 2

    def test_invalid_json(self, tmp_path: Path) -> None:
        config = tmp_path / "broken.json"
        config.write_text("{not json")
        assert _exit_code(["experiment", "--config", str(config)]) == 2

    def test_missing_seed(self, tmp_path: Path) -> None:
        config = tmp_path / "noseed.json"
        config.write_text(json.dumps({"experiment_id": "cli", "kind": "oracle"}))
        assert _exit_code(["experiment", "--config", str(config)]) == 2


def test_no_command_prints_help() -> None:
    assert _exit_code([]) == 2


def test_unknown_flag() -> None:
    assert _exit_code(["game-value", "--cost", "zero_one:3", "--bogus"]) == 2
