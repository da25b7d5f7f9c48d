"""
# src/harness/runner.py
實驗執行器：分派單元（可選擇使用進程池）、彙總並寫入執行目錄

執行目錄為 {output_dir}/{experiment_id}-{seed}，內含 report.json 與各表格 CSV。
報告不含時間戳記，固定種子下逐位元相同。
"""

import csv
import json
import logging
import os
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Tuple

from src.config import get_config
from src.core.errors import InputError
from src.harness.experiments import EXPERIMENTS, Row, Tables
from src.harness.models import ExperimentConfig, ExperimentKind

logger = logging.getLogger(__name__)


class ExperimentOutcome:
    """實驗結果"""

    def __init__(self, run_dir: Optional[str], report: Dict[str, Any], tables: Tables) -> None:
        self.run_dir = run_dir
        self.report = report
        self.tables = tables

    @property
    def passed(self) -> bool:
        return bool(self.report["summary"].get("passed", False))

    def to_dict(self) -> Dict[str, Any]:
        return {"run_dir": self.run_dir, "passed": self.passed, "summary": self.report["summary"]}


def _run_cell(args: Tuple[Dict[str, Any], int, Any]) -> Row:
    config_dict, index, cell = args
    cfg = ExperimentConfig.model_validate(config_dict)
    return EXPERIMENTS[cfg.kind].run_cell(cfg, index, cell)


def execute(cfg: ExperimentConfig, workers: Optional[int] = None) -> Tuple[Dict[str, Any], Tables]:
    """
    執行實驗的所有單元並彙總

    Args:
        cfg: 實驗配置
        workers: 進程數（預設取 HarnessConfig.workers）

    Returns:
        Tuple[Dict[str, Any], Tables]: (報告, 表格)
    """
    experiment = EXPERIMENTS[cfg.kind]
    cells = experiment.cells(cfg)
    workers = workers or get_config().harness.workers
    tasks = [(cfg.model_dump(mode="json"), index, cell) for index, cell in enumerate(cells)]
    logger.info(f"🚀 實驗 {cfg.experiment_id} ({cfg.kind.value}) 開始：{len(cells)} 個單元，{workers} 個進程")

    rows: List[Row]
    if workers > 1 and len(tasks) > 1:
        with Pool(min(workers, len(tasks))) as pool:
            rows = pool.map(_run_cell, tasks)
    else:
        rows = [_run_cell(task) for task in tasks]

    summary, tables = experiment.summarize(cfg, rows)
    report = {
        "experiment_id": cfg.experiment_id,
        "kind": cfg.kind.value,
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "summary": summary,
        "cells": rows,
    }
    status = "✅ 通過" if summary.get("passed") else "⚠️ 未通過"
    logger.info(f"實驗 {cfg.experiment_id} 完成：{status}")
    return report, tables


def write_run(cfg: ExperimentConfig, report: Dict[str, Any], tables: Tables) -> str:
    """寫入 report.json 與 CSV 表格，返回執行目錄"""
    root = cfg.output_dir or get_config().harness.output_dir
    run_dir = os.path.join(root, f"{cfg.experiment_id}-{cfg.seed}")
    os.makedirs(run_dir, exist_ok=True)

    with open(os.path.join(run_dir, "report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")

    for name, rows in tables.items():
        if not rows:
            continue
        columns = sorted({key for row in rows for key in row})
        with open(os.path.join(run_dir, f"{name}.csv"), "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _cell(row.get(key)) for key in columns})

    logger.info(f"📁 結果已寫入 {run_dir}")
    return run_dir


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.9f}"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None, write: bool = True) -> ExperimentOutcome:
    report, tables = execute(cfg, workers)
    run_dir = write_run(cfg, report, tables) if write else None
    return ExperimentOutcome(run_dir, report, tables)


def _run_kind(kind: ExperimentKind, cfg: ExperimentConfig) -> Dict[str, Any]:
    if cfg.kind != kind:
        raise InputError(f"配置類型 {cfg.kind.value} 與 {kind.value} 不符")
    return execute(cfg, workers=1)[0]


def run_dichotomy_binary(cfg: ExperimentConfig) -> Dict[str, Any]:
    return _run_kind(ExperimentKind.DICHOTOMY_BINARY, cfg)


def run_multichotomy(cfg: ExperimentConfig) -> Dict[str, Any]:
    return _run_kind(ExperimentKind.MULTICHOTOMY, cfg)


def run_region_trace(cfg: ExperimentConfig) -> Dict[str, Any]:
    return _run_kind(ExperimentKind.REGION_TRACE, cfg)


def run_equivalence(cfg: ExperimentConfig) -> Dict[str, Any]:
    return _run_kind(ExperimentKind.EQUIVALENCE, cfg)


def run_oracle(cfg: ExperimentConfig) -> Dict[str, Any]:
    return _run_kind(ExperimentKind.ORACLE, cfg)
