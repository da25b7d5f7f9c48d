"""
# src/core/job.py
任務處理模組：在 worker 中執行實驗並發送 webhook 通知
"""

import logging
import time
import traceback
from typing import Any, Dict, Optional

import requests  # type: ignore[import-untyped]
from rq import get_current_job

from src.config import get_config
from src.harness.models import ExperimentConfig
from src.harness.runner import run_experiment

logger = logging.getLogger(__name__)


class JobResult:
    """實驗任務結果"""

    def __init__(
        self,
        experiment_id: str,
        run_dir: Optional[str],
        passed: bool,
        elapsed_time: float,
        summary: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.experiment_id = experiment_id
        self.run_dir = run_dir
        self.passed = passed
        self.elapsed_time = elapsed_time
        self.summary = summary or {}

    def to_dict(self) -> Dict[str, Any]:
        """轉換為字典用於序列化"""
        return {
            "experiment_id": self.experiment_id,
            "run_dir": self.run_dir,
            "passed": self.passed,
            "time": self.elapsed_time,
            "summary": self.summary,
        }


def send_webhook(event: str, payload: Dict[str, Any]) -> bool:
    """
    發送webhook通知

    Args:
        event: 事件類型
        payload: 事件數據

    Returns:
        bool: 是否成功發送
    """
    webhook_url = get_config().api.webhook_url
    if not webhook_url:
        return False

    try:
        response = requests.post(webhook_url, json={"event": event, **payload}, timeout=5)
        return 200 <= response.status_code < 300
    except Exception as e:
        logger.error(f"發送webhook失敗: {e}")
        return False


def run_experiment_job(config: Dict[str, Any]) -> Dict[str, Any]:
    """
    在 worker 中執行一個實驗

    Args:
        config: ExperimentConfig 的 JSON 字典

    Returns:
        Dict[str, Any]: 任務結果
    """
    job = get_current_job()
    job_id = job.id if job else "unknown"
    start_time = time.time()

    try:
        cfg = ExperimentConfig.model_validate(config)
        logger.info(f"🚀 任務 {job_id} 開始執行實驗 {cfg.experiment_id} ({cfg.kind.value})")
        outcome = run_experiment(cfg)

        elapsed_time = time.time() - start_time
        result = JobResult(
            experiment_id=cfg.experiment_id,
            run_dir=outcome.run_dir,
            passed=outcome.passed,
            elapsed_time=elapsed_time,
            summary=outcome.report["summary"],
        )
        logger.info(f"✅ 實驗完成，耗時 {elapsed_time:.2f} 秒")
        send_webhook("job_completed", {"job_id": job_id, "result": result.to_dict()})
        return result.to_dict()

    except Exception as e:
        logger.error(f"❌ 任務 {job_id} 失敗: {str(e)}\n{traceback.format_exc()}")
        send_webhook("job_failed", {"job_id": job_id, "error": str(e)})
        raise
