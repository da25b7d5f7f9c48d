"""
Worker模組：從 Redis 隊列取出實驗任務並執行
"""

import os
import signal
import logging
from typing import Any, List, Sequence, Union, cast

import rq.serializers
from redis import Redis
from rq import Queue, Worker
from rq.job import Job
from rq.registry import StartedJobRegistry

from src.config import get_config

logger = logging.getLogger(__name__)


class ExperimentWorker(Worker):
    """自訂 RQ worker，記錄實驗任務的開始與結束"""

    def __init__(self, queues: List[Union[str, Queue]], *args: Any, **kwargs: Any) -> None:
        kwargs.setdefault("serializer", rq.serializers.JSONSerializer())
        super().__init__(queues, *args, **kwargs)
        self.config = get_config()
        logger.info(f"Worker {self.name} 已初始化，監控隊列: {self.queue_names()}")

    def handle_job_success(self, job: Job, queue: Queue, started_job_registry: StartedJobRegistry) -> Any:
        result = job.return_value() if hasattr(job, "return_value") else None
        passed = result.get("passed") if isinstance(result, dict) else None
        logger.info(f"任務 {job.id} 成功完成，實驗通過: {passed}")
        return super().handle_job_success(job, queue, started_job_registry)

    def perform_job(self, job: Job, queue: Queue) -> Any:
        logger.info(f"開始執行任務 {job.id}，來自隊列 {queue.name}")
        return super().perform_job(job, queue)


def get_queue_list(redis_conn: Redis) -> Sequence[Queue]:
    """
    獲取Worker應該處理的隊列列表（依優先級排序）

    Args:
        redis_conn: Redis連接

    Returns:
        Sequence[Queue]: 隊列對象列表
    """
    config = get_config()
    return [
        Queue(name=q, connection=redis_conn, serializer=rq.serializers.JSONSerializer())
        for q in config.worker.queues
    ]


def setup_signal_handlers(worker: Worker) -> None:
    """設置信號處理程序以優雅地關閉"""

    def request_stop(signum: int, frame: Any) -> None:
        logger.info(f"收到信號 {signum}，正在關閉worker...")
        worker.request_stop(signum, frame)

    signal.signal(signal.SIGINT, request_stop)
    signal.signal(signal.SIGTERM, request_stop)


def run_worker() -> None:
    """運行worker進程"""
    config = get_config()
    redis_conn = Redis(
        host=config.redis.host,
        port=config.redis.port,
        db=config.redis.db,
        password=config.redis.password,
    )

    queues = get_queue_list(redis_conn)
    worker_name = f"{config.worker.name}.{os.uname().nodename}.{os.getpid()}"
    logger.info(f"Worker {worker_name} 啟動，監控隊列: {', '.join(q.name for q in queues)}")

    worker = ExperimentWorker(
        queues=cast(List[Union[str, Queue]], queues),
        name=worker_name,
        connection=redis_conn,
        default_worker_ttl=600,
        default_result_ttl=5000,
        job_monitoring_interval=30,
    )
    setup_signal_handlers(worker)
    worker.work()


if __name__ == "__main__":
    run_worker()
