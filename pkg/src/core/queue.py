"""
# src/core/queue.py
隊列管理模組：把實驗任務放進基於 Redis 的 RQ 隊列
"""

import logging
from typing import Any, Dict, Optional

import rq.serializers
from redis import Redis
from rq import Queue
from rq.job import Job

from src.config import Priority, get_config

logger = logging.getLogger(__name__)


class QueueManager:
    """隊列管理器，處理實驗任務入列和查詢（單例模式）"""

    _instance: Optional["QueueManager"] = None

    def __new__(cls) -> "QueueManager":
        if cls._instance is None:
            cls._instance = super(QueueManager, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self) -> None:
        if getattr(self, "_initialized", False):
            return

        config = get_config()
        self.redis = Redis(
            host=config.redis.host,
            port=config.redis.port,
            db=config.redis.db,
            password=config.redis.password,
        )

        # 每個優先級一個隊列
        self.queues: Dict[str, Queue] = {
            name: Queue(
                name=name,
                connection=self.redis,
                default_timeout=config.worker.timeout,
                serializer=rq.serializers.JSONSerializer(),
            )
            for name in config.worker.queues
        }

        self._initialized = True
        logger.info(f"隊列管理器初始化完成，隊列：{list(self.queues.keys())}")

    def enqueue(self, func: Any, *args: Any, priority: Priority = Priority.MEDIUM, **kwargs: Any) -> Job:
        """
        任務入列

        Args:
            func: 要執行的函數
            *args: 函數的位置參數
            priority: 任務優先級
            **kwargs: 函數的關鍵字參數

        Returns:
            Job: 入列的任務
        """
        if priority.value not in self.queues:
            raise KeyError(f"未配置 {priority.value} 優先級隊列")
        job = self.queues[priority.value].enqueue(func, *args, **kwargs)
        logger.info(f"任務 {job.id} 已入列至 {priority.value} 優先級隊列")
        return job

    def enqueue_experiment(self, config: Dict[str, Any], priority: Priority = Priority.MEDIUM) -> Job:
        """把實驗配置（JSON 字典）交給 run_experiment_job"""
        from src.core.job import run_experiment_job

        return self.enqueue(run_experiment_job, config, priority=priority)

    def get_job(self, job_id: str) -> Optional[Job]:
        """獲取任務；找不到時返回 None"""
        try:
            return Job.fetch(job_id, connection=self.redis, serializer=rq.serializers.JSONSerializer())
        except Exception as e:
            logger.error(f"獲取任務 {job_id} 失敗: {e}")
            return None


def get_queue_manager() -> QueueManager:
    """獲取隊列管理器"""
    return QueueManager()
