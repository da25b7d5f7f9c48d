"""
# src/api/models.py
API 數據模型：定義API請求與響應的數據結構
"""

from enum import Enum
from typing import Any, Dict, List, Optional
from datetime import datetime

from pydantic import BaseModel, Field

from src.config import Priority
from src.core.attainability import AttainMode, GuaranteeVector, MultiCost
from src.core.games import CostMatrix
from src.harness.models import ExperimentConfig


class JobStatus(str, Enum):
    """任務狀態枚舉"""

    QUEUED = "queued"
    STARTED = "started"
    FINISHED = "finished"
    FAILED = "failed"
    DEFERRED = "deferred"
    SCHEDULED = "scheduled"
    STOPPED = "stopped"
    CANCELED = "canceled"


class GameValueRequest(BaseModel):
    """賽局值請求；subset 為 0 起算的標籤"""

    cost: CostMatrix
    subset: Optional[List[int]] = Field(None, description="子集合 J（預設為全部標籤）")


class GameValueResponse(BaseModel):
    value: float
    minimax_strategy: List[float]
    subset: List[int]


class ThresholdsRequest(BaseModel):
    cost: CostMatrix


class VerdictRequest(BaseModel):
    """可達性判定請求"""

    costs: MultiCost
    z: GuaranteeVector
    subset: Optional[List[int]] = Field(None, description="子集合 J（預設為 Y，即硬幣可達性）")
    mode: AttainMode = Field(AttainMode.AUTO)


class PrecedesRequest(BaseModel):
    costs: MultiCost
    z: GuaranteeVector
    z_prime: GuaranteeVector


class PrecedesResponse(BaseModel):
    precedes: bool
    separating_subsets: List[List[int]] = Field(default_factory=list)


class ExperimentRequest(BaseModel):
    """實驗提交請求"""

    config: ExperimentConfig
    priority: Priority = Field(Priority.MEDIUM, description="任務優先級")


class JobResponse(BaseModel):
    """任務響應模型"""

    job_id: str = Field(..., description="任務ID")
    status: JobStatus = Field(..., description="任務狀態")
    priority: Priority = Field(..., description="任務優先級")
    created_at: Optional[datetime] = Field(None, description="創建時間")
    started_at: Optional[datetime] = Field(None, description="開始時間")
    ended_at: Optional[datetime] = Field(None, description="結束時間")
    result: Optional[Dict[str, Any]] = Field(None, description="任務結果")
    error: Optional[str] = Field(None, description="錯誤信息")
