"""
# src/api/routes.py
API 路由處理：賽局值、門檻階梯、可達性判定與實驗任務
"""

import logging
from typing import Any, Dict

from fastapi import APIRouter, HTTPException, Path, status as http_status

from src.api.models import (
    ExperimentRequest,
    GameValueRequest,
    GameValueResponse,
    JobResponse,
    JobStatus,
    PrecedesRequest,
    PrecedesResponse,
    ThresholdsRequest,
    VerdictRequest,
)
from src.config import Priority
from src.core.attainability import (
    AttainabilityVerdict,
    is_coin_attainable,
    is_dice_attainable,
    separating_subsets,
)
from src.core.games import ThresholdLadder, game_value, threshold_ladder
from src.core.queue import get_queue_manager

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/games/value", response_model=GameValueResponse, summary="計算 V_J(w)")
def compute_game_value(request: GameValueRequest) -> GameValueResponse:
    value = game_value(request.cost, request.subset)
    return GameValueResponse(
        value=value.value,
        minimax_strategy=value.minimax_strategy.probs,
        subset=value.restriction,
    )


@router.post("/games/thresholds", response_model=ThresholdLadder, summary="門檻階梯")
def compute_thresholds(request: ThresholdsRequest) -> ThresholdLadder:
    return threshold_ladder(request.cost)


@router.post("/attainability/verdict", response_model=AttainabilityVerdict, summary="硬幣/骰子可達性")
def attainability_verdict(request: VerdictRequest) -> AttainabilityVerdict:
    """
    判定 𝒛 是否為 J-骰子可達（未指定 J 時為硬幣可達）

    返回判定與見證：可達時附證書，不可達時附分離的 α
    """
    if request.subset is None:
        return is_coin_attainable(request.costs, request.z, request.mode)
    return is_dice_attainable(request.costs, request.z, request.subset, request.mode)


@router.post("/attainability/precedes", response_model=PrecedesResponse, summary="偏序 𝒛 ⪯ 𝒛′")
def attainability_precedes(request: PrecedesRequest) -> PrecedesResponse:
    gaps = separating_subsets(request.costs, request.z, request.z_prime)
    return PrecedesResponse(precedes=not gaps, separating_subsets=[list(s) for s in gaps])


@router.post(
    "/experiments",
    response_model=JobResponse,
    status_code=http_status.HTTP_201_CREATED,
    summary="提交實驗任務",
)
async def submit_experiment(request: ExperimentRequest) -> JobResponse:
    """
    把實驗配置放入對應優先級的隊列

    - **config**: 實驗配置（seed 必填）
    - **priority**: 任務優先級 (high, medium, low)
    """
    try:
        job = get_queue_manager().enqueue_experiment(
            request.config.model_dump(mode="json"), priority=request.priority
        )
    except Exception as e:
        logger.error(f"提交實驗失敗: {e}")
        raise HTTPException(
            status_code=http_status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"提交實驗失敗: {str(e)}",
        )
    return JobResponse(job_id=job.id, status=JobStatus.QUEUED, priority=request.priority, created_at=job.created_at)


@router.get("/experiments/{job_id}", response_model=JobResponse, summary="獲取實驗任務狀態")
async def get_experiment(job_id: str = Path(..., description="任務ID")) -> JobResponse:
    job = get_queue_manager().get_job(job_id)
    if not job:
        raise HTTPException(status_code=http_status.HTTP_404_NOT_FOUND, detail=f"找不到任務 {job_id}")

    status_str = job.get_status()
    try:
        job_status = JobStatus(status_str)
    except ValueError:
        job_status = JobStatus.QUEUED
    try:
        priority = Priority(getattr(job, "origin", "medium"))
    except ValueError:
        priority = Priority.MEDIUM

    result: Any = None
    error = None
    if job_status == JobStatus.FINISHED:
        result = job.return_value() if hasattr(job, "return_value") else job.result
    elif job_status == JobStatus.FAILED:
        error = str(job.exc_info) if job.exc_info else "未知錯誤"

    return JobResponse(
        job_id=job_id,
        status=job_status,
        priority=priority,
        created_at=job.created_at,
        started_at=getattr(job, "started_at", None),
        ended_at=getattr(job, "ended_at", None),
        result=result if isinstance(result, dict) else None,
        error=error,
    )


@router.get("/health", summary="健康檢查", response_model=dict)
async def health_check() -> Dict[str, str]:
    return {"status": "ok"}
