"""
# src/harness/oracle.py
暴力神諭：以 Δ_Y 網格窮舉計算賽局值，作為 LP 快速路徑的獨立基準
"""

import logging
import math
from itertools import combinations
from typing import Iterable, List, Optional

import numpy as np

from src.core.attainability import simplex_grid
from src.core.errors import CapacityError, InputError
from src.core.games import CostMatrix, _check_subset, game_value
from src.harness.models import OracleReport

logger = logging.getLogger(__name__)

ALLOWED_STEPS = (1e-2, 1e-3)
MAX_ORACLE_LABELS = 3


def oracle_game_value(w: CostMatrix, subset: Iterable[int], grid_step: float = 1e-2) -> float:
    """
    min_{p∈Δ_Y 網格} max_{q∈Δ_J 網格} w(p,q)

    對固定 p，w(p,q) 在 q 上是線性的，Δ_J 網格的最大值落在頂點上。
    """
    if w.k > MAX_ORACLE_LABELS:
        raise CapacityError(f"神諭只支援 k ≤ {MAX_ORACLE_LABELS}，實際 k = {w.k}", {"k": w.k})
    if not any(math.isclose(grid_step, step) for step in ALLOWED_STEPS):
        raise InputError(f"網格步長 {grid_step} 必須為 1e-2 或 1e-3")
    labels = _check_subset(w.k, subset)
    if len(labels) == 1:
        return 0.0
    grid = simplex_grid(w.k, int(round(1.0 / grid_step)))
    return float((grid @ w.matrix[:, list(labels)]).max(axis=1).min())


def check_game_value(
    w: CostMatrix, subset: Iterable[int], grid_step: float = 1e-2, tolerance: Optional[float] = None
) -> OracleReport:
    """以 2 倍步長為預設容差比對 LP 與網格"""
    labels = _check_subset(w.k, subset)
    report = OracleReport.compare(
        quantity=f"V_{list(labels)}",
        oracle_value=oracle_game_value(w, labels, grid_step),
        fast_value=game_value(w, labels).value,
        tolerance=2 * grid_step if tolerance is None else tolerance,
    )
    if not report.passed:
        logger.warning(f"⚠️ 神諭不一致 {report.quantity}: 差異 {report.discrepancy:.3e}")
    return report


def check_all_subsets(w: CostMatrix, grid_step: float = 1e-2) -> List[OracleReport]:
    return [
        check_game_value(w, subset, grid_step)
        for size in range(1, w.k + 1)
        for subset in combinations(range(w.k), size)
    ]
