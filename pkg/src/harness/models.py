"""
# src/harness/models.py
實驗數據模型：實驗配置、成本來源與神諭比對報告
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.config import get_config
from src.core.attainability import GuaranteeVector, MultiCost
from src.core.boosting import BoostConfig
from src.core.games import CostMatrix
from src.core.learners import Behavior


class ExperimentKind(str, Enum):
    """實驗類型"""

    DICHOTOMY_BINARY = "dichotomy_binary"
    MULTICHOTOMY = "multichotomy"
    REGION_TRACE = "region_trace"
    EQUIVALENCE = "equivalence"
    ORACLE = "oracle"


class CostPreset(str, Enum):
    ZERO_ONE = "zero_one"
    BINARY = "binary"
    RANDOM = "random"
    ENTRIES = "entries"
    FILE = "file"
    POPULATION_DRIVEN = "population_driven"


class CostSource(BaseModel):
    """成本矩陣的來源描述"""

    preset: CostPreset = Field(CostPreset.ZERO_ONE)
    k: int = Field(2, ge=2)
    entries: Optional[List[List[float]]] = None
    file: Optional[str] = None
    seed: Optional[int] = None
    w_plus: float = Field(1.0, ge=0.0, le=1.0)
    w_minus: float = Field(1.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_source(self) -> "CostSource":
        if self.preset == CostPreset.ENTRIES and self.entries is None:
            raise ValueError("preset = entries 需要提供 entries")
        if self.preset == CostPreset.FILE:
            if not self.file:
                raise ValueError("preset = file 需要提供 file")
            if not os.path.exists(self.file):
                raise ValueError(f"成本檔案不存在: {self.file}")
        if self.preset == CostPreset.RANDOM and self.seed is None:
            raise ValueError("preset = random 需要提供 seed")
        return self

    def build(self) -> List[CostMatrix]:
        """展開為一個或多個成本矩陣"""
        if self.preset == CostPreset.ZERO_ONE:
            return [CostMatrix.zero_one(self.k)]
        if self.preset == CostPreset.BINARY:
            return [CostMatrix.binary(w_plus=self.w_plus, w_minus=self.w_minus)]
        if self.preset == CostPreset.RANDOM:
            return [CostMatrix.random(self.k, np.random.default_rng(self.seed))]
        if self.preset == CostPreset.ENTRIES:
            return [CostMatrix(k=len(self.entries or []), entries=self.entries or [])]
        if self.preset == CostPreset.FILE:
            return list(MultiCost.load(self.file or "").costs)
        return list(MultiCost.population_driven().costs)


class ExperimentConfig(BaseModel):
    """實驗配置；seed 為必填"""

    experiment_id: str = Field(..., pattern=r"^[A-Za-z0-9_.\-]+$")
    kind: ExperimentKind
    seed: int
    costs: List[CostSource] = Field(default_factory=lambda: [CostSource()], min_length=1)
    guarantees: List[float] = Field(default_factory=list)
    relative: bool = Field(False, description="guarantees 為相對 V(w) 的偏移量")
    domain_size: int = Field(50, ge=1)
    sample_size: int = Field(400, ge=4)
    holdout_fraction: float = Field(default_factory=lambda: get_config().boosting.holdout_fraction, gt=0, lt=1)
    learner: Behavior = Field(Behavior.PLANTED_NOISE)
    pool_size: int = Field(20, ge=1)
    pool_noise: float = Field(0.1, ge=0.0, le=1.0)
    boost: Dict[str, Any] = Field(default_factory=dict)
    output_dir: Optional[str] = None
    resolution: int = Field(100, ge=2)
    alpha_grid: int = Field(400, ge=1)
    epsilon: float = Field(0.05, gt=0)
    oracle_step: float = Field(1e-2)
    trials: int = Field(10, ge=1)

    @field_validator("boost")
    @classmethod
    def _check_boost(cls, v: Dict[str, Any]) -> Dict[str, Any]:
        BoostConfig(**v)
        return v

    def cost_matrix(self) -> CostMatrix:
        """單目標實驗使用第一個成本矩陣"""
        return self.multi_cost().costs[0]

    def multi_cost(self) -> MultiCost:
        matrices: List[CostMatrix] = []
        for source in self.costs:
            matrices.extend(source.build())
        return MultiCost(costs=matrices)

    def guarantee_vector(self) -> GuaranteeVector:
        return GuaranteeVector(z=self.guarantees)

    def boost_config(self, seed: int) -> BoostConfig:
        return BoostConfig(**{**self.boost, "seed": seed})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


class OracleReport(BaseModel):
    """快速路徑與暴力神諭的比對"""

    quantity: str
    oracle_value: float
    fast_value: float
    discrepancy: float
    tolerance: float
    passed: bool

    @model_validator(mode="after")
    def _check_passed(self) -> "OracleReport":
        if self.passed != (self.discrepancy <= self.tolerance):
            raise ValueError("passed 必須等於 discrepancy ≤ tolerance")
        return self

    @classmethod
    def compare(cls, quantity: str, oracle_value: float, fast_value: float, tolerance: float) -> "OracleReport":
        gap = abs(oracle_value - fast_value)
        return cls(
            quantity=quantity,
            oracle_value=oracle_value,
            fast_value=fast_value,
            discrepancy=gap,
            tolerance=tolerance,
            passed=gap <= tolerance,
        )
