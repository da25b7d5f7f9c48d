"""
# src/core/games.py
賽局模組：成本矩陣、(受限)賽局值 V_J(w)、極小極大策略、門檻階梯與邊際

標籤一律以 0 起算；二元情形中索引 0 代表 −1、索引 1 代表 +1，
因此 w₋ = w(−1,+1) = entries[0][1]，w₊ = w(+1,−1) = entries[1][0]。
"""

import json
import logging
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from src.config import get_config
from src.core.errors import CapacityError, InputError
from src.core.lp import LinearProgram, Sense, solve

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


class CostMatrix(BaseModel):
    """k×k 成本矩陣，entries[i][j] 為真實標籤 j 時預測 i 的成本"""

    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=2, description="標籤數")
    entries: List[List[float]] = Field(..., description="逐列成本")

    @model_validator(mode="after")
    def _check_entries(self) -> "CostMatrix":
        cap = get_config().games.max_labels
        if self.k > cap:
            raise ValueError(f"標籤數 {self.k} 超過上限 {cap}")
        if len(self.entries) != self.k or any(len(row) != self.k for row in self.entries):
            raise ValueError(f"成本矩陣必須為 {self.k}×{self.k}")
        for i, row in enumerate(self.entries):
            for j, value in enumerate(row):
                if not np.isfinite(value) or value < 0.0 or value > 1.0:
                    raise ValueError(f"成本 w({i},{j}) = {value} 不在 [0,1] 內")
            if row[i] != 0.0:
                raise ValueError(f"對角線 w({i},{i}) 必須為 0")
        return self

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    @property
    def labels(self) -> Subset:
        return tuple(range(self.k))

    @property
    def w_minus(self) -> float:
        """二元情形：w(−1,+1)，偽陰性成本"""
        self._require_binary()
        return self.entries[0][1]

    @property
    def w_plus(self) -> float:
        """二元情形：w(+1,−1)，偽陽性成本"""
        self._require_binary()
        return self.entries[1][0]

    def key(self) -> Tuple[Tuple[float, ...], ...]:
        return tuple(tuple(row) for row in self.entries)

    def _require_binary(self) -> None:
        if self.k != 2:
            raise InputError(f"需要二元成本矩陣，實際 k = {self.k}")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "CostMatrix":
        """原樣建立；超出 [0,1] 或對角線非 0 的元素交由驗證拒絕"""
        arr = np.asarray(array, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InputError(f"成本矩陣必須為方陣，實際形狀 {arr.shape}")
        return cls(k=arr.shape[0], entries=arr.tolist())

    @classmethod
    def clipped_from_array(cls, array: np.ndarray) -> "CostMatrix":
        """截斷到 [0,1] 並把對角線歸零後建立；用於吸收純量化的捨入誤差"""
        arr = np.array(array, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InputError(f"成本矩陣必須為方陣，實際形狀 {arr.shape}")
        arr = np.clip(arr, 0.0, 1.0)
        np.fill_diagonal(arr, 0.0)
        return cls.from_array(arr)

    @classmethod
    def zero_one(cls, k: int) -> "CostMatrix":
        return cls.from_array(1.0 - np.eye(k))

    @classmethod
    def binary(cls, w_plus: float, w_minus: float) -> "CostMatrix":
        return cls(k=2, entries=[[0.0, w_minus], [w_plus, 0.0]])

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> "CostMatrix":
        arr = rng.uniform(0.0, 1.0, size=(k, k))
        np.fill_diagonal(arr, 0.0)
        return cls.from_array(arr)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CostMatrix":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.model_dump(), f, indent=2)


class SimplexDist(BaseModel):
    """有限索引集合上的機率向量"""

    model_config = ConfigDict(frozen=True)

    probs: List[float] = Field(..., min_length=1)

    @field_validator("probs")
    @classmethod
    def _check_probs(cls, v: List[float]) -> List[float]:
        if any(not np.isfinite(p) or p < 0.0 for p in v):
            raise ValueError("機率必須為非負有限值")
        if abs(sum(v) - 1.0) > 1e-12:
            raise ValueError(f"機率總和 {sum(v)} 不為 1")
        return v

    @property
    def array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    def __len__(self) -> int:
        return len(self.probs)

    @classmethod
    def from_weights(cls, weights: Union[Sequence[float], np.ndarray]) -> "SimplexDist":
        """將非負權重正規化；微小負值視為捨入誤差並截為 0"""
        arr = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        total = arr.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise InputError("權重總和必須為正")
        return cls(probs=(arr / total).tolist())

    @classmethod
    def uniform(cls, n: int) -> "SimplexDist":
        return cls.from_weights(np.ones(n))

    @classmethod
    def point(cls, n: int, index: int) -> "SimplexDist":
        probs = [0.0] * n
        probs[index] = 1.0
        return cls(probs=probs)


class GameValue(BaseModel):
    """受限賽局值與達成的預測者策略"""

    value: float = Field(..., ge=0.0, le=1.0)
    minimax_strategy: SimplexDist
    restriction: List[int]


class ThresholdLadder(BaseModel):
    """門檻階梯 v₁ < … < v_τ 與粗化門檻 v_s̲、v_s̄（s = 2…k）"""

    k: int
    levels: List[float]
    witnesses: List[List[List[int]]]
    coarse_min: List[float]
    coarse_max: List[float]

    _values: Dict[Subset, float] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context: Any) -> None:
        # 自 JSON 載入時由見證重建，各子集合取其所屬階梯的值
        if not self._values:
            self._values = {
                tuple(sorted(subset)): level
                for level, group in zip(self.levels, self.witnesses)
                for subset in group
            }

    @property
    def tau(self) -> int:
        return len(self.levels)

    def value_of(self, subset: Iterable[int]) -> float:
        """查詢 V_J(w)；空集合依慣例為 0"""
        key = tuple(sorted(set(subset)))
        if not key:
            return 0.0
        return self._values[key]

    def v_min(self, s: int) -> float:
        """v_s̲：|J| = s 的最小值（s = 1 時為 0）"""
        if s <= 1:
            return 0.0
        return self.coarse_min[s - 2]

    def v_max(self, s: int) -> float:
        """v_s̄：|J| = s 的最大值（s = 1 時為 0）"""
        if s <= 1:
            return 0.0
        return self.coarse_max[s - 2]


def _check_subset(k: int, subset: Iterable[int]) -> Subset:
    labels = tuple(sorted(set(int(j) for j in subset)))
    if not labels:
        raise InputError("子集合 J 不可為空")
    if labels[0] < 0 or labels[-1] >= k:
        raise InputError(f"子集合 {list(labels)} 超出標籤範圍 0…{k - 1}")
    return labels


def expected_cost(
    w: CostMatrix,
    p: Union[SimplexDist, np.ndarray],
    q: Union[SimplexDist, np.ndarray],
) -> float:
    """w(p,q) = Σ_{i,j} p_i q_j w(i,j)"""
    p_arr = p.array if isinstance(p, SimplexDist) else np.asarray(p, dtype=float)
    q_arr = q.array if isinstance(q, SimplexDist) else np.asarray(q, dtype=float)
    if p_arr.size != w.k or q_arr.size != w.k:
        raise InputError(f"分佈長度 ({p_arr.size}, {q_arr.size}) 與 k = {w.k} 不一致")
    return float(p_arr @ w.matrix @ q_arr)


@lru_cache(maxsize=65536)
def _solve_restricted_game(
    entries: Tuple[Tuple[float, ...], ...], subset: Subset
) -> Tuple[float, Tuple[float, ...]]:
    W = np.array(entries, dtype=float)
    k = W.shape[0]
    if len(subset) == 1:
        strategy = [0.0] * k
        strategy[subset[0]] = 1.0
        return 0.0, tuple(strategy)

    # 變數 (p_0 … p_{k-1}, t)；最小化 t
    objective = np.zeros(k + 1)
    objective[-1] = 1.0
    rows = np.zeros((len(subset) + 1, k + 1))
    for r, j in enumerate(subset):
        rows[r, :k] = W[:, j]
        rows[r, -1] = -1.0
    rows[-1, :k] = 1.0
    rhs = np.zeros(len(subset) + 1)
    rhs[-1] = 1.0
    senses = [Sense.LE] * len(subset) + [Sense.EQ]
    solution = solve(LinearProgram(objective, rows, rhs, senses))

    p = np.clip(solution.primal[:k], 0.0, None)
    p = p / p.sum()
    value = float(np.clip(solution.optimal_value, 0.0, 1.0))
    return value, tuple(p.tolist())


def game_value(w: CostMatrix, subset: Optional[Iterable[int]] = None) -> GameValue:
    """
    計算 V_J(w) = min_{p∈Δ_Y} max_{y∈J} w(p, y)

    Args:
        w: 成本矩陣
        subset: 子集合 J（預設為全部標籤，即 V(w)）

    Returns:
        GameValue: 賽局值與極小極大策略
    """
    labels = _check_subset(w.k, w.labels if subset is None else subset)
    value, strategy = _solve_restricted_game(w.key(), labels)
    return GameValue(
        value=value,
        minimax_strategy=SimplexDist.from_weights(strategy),
        restriction=list(labels),
    )


def environment_strategy(w: CostMatrix, subset: Optional[Iterable[int]] = None) -> SimplexDist:
    """
    環境方的極大極小策略 q* = argmax_{q∈Δ_J} min_p w(p, q)

    以 Δ_Y 上的分佈返回（支撐在 J 內）。
    """
    labels = _check_subset(w.k, w.labels if subset is None else subset)
    W = w.matrix
    size = len(labels)
    if size == 1:
        return SimplexDist.point(w.k, labels[0])

    # 變數 (q_J, v)；最大化 v，使每個預測 i 的成本 ≥ v
    objective = np.zeros(size + 1)
    objective[-1] = 1.0
    rows = np.zeros((w.k + 1, size + 1))
    rows[: w.k, :size] = W[:, list(labels)]
    rows[: w.k, -1] = -1.0
    rows[-1, :size] = 1.0
    rhs = np.zeros(w.k + 1)
    rhs[-1] = 1.0
    senses = [Sense.GE] * w.k + [Sense.EQ]
    solution = solve(LinearProgram(objective, rows, rhs, senses, maximize=True))

    q = np.zeros(w.k)
    q[list(labels)] = np.clip(solution.primal[:size], 0.0, None)
    return SimplexDist.from_weights(q)


def threshold_ladder(w: CostMatrix) -> ThresholdLadder:
    """
    列舉所有非空子集合的 V_J(w)，去重後形成門檻階梯

    Raises:
        CapacityError: k 超過列舉上限
    """
    config = get_config().games
    if w.k > config.max_labels:
        raise CapacityError(
            f"k = {w.k} 超過子集合列舉上限 {config.max_labels}",
            {"k": w.k, "max_labels": config.max_labels},
        )

    values: Dict[Subset, float] = {}
    for size in range(1, w.k + 1):
        for subset in combinations(range(w.k), size):
            values[subset] = _solve_restricted_game(w.key(), subset)[0]

    ordered = sorted(values.items(), key=lambda item: (item[1], len(item[0]), item[0]))
    levels: List[float] = []
    witnesses: List[List[List[int]]] = []
    for subset, value in ordered:
        if levels and value - levels[-1] <= config.dedup_tol:
            witnesses[-1].append(list(subset))
        else:
            levels.append(value)
            witnesses.append([list(subset)])

    coarse_min: List[float] = []
    coarse_max: List[float] = []
    for size in range(2, w.k + 1):
        sized = [v for s, v in values.items() if len(s) == size]
        coarse_min.append(min(sized))
        coarse_max.append(max(sized))
    # 單調性在理論上成立；此處消除 1e-12 級的捨入抖動
    coarse_min = np.maximum.accumulate(coarse_min).tolist()
    coarse_max = np.maximum.accumulate(coarse_max).tolist()

    ladder = ThresholdLadder(
        k=w.k,
        levels=levels,
        witnesses=witnesses,
        coarse_min=coarse_min,
        coarse_max=coarse_max,
    )
    ladder._values = values
    logger.debug(f"門檻階梯完成：k = {w.k}，τ = {ladder.tau}")
    return ladder


def bucket_of(ladder: ThresholdLadder, z: float) -> int:
    """返回滿足 v_n ≤ z 的最大 n（1 起算）"""
    if z < 0.0:
        raise InputError(f"保證值 z = {z} 不可為負")
    tol = get_config().games.dedup_tol
    return int(np.searchsorted(np.asarray(ladder.levels), z + tol, side="right"))


def margin(w: CostMatrix, z: float, ladder: Optional[ThresholdLadder] = None) -> float:
    """邊際 γ：z 到其上方下一個階梯值的距離；不存在時為 0"""
    if z < 0.0:
        raise InputError(f"保證值 z = {z} 不可為負")
    ladder = ladder or threshold_ladder(w)
    tol = get_config().games.dedup_tol
    above = [v for v in ladder.levels if v > z + tol]
    return above[0] - z if above else 0.0
