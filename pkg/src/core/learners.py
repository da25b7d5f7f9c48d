"""
# src/core/learners.py
弱學習器模組：有限實例、假設、期望損失，以及實驗用的合成學習器

所有學習器在建構後不可變；fit 只依賴輸入樣本與傳入的隨機數生成器。
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import get_config
from src.core.attainability import (
    GuaranteeVector,
    MultiCost,
    coin_response,
    is_coin_attainable,
    scalarize,
)
from src.core.errors import ContractError, InputError
from src.core.games import CostMatrix, SimplexDist, _check_subset, game_value

logger = logging.getLogger(__name__)

Distribution = Union[SimplexDist, np.ndarray, Sequence[float]]


class Instance(BaseModel):
    """有限定義域 X = {0,…,N−1} 上的目標函數 f"""

    model_config = ConfigDict(frozen=True)

    domain_size: int = Field(..., ge=1)
    k: int = Field(..., ge=2)
    target: List[int]

    @model_validator(mode="after")
    def _check_target(self) -> "Instance":
        if len(self.target) != self.domain_size:
            raise ValueError(f"target 長度 {len(self.target)} 與 domain_size {self.domain_size} 不一致")
        if any(y < 0 or y >= self.k for y in self.target):
            raise ValueError(f"target 含有超出 0…{self.k - 1} 的標籤")
        return self

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.target, dtype=int)

    @classmethod
    def random(
        cls,
        domain_size: int,
        k: int,
        rng: np.random.Generator,
        probs: Optional[Distribution] = None,
        subset: Optional[Iterable[int]] = None,
    ) -> "Instance":
        """依標籤分佈 probs（或子集合上的均勻分佈）隨機產生目標"""
        if probs is None:
            support = _check_subset(k, range(k) if subset is None else subset)
            weights = np.zeros(k)
            weights[list(support)] = 1.0
        else:
            weights = _as_array(probs)
        dist = SimplexDist.from_weights(weights).array
        return cls(domain_size=domain_size, k=k, target=rng.choice(k, size=domain_size, p=dist).tolist())

    @classmethod
    def stratified(cls, domain_size: int, k: int, probs: Distribution) -> "Instance":
        """
        以最大餘數法分配標籤，使目標在均勻分佈下的邊際盡量接近 probs

        點依標籤排序，標籤數量為 ⌊N·q_y⌋ 加上餘數最大者的補足。
        """
        q = SimplexDist.from_weights(_as_array(probs)).array
        if q.size != k:
            raise InputError(f"分佈長度 {q.size} 與 k = {k} 不一致")
        raw = q * domain_size
        counts = np.floor(raw).astype(int)
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[: domain_size - counts.sum()]] += 1
        return cls(domain_size=domain_size, k=k, target=np.repeat(np.arange(k), counts).tolist())

    def draw(
        self, m: int, rng: np.random.Generator, distribution: Optional[Distribution] = None
    ) -> "Sample":
        """從 D（預設均勻）抽取 m 個帶標籤樣本"""
        if m < 1:
            raise InputError(f"樣本數 m = {m} 必須為正")
        if distribution is None:
            points = rng.integers(0, self.domain_size, size=m)
        else:
            points = rng.choice(self.domain_size, size=m, p=self._check_distribution(distribution))
        return Sample(points=points.tolist(), labels=self.labels[points].tolist(), domain_size=self.domain_size, k=self.k)

    def marginal(self, distribution: Optional[Distribution] = None) -> np.ndarray:
        """D∘f 的標籤邊際"""
        D = self._check_distribution(distribution)
        return np.bincount(self.labels, weights=D, minlength=self.k)

    def _check_distribution(self, distribution: Optional[Distribution]) -> np.ndarray:
        if distribution is None:
            return np.full(self.domain_size, 1.0 / self.domain_size)
        D = _as_array(distribution)
        if D.shape != (self.domain_size,):
            raise InputError(f"分佈長度 {D.size} 與 domain_size {self.domain_size} 不一致")
        return D

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Instance":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.model_dump(), f)


class Sample(BaseModel):
    """帶標籤樣本 S = ((x₁,y₁),…,(x_m,y_m))"""

    model_config = ConfigDict(frozen=True)

    points: List[int] = Field(..., min_length=1)
    labels: List[int] = Field(..., min_length=1)
    domain_size: int = Field(..., ge=1)
    k: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _check_lengths(self) -> "Sample":
        if len(self.points) != len(self.labels):
            raise ValueError("points 與 labels 長度不一致")
        return self

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def point_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=int)

    @property
    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=int)

    def empirical_distribution(self) -> np.ndarray:
        """樣本在定義域上的經驗分佈"""
        return np.bincount(self.point_array, minlength=self.domain_size) / self.m

    def take(self, indices: Union[np.ndarray, Sequence[int]]) -> "Sample":
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0:
            raise InputError("子樣本不可為空")
        # 子樣本沿用已驗證的欄位
        return Sample.model_construct(
            points=self.point_array[idx].tolist(),
            labels=self.label_array[idx].tolist(),
            domain_size=self.domain_size,
            k=self.k,
        )

    def split(self, fraction: float, rng: np.random.Generator) -> Tuple["Sample", "Sample"]:
        """隨機切分為 (訓練, 留出)；fraction 為留出比例"""
        if not 0.0 < fraction < 1.0:
            raise InputError(f"留出比例 {fraction} 必須介於 0 與 1 之間")
        holdout = int(round(self.m * fraction))
        if holdout < 1 or holdout >= self.m:
            raise InputError(f"樣本數 {self.m} 不足以切分出比例 {fraction} 的留出集")
        order = rng.permutation(self.m)
        return self.take(np.sort(order[holdout:])), self.take(np.sort(order[:holdout]))


class HypothesisKind(str, Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"
    RANDOM_GUESS = "random_guess"


class Hypothesis:
    """定義域上的預測器；各類型皆可展開為 N×k 預測分佈表"""

    def __init__(self, kind: HypothesisKind, domain_size: int, k: int, data: np.ndarray) -> None:
        self.kind = kind
        self.domain_size = domain_size
        self.k = k
        self._data = data
        self._data.setflags(write=False)

    @classmethod
    def deterministic(cls, labels: Union[np.ndarray, Sequence[int]], k: int) -> "Hypothesis":
        arr = np.asarray(labels, dtype=int)
        if arr.ndim != 1 or arr.size == 0 or arr.min() < 0 or arr.max() >= k:
            raise InputError(f"確定性假設的標籤必須在 0…{k - 1} 內")
        return cls(HypothesisKind.DETERMINISTIC, arr.size, k, arr.copy())

    @classmethod
    def stochastic(cls, table: np.ndarray) -> "Hypothesis":
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or np.any(arr < -1e-12) or not np.allclose(arr.sum(axis=1), 1.0, atol=1e-9):
            raise InputError("隨機假設的每一列都必須是 Δ_Y 上的分佈")
        arr = np.clip(arr, 0.0, None)
        return cls(HypothesisKind.STOCHASTIC, arr.shape[0], arr.shape[1], arr / arr.sum(axis=1, keepdims=True))

    @classmethod
    def random_guess(cls, p: Distribution, domain_size: int) -> "Hypothesis":
        """與輸入無關的硬幣預測器 h_p"""
        arr = SimplexDist.from_weights(_as_array(p)).array
        return cls(HypothesisKind.RANDOM_GUESS, domain_size, arr.size, arr)

    @property
    def table(self) -> np.ndarray:
        """N×k 表：第 x 列為 h(x) 的預測分佈"""
        if self.kind == HypothesisKind.DETERMINISTIC:
            out = np.zeros((self.domain_size, self.k))
            out[np.arange(self.domain_size), self._data] = 1.0
            return out
        if self.kind == HypothesisKind.RANDOM_GUESS:
            return np.tile(self._data, (self.domain_size, 1))
        return self._data.copy()

    def distribution(self, x: int) -> np.ndarray:
        if self.kind == HypothesisKind.DETERMINISTIC:
            out = np.zeros(self.k)
            out[self._data[x]] = 1.0
            return out
        if self.kind == HypothesisKind.RANDOM_GUESS:
            return self._data.copy()
        return self._data[x].copy()

    def predict(self, points: Union[np.ndarray, Sequence[int]], rng: np.random.Generator) -> np.ndarray:
        """對每個點抽出一個預測標籤"""
        idx = np.asarray(points, dtype=int)
        if self.kind == HypothesisKind.DETERMINISTIC:
            return self._data[idx].copy()
        rows = self.table[idx]
        cdf = np.cumsum(rows, axis=1)
        draws = rng.random(idx.size)[:, None]
        return np.minimum((draws >= cdf).sum(axis=1), self.k - 1)

    def to_dict(self) -> Dict[str, Any]:
        """以明確表格序列化"""
        return {"kind": self.kind.value, "domain_size": self.domain_size, "k": self.k, "data": self._data.tolist()}

    def __repr__(self) -> str:
        return f"Hypothesis(kind={self.kind.value}, domain_size={self.domain_size}, k={self.k})"


class LossReport(BaseModel):
    """各目標的期望損失 L_D^{w_i}(h)"""

    losses: List[float]
    distribution: str = Field(default="uniform")


def _as_array(values: Distribution) -> np.ndarray:
    return values.array if isinstance(values, SimplexDist) else np.asarray(values, dtype=float)


def _as_multi(w: Union[CostMatrix, MultiCost]) -> MultiCost:
    return w if isinstance(w, MultiCost) else MultiCost.single(w)


def _as_guarantee(z: Union[float, GuaranteeVector, Sequence[float]]) -> GuaranteeVector:
    if isinstance(z, GuaranteeVector):
        return z
    if isinstance(z, (int, float)):
        return GuaranteeVector.of(float(z))
    return GuaranteeVector(z=[float(v) for v in z])


def _check_shapes(w: CostMatrix, h: Hypothesis, inst: Instance) -> None:
    if h.k != w.k or inst.k != w.k or h.domain_size != inst.domain_size:
        raise InputError(
            f"維度不一致：w.k = {w.k}，h = ({h.domain_size}, {h.k})，實例 = ({inst.domain_size}, {inst.k})"
        )


def loss(w: CostMatrix, h: Hypothesis, inst: Instance, D: Optional[Distribution] = None) -> float:
    """
    L_D^w(h) = Σ_x D(x)·𝔼_{ŷ∼h(x)} w(ŷ, f(x))，對隨機假設取精確期望

    Args:
        D: 定義域上的分佈（預設均勻）
    """
    _check_shapes(w, h, inst)
    weights = inst._check_distribution(D)
    if h.kind == HypothesisKind.RANDOM_GUESS:
        return float(h.distribution(0) @ w.matrix @ inst.marginal(weights))
    per_point = (h.table @ w.matrix)[np.arange(inst.domain_size), inst.labels]
    return float(weights @ per_point)


def loss_report(
    w: Union[CostMatrix, MultiCost], h: Hypothesis, inst: Instance, D: Optional[Distribution] = None
) -> LossReport:
    multi = _as_multi(w)
    return LossReport(
        losses=[loss(cost, h, inst, D) for cost in multi.costs],
        distribution="uniform" if D is None else "custom",
    )


def empirical_loss(w: CostMatrix, h: Hypothesis, sample: Sample) -> float:
    """樣本上的平均成本 (1/m)Σ_i 𝔼 w(h(x_i), y_i)"""
    if h.k != w.k or sample.k != w.k or h.domain_size != sample.domain_size:
        raise InputError("假設、樣本與成本矩陣的維度不一致")
    per_point = (h.table @ w.matrix)[sample.point_array, sample.label_array]
    return float(per_point.mean())


def m0(epsilon: float, delta: float) -> int:
    """樣本複雜度 m₀(ε, δ) = ⌈c·ln(1/δ)/ε²⌉"""
    if epsilon <= 0.0:
        raise InputError(f"ε = {epsilon} 必須為正")
    if not 0.0 < delta < 1.0:
        raise InputError(f"δ = {delta} 必須介於 0 與 1 之間")
    c = get_config().learners.m0_constant
    return int(math.ceil(c * math.log(1.0 / delta) / epsilon**2))


class Behavior(str, Enum):
    """合成學習器的行為類型"""

    POOL_ERM = "pool_erm"
    PLANTED_NOISE = "planted_noise"
    COIN_TRIVIAL = "coin_trivial"
    COIN_ON_J = "coin_on_J"
    LIST_DERIVED = "list_derived"


class WeakLearnerSpec(ABC):
    """宣告 (𝒘,𝒛) 保證的學習器"""

    def __init__(
        self,
        w: Union[CostMatrix, MultiCost],
        z: Union[float, GuaranteeVector, Sequence[float]],
        behavior: Behavior,
    ) -> None:
        self.w = _as_multi(w)
        self.z = _as_guarantee(z)
        if self.z.r != self.w.r:
            raise InputError(f"保證向量長度 {self.z.r} 與目標數 r = {self.w.r} 不一致")
        self.behavior = behavior

    @property
    def guarantee(self) -> Tuple[MultiCost, GuaranteeVector]:
        return self.w, self.z

    @property
    def cost(self) -> CostMatrix:
        """單目標學習器的成本矩陣"""
        if self.w.r != 1:
            raise ContractError(f"需要單目標學習器，實際 r = {self.w.r}", {"r": self.w.r})
        return self.w.costs[0]

    @property
    def threshold(self) -> float:
        if self.z.r != 1:
            raise ContractError(f"需要單目標保證，實際 r = {self.z.r}", {"r": self.z.r})
        return self.z.z[0]

    def sample_complexity(self, epsilon: float, delta: float) -> int:
        return m0(epsilon, delta)

    @abstractmethod
    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        """依樣本返回假設"""

    def describe(self) -> Dict[str, Any]:
        return {
            "learner": type(self).__name__,
            "behavior": self.behavior.value,
            "r": self.w.r,
            "k": self.w.k,
            "z": list(self.z.z),
        }


class CoinTrivialLearner(WeakLearnerSpec):
    """估計標籤邊際 q̂，回應一枚滿足全部目標的硬幣"""

    def __init__(self, w: Union[CostMatrix, MultiCost], z: Union[float, GuaranteeVector, Sequence[float]]) -> None:
        super().__init__(w, z, Behavior.COIN_TRIVIAL)
        verdict = is_coin_attainable(self.w, self.z)
        if not verdict.attainable:
            raise ContractError(
                f"𝒛 = {list(self.z.z)} 不是硬幣可達的，無法建構平凡學習器",
                {"alpha_witness": verdict.alpha_witness, "witness_gap": verdict.witness_gap},
            )

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        q_hat = np.bincount(sample.label_array, minlength=self.w.k) / sample.m
        uniform = np.full(self.w.k, 1.0 / self.w.k)
        costs = np.einsum("lij,i,j->l", self.w.tensor, uniform, q_hat)
        if np.all(costs <= self.z.array + get_config().attainability.slack_tol):
            return Hypothesis.random_guess(uniform, sample.domain_size)
        excess, p = coin_response(self.w, self.z, q_hat)
        if excess > get_config().attainability.slack_tol:
            logger.warning(f"⚠️ 經驗邊際 {q_hat.round(4).tolist()} 下硬幣超額 {excess:.3e}")
        return Hypothesis.random_guess(p, sample.domain_size)


class CoinOnSubsetLearner(WeakLearnerSpec):
    """忽略樣本，永遠輸出 J 上的極小極大硬幣 p*"""

    def __init__(self, w: CostMatrix, subset: Iterable[int], inst: Instance) -> None:
        self.subset = _check_subset(w.k, subset)
        value = game_value(w, self.subset)
        super().__init__(w, value.value, Behavior.COIN_ON_J)
        outside = sorted(set(inst.target) - set(self.subset))
        if outside:
            raise ContractError(
                f"實例目標含有 J = {list(self.subset)} 以外的標籤 {outside}",
                {"subset": list(self.subset), "labels_outside": outside},
            )
        self.strategy = value.minimax_strategy

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        return Hypothesis.random_guess(self.strategy, sample.domain_size)


def plant_errors(
    w: MultiCost, z: GuaranteeVector, inst: Instance, D: np.ndarray
) -> np.ndarray:
    """
    在 f 上貪婪地植入錯誤：依 (D(x), x) 遞增嘗試每個點，
    只要所有目標在 D 下的損失仍 ≤ z_ℓ 就把該點改成最昂貴的錯誤標籤

    Returns:
        np.ndarray: 植入錯誤後的標籤
    """
    labels = inst.labels.copy()
    tensor = w.tensor
    # wrong[x]：對 f(x) 而言各目標成本和最大的錯誤標籤
    totals = tensor.sum(axis=0)[:, labels].T
    wrong = np.argmax(totals, axis=1)
    costs = D[:, None] * tensor[:, wrong, labels].T

    candidates = np.flatnonzero((D > 0) & (costs.sum(axis=1) > 0))
    order = candidates[np.lexsort((candidates, D[candidates]))]
    used = np.zeros(w.r)
    budget = z.array + 1e-12
    for x in order:
        if np.all(used + costs[x] <= budget):
            used += costs[x]
            labels[x] = wrong[x]
    return labels


class PlantedLearner(WeakLearnerSpec):
    """
    在樣本經驗分佈下守住 𝒛 的植入雜訊學習器

    reserve > 0 時只植入到 z_ℓ − reserve，保留精度 ε = reserve 給樣本外的偏差；宣告的保證仍為 𝒛。
    """

    def __init__(
        self,
        w: Union[CostMatrix, MultiCost],
        z: Union[float, GuaranteeVector, Sequence[float]],
        inst: Instance,
        reserve: float = 0.0,
    ) -> None:
        super().__init__(w, z, Behavior.PLANTED_NOISE)
        if inst.k != self.w.k:
            raise InputError(f"實例 k = {inst.k} 與成本 k = {self.w.k} 不一致")
        if reserve < 0.0:
            raise InputError(f"精度保留 {reserve} 不可為負")
        self.instance = inst
        self.reserve = reserve
        self._budget = GuaranteeVector(z=np.clip(self.z.array - reserve, 0.0, 1.0).tolist())

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        return self.fit_distribution(sample.empirical_distribution())

    def fit_distribution(self, D: Distribution) -> Hypothesis:
        """直接對分佈 D 植入錯誤"""
        weights = self.instance._check_distribution(D)
        return Hypothesis.deterministic(plant_errors(self.w, self._budget, self.instance, weights), self.w.k)


class ScalarizedLearner(WeakLearnerSpec):
    """把 (𝒘,𝒛)-學習器視為 (w_α, z_α)-學習器"""

    def __init__(self, inner: WeakLearnerSpec, alpha: Distribution) -> None:
        a = SimplexDist.from_weights(_as_array(alpha)).array
        super().__init__(scalarize(inner.w, a), inner.z.scalarize(a), inner.behavior)
        self.inner = inner
        self.alpha = a

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        return self.inner.fit(sample, rng)


class PoolErmLearner(WeakLearnerSpec):
    """在有限假設池上做經驗風險最小化；宣告的保證不強制成立"""

    def __init__(
        self,
        w: Union[CostMatrix, MultiCost],
        z: Union[float, GuaranteeVector, Sequence[float]],
        pool: Sequence[Hypothesis],
    ) -> None:
        super().__init__(w, z, Behavior.POOL_ERM)
        if not pool:
            raise InputError("假設池不可為空")
        self.pool = list(pool)

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        scores = [
            max(empirical_loss(cost, h, sample) - bound for cost, bound in zip(self.w.costs, self.z.z))
            for h in self.pool
        ]
        return self.pool[int(np.argmin(scores))]


def coin_trivial_learner(w: Union[CostMatrix, MultiCost], z: Union[float, GuaranteeVector, Sequence[float]]) -> CoinTrivialLearner:
    return CoinTrivialLearner(w, z)


def coin_on_J_learner(w: CostMatrix, subset: Iterable[int], inst: Instance) -> CoinOnSubsetLearner:
    return CoinOnSubsetLearner(w, subset, inst)


def planted_noise_learner(w: CostMatrix, z: float, inst: Instance) -> PlantedLearner:
    if z < 0.0:
        raise InputError(f"保證值 z = {z} 不可為負")
    return PlantedLearner(w, min(float(z), 1.0), inst)


def planted_multi_learner(w: MultiCost, z: GuaranteeVector, inst: Instance, reserve: float = 0.0) -> PlantedLearner:
    return PlantedLearner(w, z, inst, reserve)


def scalarized_learner(learner: WeakLearnerSpec, alpha: Distribution) -> ScalarizedLearner:
    return ScalarizedLearner(learner, alpha)


def pool_erm_learner(
    w: Union[CostMatrix, MultiCost], z: Union[float, GuaranteeVector, Sequence[float]], pool: Sequence[Hypothesis]
) -> PoolErmLearner:
    return PoolErmLearner(w, z, pool)


def noisy_pool(inst: Instance, size: int, noise: float, rng: np.random.Generator) -> List[Hypothesis]:
    """產生 size 個 f 的雜訊副本，每個副本在約 noise 比例的點上改成隨機錯誤標籤"""
    if size < 1 or not 0.0 <= noise <= 1.0:
        raise InputError(f"無效的假設池參數 size = {size}, noise = {noise}")
    pool = []
    for _ in range(size):
        labels = inst.labels.copy()
        flip = rng.random(inst.domain_size) < noise
        shift = rng.integers(1, inst.k, size=inst.domain_size)
        labels[flip] = (labels[flip] + shift[flip]) % inst.k
        pool.append(Hypothesis.deterministic(labels, inst.k))
    return pool


class AuditReport(BaseModel):
    """學習器保證的經驗稽核"""

    trials: int
    sample_size: int
    epsilon: float
    delta: float
    failures: int
    failure_fraction: float
    max_excess: float
    passed: bool


def audit_learner(
    learner: WeakLearnerSpec,
    inst: Instance,
    rng: np.random.Generator,
    trials: int = 100,
    epsilon: float = 0.05,
    delta: float = 0.05,
) -> AuditReport:
    """
    以隨機查詢分佈稽核學習器：每次以 m₀(ε,δ) 個樣本訓練，
    任一目標的真實損失超過 z_ℓ + ε 即計為失敗；失敗比例 ≤ 2δ 視為通過
    """
    if trials < 1:
        raise InputError(f"試驗次數 {trials} 必須為正")
    m = learner.sample_complexity(epsilon, delta)
    failures = 0
    worst = -math.inf
    for _ in range(trials):
        D = rng.dirichlet(np.ones(inst.domain_size))
        h = learner.fit(inst.draw(m, rng, D), rng)
        excess = np.array(loss_report(learner.w, h, inst, D).losses) - learner.z.array
        worst = max(worst, float(excess.max()))
        failures += int(np.any(excess > epsilon))
    fraction = failures / trials
    logger.info(f"稽核 {type(learner).__name__}：{failures}/{trials} 次失敗，最大超額 {worst:.4f}")
    return AuditReport(
        trials=trials,
        sample_size=m,
        epsilon=epsilon,
        delta=delta,
        failures=failures,
        failure_fraction=fraction,
        max_excess=worst,
        passed=fraction <= 2 * delta,
    )
