"""
# src/core/attainability.py
可達性模組：多目標成本、硬幣/骰子可達性判定、偏序 ⪯_𝒘、迴避集合 av(𝒘,𝒛)、區域邊界

判定方式：
- 網格模式：在 Δ_J 網格上逐點解 LP 可行性問題 ∃p∈Δ_Y: w_ℓ(p,q) ≤ z_ℓ ∀ℓ
- 對偶模式：在 Δ_r 網格上檢查 ⟨α,z⟩ ≥ V_J(w_α)
邊界上的點一律判為可達（封閉區域）。
"""

import json
import logging
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import get_config
from src.core.errors import CapacityError, InputError
from src.core.games import CostMatrix, SimplexDist, Subset, _check_subset, game_value
from src.core.lp import LinearProgram, Sense, solve

logger = logging.getLogger(__name__)

# 網格點分批處理，避免 (n, r, k) 張量過大
_CHUNK = 20000


class MultiCost(BaseModel):
    """多目標成本 𝒘 = (w₁,…,w_r)，所有矩陣共用同一個 k"""

    model_config = ConfigDict(frozen=True)

    costs: List[CostMatrix] = Field(..., min_length=1, max_length=8)

    @model_validator(mode="after")
    def _check_labels(self) -> "MultiCost":
        ks = {w.k for w in self.costs}
        if len(ks) != 1:
            raise ValueError(f"所有成本矩陣必須有相同的 k，實際為 {sorted(ks)}")
        return self

    @property
    def r(self) -> int:
        return len(self.costs)

    @property
    def k(self) -> int:
        return self.costs[0].k

    @property
    def tensor(self) -> np.ndarray:
        """形狀 (r, k, k) 的成本張量"""
        return np.stack([w.matrix for w in self.costs])

    @classmethod
    def single(cls, w: CostMatrix) -> "MultiCost":
        return cls(costs=[w])

    @classmethod
    def population_driven(cls) -> "MultiCost":
        """(w₋, w₊)：w₋ 只懲罰偽陰性，w₊ 只懲罰偽陽性"""
        return cls(
            costs=[CostMatrix.binary(w_plus=0.0, w_minus=1.0), CostMatrix.binary(w_plus=1.0, w_minus=0.0)]
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MultiCost":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if "entries" in data:
            return cls.single(CostMatrix.model_validate(data))
        return cls.model_validate(data)

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.model_dump(), f, indent=2)


class GuaranteeVector(BaseModel):
    """保證向量 𝒛 ∈ [0,1]^r"""

    model_config = ConfigDict(frozen=True)

    z: List[float] = Field(..., min_length=1, max_length=8)

    @field_validator("z")
    @classmethod
    def _check_range(cls, v: List[float]) -> List[float]:
        for value in v:
            if not np.isfinite(value) or value < 0.0 or value > 1.0:
                raise ValueError(f"保證值 {value} 不在 [0,1] 內")
        return v

    @property
    def r(self) -> int:
        return len(self.z)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.z, dtype=float)

    def scalarize(self, alpha: Union[SimplexDist, np.ndarray]) -> float:
        """z_α = ⟨α, z⟩"""
        a = alpha.array if isinstance(alpha, SimplexDist) else np.asarray(alpha, dtype=float)
        return float(a @ self.array)

    @classmethod
    def of(cls, *values: float) -> "GuaranteeVector":
        return cls(z=[float(v) for v in values])


class AttainMode(str, Enum):
    """判定模式"""

    AUTO = "auto"
    GRID = "grid"
    DUALITY = "duality"
    CROSS_CHECK = "cross_check"


class CertificatePoint(BaseModel):
    """證書樣本：環境分佈 q 與回應的硬幣 p，以及各目標成本"""

    q: List[float]
    p: List[float]
    costs: List[float]


class Disagreement(BaseModel):
    """網格判定與 α 掃描判定不一致的紀錄"""

    alpha: List[float]
    gap: float
    note: str


class AttainabilityVerdict(BaseModel):
    """可達性判定結果，附帶對應的見證"""

    attainable: bool
    subset: List[int]
    mode: AttainMode
    alpha_witness: Optional[List[float]] = None
    witness_gap: Optional[float] = None
    failing_q: Optional[List[float]] = None
    certificate: List[CertificatePoint] = Field(default_factory=list)
    disagreements: List[Disagreement] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_witness(self) -> "AttainabilityVerdict":
        if self.attainable and (self.alpha_witness is not None or not self.certificate):
            raise ValueError("可達的判定必須只帶有證書")
        if not self.attainable and (self.alpha_witness is None or self.certificate):
            raise ValueError("不可達的判定必須只帶有 α 見證")
        return self


class AvoidedSets(BaseModel):
    """av(𝒘,𝒛) 與其包含關係下的極小元素"""

    sets: List[List[int]]
    minimal: List[List[int]]

    def as_tuples(self) -> List[Subset]:
        return [tuple(s) for s in self.sets]


class BoundaryPoint(BaseModel):
    z1: float
    z2: float


class EnvelopeSample(BaseModel):
    z1: float
    grid_z2: Optional[float]
    dual_z2: Optional[float]
    discrepancy: Optional[float]


class EnvelopeReport(BaseModel):
    """網格邊界與半空間包絡的比較"""

    max_discrepancy: float
    alpha_grid: int
    domain_mismatches: int
    samples: List[EnvelopeSample]


def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """
    枚舉 Δ_dim 上解析度 1/steps 的所有網格點

    Returns:
        np.ndarray: 形狀 (C(steps+dim-1, dim-1), dim)，第一座標遞增排序
    """
    if dim < 1 or steps < 1:
        raise InputError(f"無效的網格參數 dim = {dim}, steps = {steps}")
    if dim == 1:
        return np.ones((1, 1))
    bars = np.array(list(combinations(range(steps + dim - 1), dim - 1)), dtype=int)
    padded = np.hstack(
        [np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), steps + dim - 1)]
    )
    return (np.diff(padded, axis=1) - 1) / steps


def scalarize(w: MultiCost, alpha: Union[SimplexDist, Sequence[float], np.ndarray]) -> CostMatrix:
    """w_α = Σ α_i w_i"""
    a = alpha.array if isinstance(alpha, SimplexDist) else np.asarray(alpha, dtype=float)
    if a.shape != (w.r,):
        raise InputError(f"α 長度 {a.size} 與目標數 r = {w.r} 不一致")
    return CostMatrix.clipped_from_array(np.tensordot(a, w.tensor, axes=1))


def _objective_costs(w: MultiCost, q: np.ndarray) -> np.ndarray:
    """C[n, ℓ, i] = w_ℓ(i, q_n)：對每個環境分佈、目標與純預測的成本"""
    return np.einsum("lij,nj->nli", w.tensor, q)


def _feasibility(costs: np.ndarray, z: np.ndarray) -> Tuple[float, np.ndarray]:
    """min_p max_ℓ (costs_ℓ·p − z_ℓ)；返回 (最小超額 t, 達成的 p)"""
    r, k = costs.shape
    objective = np.zeros(k + 1)
    objective[-1] = 1.0
    rows = np.zeros((r + 1, k + 1))
    rows[:r, :k] = costs
    rows[:r, -1] = -1.0
    rows[-1, :k] = 1.0
    rhs = np.concatenate([z, [1.0]])
    senses = [Sense.LE] * r + [Sense.EQ]
    lower = np.concatenate([np.zeros(k), [-1.0]])
    solution = solve(LinearProgram(objective, rows, rhs, senses, lower=lower))
    p = np.clip(solution.primal[:k], 0.0, None)
    return float(solution.optimal_value), p / p.sum()


def coin_response(
    w: MultiCost, z: GuaranteeVector, q: Union[SimplexDist, np.ndarray]
) -> Tuple[float, np.ndarray]:
    """
    對已揭示的標籤邊際 q 求硬幣 p，使 max_ℓ (w_ℓ(p,q) − z_ℓ) 最小

    Returns:
        Tuple[float, np.ndarray]: (最小超額，≤ 0 代表全部目標達成；硬幣 p)
    """
    q_arr = q.array if isinstance(q, SimplexDist) else np.asarray(q, dtype=float)
    if q_arr.shape != (w.k,):
        raise InputError(f"邊際長度 {q_arr.size} 與 k = {w.k} 不一致")
    if z.r != w.r:
        raise InputError(f"保證向量長度 {z.r} 與目標數 r = {w.r} 不一致")
    return _feasibility(_objective_costs(w, q_arr[None, :])[0], z.array)


def _separating_alpha(costs: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, float]:
    """max_{α∈Δ_r} min_i Σ_ℓ α_ℓ (costs_ℓ(i) − z_ℓ)；正值代表 α 分離 z"""
    r, k = costs.shape
    objective = np.zeros(r + 1)
    objective[-1] = 1.0
    rows = np.zeros((k + 1, r + 1))
    rows[:k, :r] = (costs - z[:, None]).T
    rows[:k, -1] = -1.0
    rows[-1, :r] = 1.0
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    senses = [Sense.GE] * k + [Sense.EQ]
    lower = np.concatenate([np.zeros(r), [-2.0]])
    solution = solve(LinearProgram(objective, rows, rhs, senses, lower=lower, maximize=True))
    alpha = np.clip(solution.primal[:r], 0.0, None)
    return alpha / alpha.sum(), float(solution.optimal_value)


def _alpha_gaps(w: MultiCost, z: GuaranteeVector, labels: Subset) -> Tuple[np.ndarray, np.ndarray]:
    """在 Δ_r 網格上計算 V_J(w_α) − ⟨α,z⟩"""
    alphas = simplex_grid(w.r, get_config().attainability.alpha_steps(w.r))
    gaps = np.array(
        [game_value(scalarize(w, a), labels).value - float(a @ z.array) for a in alphas]
    )
    return alphas, gaps


def _certificate_indices(n: int, size: int) -> List[int]:
    return sorted(set(np.linspace(0, n - 1, min(size, n)).round().astype(int).tolist()))


def _decide_by_grid(w: MultiCost, z: GuaranteeVector, labels: Subset, mode: AttainMode) -> AttainabilityVerdict:
    cfg = get_config().attainability
    z_arr = z.array
    grid = simplex_grid(len(labels), cfg.grid_steps(len(labels)))
    n = grid.shape[0]
    wanted = set(_certificate_indices(n, cfg.certificate_size))
    certificate: List[CertificatePoint] = []

    for start in range(0, n, _CHUNK):
        q = np.zeros((min(_CHUNK, n - start), w.k))
        q[:, list(labels)] = grid[start : start + _CHUNK]
        costs = _objective_costs(w, q)
        pure_ok = np.all(costs <= z_arr[None, :, None] + cfg.slack_tol, axis=1)
        pure_any = pure_ok.any(axis=1)

        for local in range(q.shape[0]):
            index = start + local
            if pure_any[local]:
                if index in wanted:
                    p = np.zeros(w.k)
                    p[int(np.argmax(pure_ok[local]))] = 1.0
                    certificate.append(
                        CertificatePoint(q=q[local].tolist(), p=p.tolist(), costs=(costs[local] @ p).tolist())
                    )
                continue

            excess, p = _feasibility(costs[local], z_arr)
            if excess > cfg.slack_tol:
                alpha, _ = _separating_alpha(costs[local], z_arr)
                gap = game_value(scalarize(w, alpha), labels).value - float(alpha @ z_arr)
                logger.debug(f"J = {list(labels)} 於 q = {q[local].round(4).tolist()} 不可行，超額 {excess:.3e}")
                return AttainabilityVerdict(
                    attainable=False,
                    subset=list(labels),
                    mode=mode,
                    alpha_witness=alpha.tolist(),
                    witness_gap=gap,
                    failing_q=q[local].tolist(),
                )
            if index in wanted:
                certificate.append(
                    CertificatePoint(q=q[local].tolist(), p=p.tolist(), costs=(costs[local] @ p).tolist())
                )

    return AttainabilityVerdict(attainable=True, subset=list(labels), mode=mode, certificate=certificate)


def _decide_by_duality(w: MultiCost, z: GuaranteeVector, labels: Subset) -> AttainabilityVerdict:
    cfg = get_config().attainability
    alphas, gaps = _alpha_gaps(w, z, labels)
    best = int(np.argmax(gaps))
    if gaps[best] > cfg.slack_tol:
        return AttainabilityVerdict(
            attainable=False,
            subset=list(labels),
            mode=AttainMode.DUALITY,
            alpha_witness=alphas[best].tolist(),
            witness_gap=float(gaps[best]),
        )

    # 以 Δ_J 的頂點與重心作為證書樣本
    probes = [np.eye(len(labels))[i] for i in range(len(labels))] + [np.full(len(labels), 1.0 / len(labels))]
    certificate = []
    for probe in probes:
        q = np.zeros(w.k)
        q[list(labels)] = probe
        costs = _objective_costs(w, q[None, :])[0]
        _, p = _feasibility(costs, z.array)
        certificate.append(CertificatePoint(q=q.tolist(), p=p.tolist(), costs=(costs @ p).tolist()))
    return AttainabilityVerdict(attainable=True, subset=list(labels), mode=AttainMode.DUALITY, certificate=certificate)


def _cross_check(w: MultiCost, z: GuaranteeVector, labels: Subset, verdict: AttainabilityVerdict) -> List[Disagreement]:
    tol = get_config().attainability.slack_tol
    alphas, gaps = _alpha_gaps(w, z, labels)
    best = int(np.argmax(gaps))
    if verdict.attainable and gaps[best] > tol:
        return [Disagreement(alpha=alphas[best].tolist(), gap=float(gaps[best]), note="網格判定可達，但 α 掃描找到分離半空間")]
    if not verdict.attainable and gaps[best] <= tol:
        return [Disagreement(alpha=alphas[best].tolist(), gap=float(gaps[best]), note="網格判定不可達，但 α 掃描未找到分離半空間")]
    return []


def is_dice_attainable(
    w: MultiCost,
    z: GuaranteeVector,
    subset: Iterable[int],
    mode: AttainMode = AttainMode.AUTO,
) -> AttainabilityVerdict:
    """
    判定 𝒛 是否為 J-骰子可達：∀q∈Δ_J ∃p∈Δ_Y ∀ℓ w_ℓ(p,q) ≤ z_ℓ

    Args:
        w: 多目標成本
        z: 保證向量
        subset: 子集合 J
        mode: 判定模式（AUTO 在 |J| ≤ 5 時使用網格，否則使用對偶掃描）

    Returns:
        AttainabilityVerdict: 判定與見證

    Raises:
        CapacityError: 網格模式下 |J| 超過上限
    """
    if z.r != w.r:
        raise InputError(f"保證向量長度 {z.r} 與目標數 r = {w.r} 不一致")
    labels = _check_subset(w.k, subset)
    cfg = get_config().attainability

    if len(labels) == 1:
        p = np.zeros(w.k)
        p[labels[0]] = 1.0
        point = CertificatePoint(q=p.tolist(), p=p.tolist(), costs=[0.0] * w.r)
        return AttainabilityVerdict(attainable=True, subset=list(labels), mode=mode, certificate=[point])

    if mode == AttainMode.AUTO:
        mode = AttainMode.GRID if len(labels) <= cfg.max_grid_labels else AttainMode.DUALITY
    if mode in (AttainMode.GRID, AttainMode.CROSS_CHECK) and len(labels) > cfg.max_grid_labels:
        raise CapacityError(
            f"|J| = {len(labels)} 超過網格模式上限 {cfg.max_grid_labels}，請改用 duality 模式",
            {"subset": list(labels), "max_grid_labels": cfg.max_grid_labels},
        )

    if mode == AttainMode.DUALITY:
        return _decide_by_duality(w, z, labels)

    verdict = _decide_by_grid(w, z, labels, mode)
    if mode == AttainMode.CROSS_CHECK:
        verdict.disagreements = _cross_check(w, z, labels, verdict)
        if verdict.disagreements:
            logger.warning(f"J = {list(labels)} 的網格判定與對偶掃描不一致: {verdict.disagreements[0].note}")
    return verdict


def is_coin_attainable(
    w: MultiCost, z: GuaranteeVector, mode: AttainMode = AttainMode.AUTO
) -> AttainabilityVerdict:
    """硬幣可達性：J = Y 的骰子可達性"""
    return is_dice_attainable(w, z, range(w.k), mode)


def avoided_sets(
    w: MultiCost, z: GuaranteeVector, mode: AttainMode = AttainMode.AUTO
) -> AvoidedSets:
    """
    列舉 av(𝒘,𝒛) = {J : 𝒛 ∉ D_J(𝒘)} 及其極小元素

    骰子可達性對 J 單調：J 的某個子集合被迴避時 J 亦被迴避，無需再判定。
    單點集合永不被迴避。
    """
    cap = get_config().games.max_labels
    if w.k > cap:
        raise CapacityError(f"k = {w.k} 超過子集合列舉上限 {cap}", {"k": w.k})

    avoided: List[Subset] = []
    minimal: List[Subset] = []
    for size in range(2, w.k + 1):
        for subset in combinations(range(w.k), size):
            if any(set(m) <= set(subset) for m in minimal):
                avoided.append(subset)
                continue
            if not is_dice_attainable(w, z, subset, mode).attainable:
                avoided.append(subset)
                minimal.append(subset)
    return AvoidedSets(sets=[list(s) for s in avoided], minimal=[list(s) for s in minimal])


def separating_subsets(w: MultiCost, z: GuaranteeVector, z_prime: GuaranteeVector) -> List[Subset]:
    """av(𝒘,𝒛′) \\ av(𝒘,𝒛)：𝒛 可達但 𝒛′ 被迴避的子集合"""
    if z.r != w.r or z_prime.r != w.r:
        raise InputError(f"保證向量長度必須等於目標數 r = {w.r}")
    avoided = set(avoided_sets(w, z).as_tuples())
    return [s for s in avoided_sets(w, z_prime).as_tuples() if s not in avoided]


def precedes(w: MultiCost, z: GuaranteeVector, z_prime: GuaranteeVector) -> bool:
    """𝒛 ⪯_𝒘 𝒛′ 當且僅當 av(𝒘,𝒛′) ⊆ av(𝒘,𝒛)"""
    return not separating_subsets(w, z, z_prime)


def _second_objective_requirement(costs: np.ndarray, z1: float, tol: float) -> float:
    """
    max_q min_p {w₂(p,q) : w₁(p,q) ≤ z₁}；某個 q 無可行 p 時返回 inf

    以純標籤的上界剪枝：某 q 的最佳純標籤成本不超過目前最大值時，該 q 不可能提高最大值。
    """
    feasible = costs[:, 0, :] <= z1 + tol
    if not feasible.any(axis=1).all():
        return float("inf")
    pure_best = np.where(feasible, costs[:, 1, :], np.inf).min(axis=1)

    best = 0.0
    k = costs.shape[2]
    for index in np.argsort(-pure_best, kind="stable"):
        if pure_best[index] <= best:
            break
        rows = np.vstack([costs[index, 0, :], np.ones(k)])
        solution = solve(
            LinearProgram(costs[index, 1, :], rows, [z1, 1.0], [Sense.LE, Sense.EQ])
        )
        best = max(best, float(solution.optimal_value))
    return best


def _boundary_curve(w: MultiCost, resolution: int) -> List[Tuple[float, Optional[float]]]:
    if w.r != 2:
        raise InputError(f"邊界追蹤需要 r = 2，實際 r = {w.r}")
    if resolution < 2:
        raise InputError(f"解析度 {resolution} 必須至少為 2")
    cfg = get_config().attainability
    if w.k > cfg.max_grid_labels:
        raise CapacityError(f"k = {w.k} 超過網格模式上限 {cfg.max_grid_labels}", {"k": w.k})

    q = simplex_grid(w.k, cfg.grid_steps(w.k))
    costs = _objective_costs(w, q)
    curve: List[Tuple[float, Optional[float]]] = []
    for z1 in np.linspace(0.0, 1.0, resolution):
        z2 = _second_objective_requirement(costs, float(z1), cfg.slack_tol)
        curve.append((float(z1), z2 if z2 <= 1.0 + cfg.slack_tol else None))
    return curve


def trace_boundary(w: MultiCost, resolution: int = 100) -> List[BoundaryPoint]:
    """
    追蹤 r = 2 時硬幣可達區域的下邊界

    對每個 z₁，最小可達的 z₂ 為 max_q min_p {w₂(p,q) : w₁(p,q) ≤ z₁}；
    在 [0,1] 內不存在時略過該 z₁。
    """
    points = [
        BoundaryPoint(z1=z1, z2=min(z2, 1.0))
        for z1, z2 in _boundary_curve(w, resolution)
        if z2 is not None
    ]
    logger.info(f"邊界追蹤完成：{len(points)}/{resolution} 個取樣點")
    return points


def envelope_check(w: MultiCost, alpha_grid: int = 400, resolution: int = 100) -> EnvelopeReport:
    """
    比較網格 LP 邊界與半空間 H(α) = {z : ⟨α,z⟩ ≥ V(w_α)} 的包絡

    僅在兩側皆有定義的 z₁ 上計算差異；只有一側有定義的取樣點計入 domain_mismatches。
    """
    if w.r != 2:
        raise InputError(f"包絡檢查需要 r = 2，實際 r = {w.r}")
    if alpha_grid < 1:
        raise InputError(f"α 網格 {alpha_grid} 必須為正")
    tol = get_config().attainability.slack_tol

    weights = np.linspace(0.0, 1.0, alpha_grid + 1)
    values = np.array([game_value(scalarize(w, [a, 1.0 - a])).value for a in weights])
    first_only = game_value(w.costs[0]).value

    samples: List[EnvelopeSample] = []
    mismatches = 0
    worst = 0.0
    for z1, grid_z2 in _boundary_curve(w, resolution):
        dual_z2: Optional[float] = None
        if z1 >= first_only - tol:
            inner = weights < 1.0
            bound = (values[inner] - weights[inner] * z1) / (1.0 - weights[inner])
            candidate = max(0.0, float(bound.max()))
            dual_z2 = candidate if candidate <= 1.0 + tol else None

        if grid_z2 is None and dual_z2 is None:
            continue
        if grid_z2 is None or dual_z2 is None:
            mismatches += 1
            samples.append(EnvelopeSample(z1=z1, grid_z2=grid_z2, dual_z2=dual_z2, discrepancy=None))
            continue
        gap = abs(grid_z2 - dual_z2)
        worst = max(worst, gap)
        samples.append(EnvelopeSample(z1=z1, grid_z2=grid_z2, dual_z2=dual_z2, discrepancy=gap))

    return EnvelopeReport(
        max_discrepancy=worst,
        alpha_grid=alpha_grid,
        domain_mismatches=mismatches,
        samples=samples,
    )
