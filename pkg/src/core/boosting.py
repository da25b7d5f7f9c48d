"""
# src/core/boosting.py
提升模組：二元提升、弱到清單提升、清單到弱學習轉換、s-清單轉換、
多目標提升（對目標做 Hedge）以及 (𝒘,𝒛)→(𝒘,𝒛′) 的完整管線

權重一律以對數形式儲存並逐輪正規化；抽樣使用逆 CDF，同值時依索引順序。
"""

import logging
import math
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.config import get_config
from src.core.attainability import (
    GuaranteeVector,
    MultiCost,
    avoided_sets,
    is_dice_attainable,
    scalarize,
    separating_subsets,
    simplex_grid,
)
from src.core.errors import ContractError, InputError
from src.core.games import CostMatrix, Subset, game_value, margin, threshold_ladder
from src.core.learners import (
    Behavior,
    Hypothesis,
    Sample,
    WeakLearnerSpec,
    coin_trivial_learner,
    empirical_loss,
    m0,
    scalarized_learner,
)

logger = logging.getLogger(__name__)

LearnerFactory = Callable[[np.ndarray], WeakLearnerSpec]


class BoostConfig(BaseModel):
    """提升參數；None 代表使用理論預設值"""

    T: Optional[int] = Field(default=None, ge=1)
    eta: Optional[float] = Field(default=None, gt=0)
    m_hat: Optional[int] = Field(default=None, ge=1)
    sigma: Optional[float] = Field(default=None, ge=0)
    seed: int = Field(default=0)
    delta: float = Field(default_factory=lambda: get_config().boosting.delta, gt=0, lt=1)
    epsilon: Optional[float] = Field(default=None, gt=0)
    retain_hypotheses: bool = Field(default=False)


class SampleWeights:
    """對數形式的乘法權重（樣本索引或目標索引）"""

    def __init__(self, size: int) -> None:
        if size < 1:
            raise InputError(f"權重數量 {size} 必須為正")
        self.log_weights = np.zeros(size)

    @property
    def size(self) -> int:
        return self.log_weights.size

    def normalized(self) -> np.ndarray:
        shifted = np.exp(self.log_weights - self.log_weights.max())
        return shifted / shifted.sum()

    def update(self, gains: np.ndarray, eta: float) -> None:
        """w ← w·e^{η·gain}"""
        self.log_weights = self.log_weights + eta * np.asarray(gains, dtype=float)

    def draw(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """依正規化權重 i.i.d. 抽出 m 個索引"""
        cdf = np.cumsum(self.normalized())
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(m), side="right")
        return np.minimum(idx, self.size - 1)


class RegretSummary(BaseModel):
    rounds: int
    eta: float
    max_regret: float
    bound: float
    satisfied: bool


class RegretLedger:
    """記錄 Hedge 的實際遺憾：max_i (1/T)Σ_t g_t(i) − (1/T)Σ_t 𝔼_{p_t} g_t"""

    def __init__(self, size: int, eta: float) -> None:
        self.eta = eta
        self.cumulative = np.zeros(size)
        self.expected = 0.0
        self.rounds = 0

    def record(self, gains: np.ndarray, weights: np.ndarray) -> None:
        self.cumulative += gains
        self.expected += float(weights @ gains)
        self.rounds += 1

    @property
    def bound(self) -> float:
        """ln n/(ηT) + η/2；η = √(2 ln n/T) 時等於 √(2 ln n/T)"""
        if self.rounds == 0:
            return math.inf
        return math.log(max(self.cumulative.size, 1)) / (self.eta * self.rounds) + self.eta / 2

    def summary(self) -> RegretSummary:
        if self.rounds == 0:
            return RegretSummary(rounds=0, eta=self.eta, max_regret=0.0, bound=0.0, satisfied=True)
        regret = float((self.cumulative.max() - self.expected) / self.rounds)
        return RegretSummary(
            rounds=self.rounds,
            eta=self.eta,
            max_regret=regret,
            bound=self.bound,
            satisfied=regret <= self.bound + 1e-9,
        )


class Ensemble:
    """h₁…h_T 的投票剖面 F(x,y) = (1/T)Σ_t Pr[h_t(x) = y]"""

    def __init__(self, domain_size: int, k: int, retain: bool = False) -> None:
        self.domain_size = domain_size
        self.k = k
        self._votes = np.zeros((domain_size, k))
        self.rounds = 0
        self.hypotheses: List[Hypothesis] = []
        self._retain = retain

    def add(self, h: Hypothesis) -> None:
        self._votes += h.table
        self.rounds += 1
        if self._retain:
            self.hypotheses.append(h)

    @property
    def profile(self) -> np.ndarray:
        if self.rounds == 0:
            raise InputError("空的集成沒有投票剖面")
        return self._votes / self.rounds

    def average(self) -> Hypothesis:
        """逐點平均的隨機假設（等同於均勻抽取一輪再執行 h_t）"""
        return Hypothesis.stochastic(self.profile)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"rounds": self.rounds, "profile": self.profile.tolist()}
        if self.hypotheses:
            data["hypotheses"] = [h.to_dict() for h in self.hypotheses]
        return data


class ListFunction:
    """清單函數 μ：X → 2^Y，以 N×k 布林遮罩表示"""

    def __init__(self, w: CostMatrix, mask: np.ndarray, bound: float) -> None:
        self.w = w
        self.mask = np.asarray(mask, dtype=bool)
        self.bound = bound
        self._values: Dict[Subset, float] = {}

    @classmethod
    def from_profile(cls, w: CostMatrix, profile: np.ndarray, bound: float) -> "ListFunction":
        """μ(x) = {y : Σ_ℓ F(x,ℓ)·w(ℓ,y) ≤ bound}"""
        return cls(w, (profile @ w.matrix) <= bound + 1e-12, bound)

    @classmethod
    def full(cls, w: CostMatrix, domain_size: int) -> "ListFunction":
        return cls(w, np.ones((domain_size, w.k), dtype=bool), 1.0)

    @property
    def domain_size(self) -> int:
        return self.mask.shape[0]

    def at(self, x: int) -> Subset:
        return tuple(np.flatnonzero(self.mask[x]).tolist())

    @property
    def sizes(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def contains(self, points: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return self.mask[points, labels]

    def value_of(self, labels: Subset, w: Optional[CostMatrix] = None) -> float:
        """V_{μ(x)}(w)；空清單視為 0"""
        if not labels:
            return 0.0
        if w is not None:
            return game_value(w, labels).value
        if labels not in self._values:
            self._values[labels] = game_value(self.w, labels).value
        return self._values[labels]

    def max_value(self, points: Optional[Iterable[int]] = None) -> float:
        rows = range(self.domain_size) if points is None else points
        distinct = {self.at(int(x)) for x in rows}
        return max(self.value_of(labels) for labels in distinct)

    def intersect(self, other: "ListFunction") -> "ListFunction":
        if other.mask.shape != self.mask.shape:
            raise InputError("清單函數的維度不一致")
        return ListFunction(self.w, self.mask & other.mask, min(self.bound, other.bound))

    def to_dict(self) -> Dict[str, Any]:
        return {"bound": self.bound, "lists": [list(self.at(x)) for x in range(self.domain_size)]}


class BoostReport(BaseModel):
    """提升執行報告；不含時間戳記，固定種子下逐位元相同"""

    algorithm: str
    config: Dict[str, Any]
    round_losses: List[float] = Field(default_factory=list)
    violation_rounds: List[int] = Field(default_factory=list)
    regret: Optional[RegretSummary] = None
    consistent: Optional[bool] = None
    mutual_exclusion: Optional[bool] = None
    coverage: Optional[float] = None
    max_list_size: Optional[int] = None
    mean_list_size: Optional[float] = None
    max_list_value: Optional[float] = None
    objective_losses: Optional[List[float]] = None
    violation_fractions: Optional[List[float]] = None
    extra: Dict[str, Any] = Field(default_factory=dict)


class BoostResult:
    """提升結果：最終假設、報告，以及（視演算法而定）集成與清單函數"""

    def __init__(
        self,
        hypothesis: Optional[Hypothesis],
        report: BoostReport,
        ensemble: Optional[Ensemble] = None,
        lists: Optional[ListFunction] = None,
    ) -> None:
        self.hypothesis = hypothesis
        self.report = report
        self.ensemble = ensemble
        self.lists = lists

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"report": self.report.model_dump()}
        if self.hypothesis is not None:
            data["hypothesis"] = self.hypothesis.to_dict()
        if self.lists is not None:
            data["lists"] = self.lists.to_dict()
        return data


def _log_size(m: int) -> float:
    return math.log(max(m, 2))


def _hedge_over_sample(
    w: CostMatrix,
    learner: WeakLearnerSpec,
    sample: Sample,
    T: int,
    eta: float,
    m_hat: int,
    tolerance: float,
    rng: np.random.Generator,
    retain: bool,
) -> Tuple[Ensemble, BoostReport]:
    """
    以 Hedge 對樣本索引重新加權並逐輪呼叫弱學習器

    D_{t+1}(i) ∝ D_t(i)·e^{η·𝔼 w(h_t(x_i), y_i)}；學習器在 D_t 下的損失超過 z + tolerance 的輪次會記錄在報告中
    """
    points, labels = sample.point_array, sample.label_array
    weights = SampleWeights(sample.m)
    ledger = RegretLedger(sample.m, eta)
    ensemble = Ensemble(sample.domain_size, sample.k, retain)
    report = BoostReport(algorithm="", config={})
    limit = learner.threshold + tolerance

    for t in range(T):
        dist = weights.normalized()
        h = learner.fit(sample.take(weights.draw(m_hat, rng)), rng)
        losses = (h.table @ w.matrix)[points, labels]
        ledger.record(losses, dist)
        weights.update(losses, eta)
        ensemble.add(h)

        round_loss = float(dist @ losses)
        report.round_losses.append(round_loss)
        if round_loss > limit:
            report.violation_rounds.append(t)
        if (t + 1) % 1000 == 0:
            logger.debug(f"第 {t + 1}/{T} 輪，學習器損失 {round_loss:.4f}")

    report.regret = ledger.summary()
    if report.violation_rounds:
        logger.warning(
            f"⚠️ 學習器在 {len(report.violation_rounds)}/{T} 輪超出宣告的保證 z = {learner.threshold:.4f}"
        )
    return ensemble, report


def _binary_margin(w: CostMatrix, z: float) -> Tuple[float, float]:
    if w.k != 2:
        raise InputError(f"二元提升需要 k = 2，實際 k = {w.k}")
    value = game_value(w).value
    gamma = value - z
    if gamma <= 1e-12:
        raise ContractError(
            f"(w, z) 不可提升：z = {z:.9f} ≥ V(w) = {value:.9f}",
            {"z": z, "threshold": value},
        )
    return value, gamma


def _boost_binary_with_margin(
    w: CostMatrix, learner: WeakLearnerSpec, sample: Sample, cfg: BoostConfig, value: float, gamma: float
) -> BoostResult:
    log_m = _log_size(sample.m)
    T = cfg.T or max(1, math.ceil(18 * log_m / gamma**2))
    eta = cfg.eta or math.sqrt(2 * log_m / T)
    m_hat = cfg.m_hat or min(m0(gamma / 3, cfg.delta / T), sample.m)
    logger.info(f"🚀 二元提升開始：γ = {gamma:.4f}，T = {T}，η = {eta:.4f}，m̂ = {m_hat}")

    rng = np.random.default_rng(cfg.seed)
    ensemble, report = _hedge_over_sample(w, learner, sample, T, eta, m_hat, gamma / 3, rng, cfg.retain_hypotheses)

    F = ensemble.profile
    w_minus, w_plus = w.w_minus, w.w_plus
    # 索引 0 為 −1、索引 1 為 +1；相等時預測 −1
    predictions = (w_minus * F[:, 0] < w_plus * F[:, 1]).astype(int)
    hypothesis = Hypothesis.deterministic(predictions, 2)

    points, labels = sample.point_array, sample.label_array
    below_minus = w_minus * F[points, 0] < value
    below_plus = w_plus * F[points, 1] < value
    report.algorithm = "boost_binary"
    report.config = {"T": T, "eta": eta, "m_hat": m_hat, "gamma": gamma, "seed": cfg.seed, "delta": cfg.delta}
    report.consistent = bool(np.all(predictions[points] == labels))
    report.mutual_exclusion = bool(np.all(below_minus ^ below_plus))
    if report.consistent:
        logger.info("✅ 二元提升完成：與樣本一致")
    else:
        logger.warning("⚠️ 二元提升完成，但與樣本不一致")
    return BoostResult(hypothesis, report, ensemble)


def boost_binary(
    w: CostMatrix, learner: WeakLearnerSpec, sample: Sample, cfg: Optional[BoostConfig] = None
) -> BoostResult:
    """
    提升二元 (w,z)-學習器

    預設 T = ⌈18 ln m/γ²⌉，η = √(2 ln m/T)，m̂ = min(m₀(γ/3, δ/T), m)，其中 γ = V(w) − z。
    最終規則：w₋·F(x,−1) < w₊·F(x,+1) 時預測 +1，否則 −1。

    Raises:
        ContractError: z ≥ V(w)
    """
    cfg = cfg or BoostConfig()
    value, gamma = _binary_margin(w, learner.threshold)
    return _boost_binary_with_margin(w, learner, sample, cfg, value, gamma)


def boost_binary_adaptive(
    w: CostMatrix, learner: WeakLearnerSpec, sample: Sample, cfg: Optional[BoostConfig] = None
) -> BoostResult:
    """邊際未知時從 γ = V(w) 開始，不一致就 γ ← γ/2 重跑"""
    cfg = cfg or BoostConfig()
    value, _ = _binary_margin(w, learner.threshold)
    limit = get_config().boosting.max_halvings
    gamma = value
    for attempt in range(limit + 1):
        attempt_cfg = cfg.model_copy(update={"T": None, "eta": None, "seed": cfg.seed + attempt})
        result = _boost_binary_with_margin(w, learner, sample, attempt_cfg, value, gamma)
        if result.report.consistent:
            result.report.extra["halvings"] = attempt
            return result
        gamma /= 2
    raise ContractError(
        f"經過 {limit} 次減半仍無法與樣本一致",
        {"halvings": limit, "gamma": gamma},
    )


def boost_to_list(
    w: CostMatrix, learner: WeakLearnerSpec, sample: Sample, cfg: Optional[BoostConfig] = None
) -> BoostResult:
    """
    將多類別 (w,z)-學習器提升為 (w,z+σ)-清單學習器

    預設 σ = 2γ/3（γ 為 z 的邊際），T = ⌈8 ln m/σ²⌉，η = √(2 ln m/T)，m̂ = min(m₀(σ/2, δ/T), m)。
    返回的 μ_S 無條件滿足 V_{μ_S(x)}(w) ≤ z + σ。

    Raises:
        InputError: σ = 0
        ContractError: 未指定 σ 且 z 沒有正邊際
    """
    cfg = cfg or BoostConfig()
    z = learner.threshold
    sigma = cfg.sigma
    if sigma is None:
        gamma = margin(w, z)
        if gamma <= 0.0:
            raise ContractError(f"z = {z:.9f} 沒有正邊際，無法提升為清單學習器", {"z": z})
        sigma = 2 * gamma / 3
    if sigma <= 0.0:
        raise InputError("σ 必須為正")

    log_m = _log_size(sample.m)
    T = cfg.T or max(1, math.ceil(8 * log_m / sigma**2))
    eta = cfg.eta or math.sqrt(2 * log_m / T)
    m_hat = cfg.m_hat or min(m0(sigma / 2, cfg.delta / T), sample.m)
    logger.info(f"🚀 清單提升開始：z = {z:.4f}，σ = {sigma:.4f}，T = {T}，m̂ = {m_hat}")

    rng = np.random.default_rng(cfg.seed)
    ensemble, report = _hedge_over_sample(w, learner, sample, T, eta, m_hat, sigma / 2, rng, cfg.retain_hypotheses)
    lists = ListFunction.from_profile(w, ensemble.profile, z + sigma)

    points, labels = sample.point_array, sample.label_array
    sizes = lists.sizes
    report.algorithm = "boost_to_list"
    report.config = {"T": T, "eta": eta, "m_hat": m_hat, "sigma": sigma, "seed": cfg.seed, "delta": cfg.delta}
    report.coverage = float(lists.contains(points, labels).mean())
    report.consistent = report.coverage == 1.0
    report.max_list_size = int(sizes.max())
    report.mean_list_size = float(sizes.mean())
    report.max_list_value = lists.max_value()
    logger.info(f"✅ 清單提升完成：覆蓋率 {report.coverage:.4f}，最大清單 {report.max_list_size}")
    return BoostResult(None, report, ensemble, lists)


def boost_to_s_list(
    w: CostMatrix, learner: WeakLearnerSpec, sample: Sample, cfg: Optional[BoostConfig] = None
) -> BoostResult:
    """
    提升為 s-清單學習器：s 為滿足 z < v̲_{s+1} 的最小整數，γ = v̲_{s+1} − z，σ = 2γ/3

    z ≥ v̲_k 時 s = k，直接返回 μ ≡ Y。
    """
    cfg = cfg or BoostConfig()
    z = learner.threshold
    ladder = threshold_ladder(w)
    tol = get_config().games.dedup_tol
    s = next((size for size in range(1, w.k) if z < ladder.v_min(size + 1) - tol), w.k)

    if s == w.k:
        lists = ListFunction.full(w, sample.domain_size)
        report = BoostReport(
            algorithm="boost_to_s_list",
            config={"s": s, "seed": cfg.seed},
            coverage=1.0,
            consistent=True,
            max_list_size=w.k,
            mean_list_size=float(w.k),
            max_list_value=ladder.v_max(w.k),
        )
        logger.info(f"z = {z:.4f} ≥ v̲_k，直接返回完整清單")
        return BoostResult(None, report, None, lists)

    gamma = ladder.v_min(s + 1) - z
    list_cfg = cfg.model_copy(update={"sigma": cfg.sigma if cfg.sigma is not None else 2 * gamma / 3})
    result = boost_to_list(w, learner, sample, list_cfg)
    result.report.algorithm = "boost_to_s_list"
    result.report.config["s"] = s
    if result.report.max_list_size is not None and result.report.max_list_size > s:
        raise ContractError(
            f"清單大小 {result.report.max_list_size} 超過 s = {s}",
            {"s": s, "max_list_size": result.report.max_list_size},
        )
    return result


def list_to_weak(w: CostMatrix, lists: ListFunction, bound: Optional[float] = None) -> Hypothesis:
    """
    由清單函數建構隨機預測器 h(x) ∼ p_{μ(x)}，p_J 為 J 上的極小極大策略

    空清單使用均勻分佈。

    Raises:
        ContractError: 某個 x 的清單 V_{μ(x)}(w) 超過 bound
    """
    if lists.mask.shape[1] != w.k:
        raise InputError(f"清單函數的標籤數 {lists.mask.shape[1]} 與 k = {w.k} 不一致")
    limit = lists.bound if bound is None else bound
    strategies: Dict[Subset, np.ndarray] = {}
    table = np.empty((lists.domain_size, w.k))
    for x in range(lists.domain_size):
        labels = lists.at(x)
        if labels not in strategies:
            if not labels:
                strategies[labels] = np.full(w.k, 1.0 / w.k)
            else:
                value = game_value(w, labels)
                if value.value > limit + 1e-9:
                    raise ContractError(
                        f"點 x = {x} 的清單 {list(labels)} 不受界：V = {value.value:.9f} > {limit:.9f}",
                        {"point": x, "list": list(labels), "value": value.value, "bound": limit},
                    )
                strategies[labels] = value.minimax_strategy.array
        table[x] = strategies[labels]
    return Hypothesis.stochastic(table)


def s_list_to_weak(w: CostMatrix, lists: ListFunction, s: int) -> Hypothesis:
    """s-清單 ⇒ (w, v̄_s)-弱學習器"""
    if s < 1 or s > w.k:
        raise InputError(f"s = {s} 必須介於 1 與 k = {w.k} 之間")
    oversize = np.flatnonzero(lists.sizes > s)
    if oversize.size:
        x = int(oversize[0])
        raise ContractError(
            f"點 x = {x} 的清單大小 {int(lists.sizes[x])} 超過 s = {s}",
            {"point": x, "s": s},
        )
    return list_to_weak(w, lists, bound=threshold_ladder(w).v_max(s))


def objective_accuracy(r: int) -> float:
    """多目標提升每輪查詢純量學習器的精度 ε = 1/(10r)"""
    return 1 / (10 * r)


def boost_mo(
    w: MultiCost,
    factory: LearnerFactory,
    z: GuaranteeVector,
    sample: Sample,
    cfg: Optional[BoostConfig] = None,
) -> BoostResult:
    """
    提升 (w_α, z_α)-學習器為 (𝒘,𝒛)-學習器（期望意義下）

    每輪以目標上的權重 α_t 呼叫 factory(α_t)，在均勻抽出的 S_t 上訓練；
    違反指標 M(h,i) = 1{L̂_i(h) > z_i}（L̂_i 為整個 S 上的經驗損失），α_{t+1}(i) ∝ α_t(i)·e^{η·M(h_t,i)}。
    預設 T = ⌈100 r² ln r⌉，η = √(2 ln r/T)，m̂ = m₀(1/(10r), 1/(20rT))。
    """
    cfg = cfg or BoostConfig()
    if z.r != w.r:
        raise InputError(f"保證向量長度 {z.r} 與目標數 r = {w.r} 不一致")
    if sample.k != w.k:
        raise InputError(f"樣本 k = {sample.k} 與成本 k = {w.k} 不一致")
    r = w.r
    rng = np.random.default_rng(cfg.seed)

    if r == 1:
        learner = factory(np.ones(1))
        hypothesis = learner.fit(sample, rng)
        losses = [empirical_loss(w.costs[0], hypothesis, sample)]
        report = BoostReport(
            algorithm="boost_mo",
            config={"r": 1, "seed": cfg.seed},
            objective_losses=losses,
            violation_fractions=[float(losses[0] > z.z[0])],
        )
        return BoostResult(hypothesis, report)

    T = cfg.T or max(1, math.ceil(100 * r**2 * math.log(r)))
    eta = cfg.eta or math.sqrt(2 * math.log(r) / T)
    m_hat = cfg.m_hat or m0(objective_accuracy(r), 1 / (20 * r * T))
    logger.info(f"🚀 多目標提升開始：r = {r}，T = {T}，η = {eta:.4f}，m̂ = {m_hat}")

    weights = SampleWeights(r)
    ledger = RegretLedger(r, eta)
    ensemble = Ensemble(sample.domain_size, sample.k, cfg.retain_hypotheses)
    violations = np.zeros((T, r))
    alphas: List[List[float]] = []

    for t in range(T):
        alpha = weights.normalized()
        alphas.append(alpha.tolist())
        learner = factory(alpha)
        h = learner.fit(sample.take(rng.integers(0, sample.m, size=m_hat)), rng)
        empirical = np.array([empirical_loss(cost, h, sample) for cost in w.costs])
        violations[t] = empirical > z.array
        ledger.record(violations[t], alpha)
        weights.update(violations[t], eta)
        ensemble.add(h)

    hypothesis = ensemble.average()
    report = BoostReport(
        algorithm="boost_mo",
        config={"r": r, "T": T, "eta": eta, "m_hat": m_hat, "seed": cfg.seed, "delta": cfg.delta},
        regret=ledger.summary(),
        objective_losses=[empirical_loss(cost, hypothesis, sample) for cost in w.costs],
        violation_fractions=violations.mean(axis=0).tolist(),
        extra={"final_alpha": weights.normalized().tolist()},
    )
    logger.info(f"✅ 多目標提升完成：各目標違反比例 {[round(v, 4) for v in report.violation_fractions or []]}")
    return BoostResult(hypothesis, report, ensemble)


def boost_mo_confident(
    w: MultiCost,
    factory: LearnerFactory,
    z: GuaranteeVector,
    sample: Sample,
    cfg: Optional[BoostConfig] = None,
    validation_fraction: Optional[float] = None,
) -> BoostResult:
    """
    信心提升：在訓練資料的 q = ⌈log₂(2r/δ)⌉ 個不相交部分上各跑一次 boost_mo，
    依驗證集上的 max_i (L̂_i − z_i) 選出最佳者
    """
    cfg = cfg or BoostConfig()
    fraction = validation_fraction or get_config().boosting.holdout_fraction
    rng = np.random.default_rng(cfg.seed)
    train, validation = sample.split(fraction, rng)
    runs = max(1, math.ceil(math.log2(2 * w.r / cfg.delta)))
    if train.m < runs:
        raise InputError(f"訓練樣本 {train.m} 不足以切成 {runs} 份")

    best: Optional[BoostResult] = None
    best_score = math.inf
    scores: List[float] = []
    for index, part in enumerate(np.array_split(np.arange(train.m), runs)):
        result = boost_mo(w, factory, z, train.take(part), cfg.model_copy(update={"seed": cfg.seed + index}))
        assert result.hypothesis is not None
        excess = max(
            empirical_loss(cost, result.hypothesis, validation) - bound for cost, bound in zip(w.costs, z.z)
        )
        scores.append(excess)
        if excess < best_score:
            best, best_score = result, excess

    assert best is not None
    best.report.algorithm = "boost_mo_confident"
    best.report.extra.update({"runs": runs, "validation_scores": scores, "selected": scores.index(best_score)})
    return best


class ListDerivedLearner(WeakLearnerSpec):
    """由固定清單函數得到的 (w_α, z_α)-學習器：h(x) ∼ p^{w_α}_{μ(x)}"""

    def __init__(self, w: CostMatrix, z: float, lists: ListFunction) -> None:
        super().__init__(w, z, Behavior.LIST_DERIVED)
        self.lists = lists

    def fit(self, sample: Sample, rng: np.random.Generator) -> Hypothesis:
        band = get_config().attainability.boundary_band
        return list_to_weak(self.cost, self.lists, bound=self.threshold + band)


def _separating_weights(w: MultiCost, z: GuaranteeVector, subset: Subset) -> Tuple[np.ndarray, float]:
    """在 Δ_r 網格（加上精確見證）中找使 V_J(w_α) − ⟨α,z⟩ 最大的 α，並把它推向內部"""
    cfg = get_config()
    candidates = [a for a in simplex_grid(w.r, cfg.attainability.alpha_steps(w.r))]
    verdict = is_dice_attainable(w, z, subset)
    if verdict.alpha_witness is not None:
        candidates.insert(0, np.asarray(verdict.alpha_witness))

    def gap(alpha: np.ndarray) -> float:
        return game_value(scalarize(w, alpha), subset).value - z.scalarize(alpha)

    gaps = [gap(a) for a in candidates]
    best = int(np.argmax(gaps))
    alpha = candidates[best]
    if gaps[best] <= 0.0:
        raise ContractError(
            f"找不到分離 J = {list(subset)} 的 α",
            {"subset": list(subset), "gap": gaps[best]},
        )

    epsilon = cfg.boosting.perturbation_start
    for _ in range(cfg.boosting.perturbation_halvings):
        perturbed = (1 - epsilon) * alpha + epsilon / w.r
        if gap(perturbed) > 0.0:
            return perturbed, gap(perturbed)
        epsilon /= 2
    return alpha, gaps[best]


def boost_mo_to_mo(
    w: MultiCost,
    learner: WeakLearnerSpec,
    z_prime: GuaranteeVector,
    sample: Sample,
    cfg: Optional[BoostConfig] = None,
    mo_cfg: Optional[BoostConfig] = None,
) -> BoostResult:
    """
    將 (𝒘,𝒛)-學習器提升為 (𝒘,𝒛′)-學習器

    對 av(𝒘,𝒛′) 的每個極小 J 找出分離 α_J，以 (w_{α_J}, z_{α_J}) 執行清單提升（σ_J = 2γ_J/3），
    取各清單的交集後，對每個 α 以 p^{w_α}_{μ(x)} 作為純量學習器，最後交給 boost_mo。

    Raises:
        ContractError: 𝒛 ⪯_𝒘 𝒛′ 不成立（附上分離的 J）
    """
    cfg = cfg or BoostConfig()
    mo_cfg = mo_cfg or BoostConfig(seed=cfg.seed)
    z = learner.z
    if learner.w.tensor.shape != w.tensor.shape or not np.allclose(learner.w.tensor, w.tensor):
        raise InputError("學習器的多目標成本與 𝒘 不一致")

    gaps = separating_subsets(w, z, z_prime)
    if gaps:
        raise ContractError(
            f"𝒛 ⪯ 𝒛′ 不成立：J = {list(gaps[0])} 對 𝒛 可達但對 𝒛′ 被迴避",
            {"subset": list(gaps[0]), "z": list(z.z), "z_prime": list(z_prime.z)},
        )

    avoided = avoided_sets(w, z_prime)
    if not avoided.sets:
        logger.info("av(𝒘,𝒛′) 為空，使用平凡硬幣學習器")
        trivial = coin_trivial_learner(w, z_prime)
        hypothesis = trivial.fit(sample, np.random.default_rng(cfg.seed))
        report = BoostReport(
            algorithm="boost_mo_to_mo",
            config={"seed": cfg.seed},
            objective_losses=[empirical_loss(cost, hypothesis, sample) for cost in w.costs],
            extra={"avoided": [], "trivial": True},
        )
        return BoostResult(hypothesis, report, lists=ListFunction.full(w.costs[0], sample.domain_size))

    lists: Optional[ListFunction] = None
    stages: List[Dict[str, Any]] = []
    for index, subset in enumerate(avoided.minimal):
        labels = tuple(subset)
        alpha, gap = _separating_weights(w, z, labels)
        w_alpha, z_alpha = scalarize(w, alpha), z.scalarize(alpha)
        gamma = margin(w_alpha, z_alpha)
        if gamma <= 0.0:
            raise ContractError(f"J = {subset} 的純量化保證沒有正邊際", {"subset": subset})
        stage_cfg = cfg.model_copy(update={"sigma": 2 * gamma / 3, "seed": cfg.seed + index})
        stage = boost_to_list(w_alpha, scalarized_learner(learner, alpha), sample, stage_cfg)
        assert stage.lists is not None
        lists = stage.lists if lists is None else lists.intersect(stage.lists)
        stages.append({"subset": subset, "alpha": alpha.tolist(), "gap": gap, "gamma": gamma, "report": stage.report.model_dump()})
    assert lists is not None

    points = sample.point_array
    avoids = all(not np.any(lists.mask[np.ix_(points, subset)].all(axis=1)) for subset in avoided.minimal)

    def factory(alpha: np.ndarray) -> WeakLearnerSpec:
        return ListDerivedLearner(scalarize(w, alpha), z_prime.scalarize(alpha), lists)

    result = boost_mo(w, factory, z_prime, sample, mo_cfg)
    result.lists = lists
    result.report.algorithm = "boost_mo_to_mo"
    sizes = lists.sizes[points]
    result.report.coverage = float(lists.contains(points, sample.label_array).mean())
    result.report.max_list_size = int(sizes.max())
    result.report.mean_list_size = float(sizes.mean())
    result.report.extra.update({"avoided": avoided.sets, "minimal": avoided.minimal, "avoids_all": avoids, "stages": stages})
    return result
