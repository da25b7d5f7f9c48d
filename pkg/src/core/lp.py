"""
# src/core/lp.py
線性規劃模組：稠密單純形表（兩階段法），以 Bland 法則確保不循環且結果可重現

問題規模極小（n, m 約為 2^k + k），因此使用稠密 numpy 表格，不依賴外部求解器。
"""

import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import SolverConfig, get_config
from src.core.errors import InputError, NumericError

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[float], Sequence[Sequence[float]], np.ndarray]


class Sense(str, Enum):
    """約束方向"""

    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, Enum):
    """求解狀態"""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LinearProgram:
    """
    線性規劃：最小化（或最大化）c·x，滿足 A x (≤ | = | ≥) b 與 lower ≤ x ≤ upper

    未提供 lower 時預設為 0，未提供 upper 時預設為 +inf。
    """

    def __init__(
        self,
        objective: ArrayLike,
        constraint_matrix: ArrayLike,
        constraint_rhs: ArrayLike,
        senses: Optional[Sequence[Union[Sense, str]]] = None,
        lower: Optional[ArrayLike] = None,
        upper: Optional[ArrayLike] = None,
        maximize: bool = False,
    ) -> None:
        c = np.asarray(objective, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InputError("目標向量必須是非空的一維向量")
        n = c.size

        A = np.asarray(constraint_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise InputError(
                f"約束矩陣維度 {A.shape} 與變數數 {n} 不一致",
                {"matrix_shape": list(A.shape), "n": n},
            )
        b = np.asarray(constraint_rhs, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise InputError(f"右端項長度 {b.size} 與約束數 {A.shape[0]} 不一致")

        if senses is None:
            parsed = [Sense.LE] * A.shape[0]
        else:
            if len(senses) != A.shape[0]:
                raise InputError(f"約束方向數 {len(senses)} 與約束數 {A.shape[0]} 不一致")
            try:
                parsed = [Sense(s) for s in senses]
            except ValueError as e:
                raise InputError(f"無效的約束方向: {e}")

        lo = np.zeros(n) if lower is None else np.asarray(lower, dtype=float).reshape(-1)
        up = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).reshape(-1)
        if lo.size != n or up.size != n:
            raise InputError("變數上下界長度與變數數不一致")

        for name, arr in (("目標", c), ("約束矩陣", A), ("右端項", b)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name}含有 NaN 或 Inf")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise InputError("變數上下界含有 NaN")
        if np.any(lo == np.inf) or np.any(up == -np.inf) or np.any(lo > up):
            raise InputError("變數上下界不一致")

        self.objective = c
        self.constraint_matrix = A
        self.constraint_rhs = b
        self.senses: List[Sense] = parsed
        self.lower = lo
        self.upper = up
        self.maximize = maximize

    @property
    def n_variables(self) -> int:
        return int(self.objective.size)

    @property
    def n_constraints(self) -> int:
        return int(self.constraint_rhs.size)


class LpSolution:
    """求解結果"""

    def __init__(
        self,
        status: LpStatus,
        optimal_value: float = float("nan"),
        primal: Optional[np.ndarray] = None,
        iterations: int = 0,
        max_violation: float = 0.0,
    ) -> None:
        self.status = status
        self.optimal_value = optimal_value
        self.primal = primal if primal is not None else np.zeros(0)
        self.iterations = iterations
        self.max_violation = max_violation

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def to_dict(self) -> Dict[str, Any]:
        """轉換為字典用於序列化"""
        return {
            "status": self.status.value,
            "optimal_value": self.optimal_value if self.is_optimal else None,
            "primal": self.primal.tolist(),
            "iterations": self.iterations,
        }

    def __repr__(self) -> str:
        return f"LpSolution(status={self.status.value}, value={self.optimal_value})"


class _StandardForm:
    """x = offset + M y，y ≥ 0；約束 A_y y (sense) b_y，b_y ≥ 0"""

    def __init__(self, lp: LinearProgram) -> None:
        n = lp.n_variables
        columns: List[Tuple[int, float]] = []
        bound_rows: List[Tuple[int, float]] = []
        offset = np.zeros(n)

        for j in range(n):
            lo, up = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                columns.append((j, 1.0))
                if np.isfinite(up):
                    bound_rows.append((len(columns) - 1, up - lo))
            elif np.isfinite(up):
                offset[j] = up
                columns.append((j, -1.0))
            else:
                # 自由變數拆成正負兩部分
                columns.append((j, 1.0))
                columns.append((j, -1.0))

        transform = np.zeros((n, len(columns)))
        for col, (j, sign) in enumerate(columns):
            transform[j, col] = sign

        A = lp.constraint_matrix @ transform
        b = lp.constraint_rhs - lp.constraint_matrix @ offset
        senses = list(lp.senses)
        if bound_rows:
            extra = np.zeros((len(bound_rows), len(columns)))
            for row, (col, width) in enumerate(bound_rows):
                extra[row, col] = 1.0
            A = np.vstack([A, extra])
            b = np.concatenate([b, [width for _, width in bound_rows]])
            senses.extend([Sense.LE] * len(bound_rows))

        flip = b < 0
        A[flip] *= -1.0
        b[flip] *= -1.0
        for i in np.flatnonzero(flip):
            if senses[i] == Sense.LE:
                senses[i] = Sense.GE
            elif senses[i] == Sense.GE:
                senses[i] = Sense.LE

        sign = -1.0 if lp.maximize else 1.0
        self.cost = sign * (lp.objective @ transform)
        self.offset = offset
        self.transform = transform
        self.A = A
        self.b = b
        self.senses = senses


def _pivot(T: np.ndarray, row: int, col: int, pivot_tol: float) -> None:
    piv = T[row, col]
    if abs(piv) < pivot_tol:
        raise NumericError(
            f"樞軸元素 {piv:.3e} 小於容差 {pivot_tol:.0e}",
            {"row": row, "column": col, "pivot": float(piv)},
        )
    T[row] /= piv
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    rhs = T[:-1, -1]
    rhs[(rhs < 0.0) & (rhs > -1e-11)] = 0.0


def _run_simplex(
    T: np.ndarray, basis: List[int], cfg: SolverConfig, used: int
) -> Tuple[bool, int]:
    """以 Bland 法則迭代至最優；返回 (是否有界, 累計迭代數)"""
    m = T.shape[0] - 1
    iterations = used
    while True:
        reduced = T[m, :-1]
        candidates = np.flatnonzero(reduced < -cfg.cost_tol)
        if candidates.size == 0:
            return True, iterations
        col = int(candidates[0])

        column = T[:m, col]
        rows = np.flatnonzero(column > cfg.pivot_tol)
        if rows.size == 0:
            return False, iterations
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        row = int(ties[np.argmin([basis[i] for i in ties])])

        _pivot(T, row, col, cfg.pivot_tol)
        basis[row] = col
        iterations += 1
        if iterations > cfg.max_iterations:
            raise NumericError(
                f"單純形法超過迭代上限 {cfg.max_iterations}",
                {"iterations": iterations},
            )


def _price_out(T: np.ndarray, basis: List[int], cost: np.ndarray) -> None:
    """依給定成本重算最後一列的縮減成本與目標值"""
    m = T.shape[0] - 1
    T[m, :-1] = cost
    T[m, -1] = 0.0
    for i in range(m):
        c_b = cost[basis[i]]
        if c_b != 0.0:
            T[m] -= c_b * T[i]


def solve(lp: LinearProgram, config: Optional[SolverConfig] = None) -> LpSolution:
    """
    以兩階段單純形法求解線性規劃

    Args:
        lp: 線性規劃
        config: 求解器容差（預設取自全域配置）

    Returns:
        LpSolution: 狀態、最優值與原始解

    Raises:
        NumericError: 樞軸過小、迭代超限或最優解驗證失敗
    """
    cfg = config or get_config().solver
    sf = _StandardForm(lp)
    m, ny = sf.A.shape

    slack_of: Dict[int, int] = {}
    n_slack = 0
    for i, sense in enumerate(sf.senses):
        if sense != Sense.EQ:
            slack_of[i] = ny + n_slack
            n_slack += 1
    art_rows = [i for i, s in enumerate(sf.senses) if s != Sense.LE]
    n_art = len(art_rows)
    n_cols = ny + n_slack + n_art

    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :ny] = sf.A
    T[:m, -1] = sf.b
    basis: List[int] = [0] * m
    for i, sense in enumerate(sf.senses):
        if sense == Sense.LE:
            T[i, slack_of[i]] = 1.0
            basis[i] = slack_of[i]
        elif sense == Sense.GE:
            T[i, slack_of[i]] = -1.0
    for a, i in enumerate(art_rows):
        T[i, ny + n_slack + a] = 1.0
        basis[i] = ny + n_slack + a

    iterations = 0
    if n_art:
        phase_one = np.zeros(n_cols)
        phase_one[ny + n_slack :] = 1.0
        _price_out(T, basis, phase_one)
        _, iterations = _run_simplex(T, basis, cfg, iterations)

        infeasibility = -T[m, -1]
        scale = max(1.0, float(np.abs(sf.b).max(initial=0.0)))
        if infeasibility > cfg.tol_feas * scale:
            logger.debug(f"第一階段殘量 {infeasibility:.3e}，判定不可行")
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)

        # 將殘留於基底的人工變數換出；無法換出的列為冗餘
        redundant: List[int] = []
        for i in range(m):
            if basis[i] < ny + n_slack:
                continue
            row = T[i, : ny + n_slack]
            movable = np.flatnonzero(np.abs(row) > cfg.pivot_tol)
            if movable.size:
                col = int(movable[0])
                _pivot(T, i, col, cfg.pivot_tol)
                basis[i] = col
            else:
                redundant.append(i)
        if redundant:
            keep = [i for i in range(m) if i not in redundant]
            T = T[keep + [m]]
            basis = [basis[i] for i in keep]
            m = len(keep)
        T = np.delete(T, np.s_[ny + n_slack : n_cols], axis=1)

    phase_two = np.concatenate([sf.cost, np.zeros(n_slack)])
    _price_out(T, basis, phase_two)
    bounded, iterations = _run_simplex(T, basis, cfg, iterations)
    if not bounded:
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)

    y = np.zeros(ny + n_slack)
    for i, var in enumerate(basis):
        y[var] = T[i, -1]
    x = sf.offset + sf.transform @ y[:ny]

    violation = _max_violation(lp, x)
    if violation > cfg.tol_feas:
        raise NumericError(
            f"最優解違反約束 {violation:.3e}，超過容差 {cfg.tol_feas:.0e}",
            {"violation": violation},
        )

    value = float(lp.objective @ x)
    return LpSolution(
        LpStatus.OPTIMAL,
        optimal_value=value,
        primal=x,
        iterations=iterations,
        max_violation=violation,
    )


def _max_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """回代檢查：各約束與上下界的相對違反量"""
    worst = 0.0
    if lp.n_constraints:
        lhs = lp.constraint_matrix @ x
        scale = 1.0 + np.abs(lp.constraint_rhs)
        for i, sense in enumerate(lp.senses):
            gap = lhs[i] - lp.constraint_rhs[i]
            if sense == Sense.LE:
                excess = max(gap, 0.0)
            elif sense == Sense.GE:
                excess = max(-gap, 0.0)
            else:
                excess = abs(gap)
            worst = max(worst, excess / scale[i])
    finite_lo = np.isfinite(lp.lower)
    finite_up = np.isfinite(lp.upper)
    if finite_lo.any():
        worst = max(worst, float(np.max(lp.lower[finite_lo] - x[finite_lo], initial=0.0)))
    if finite_up.any():
        worst = max(worst, float(np.max(x[finite_up] - lp.upper[finite_up], initial=0.0)))
    return worst
