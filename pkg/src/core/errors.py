"""
# src/core/errors.py
錯誤模組：定義輸入、容量、契約與數值錯誤
"""

from typing import Any, Dict, Optional


class CostBoostError(Exception):
    """所有領域錯誤的基類"""

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def to_dict(self) -> Dict[str, Any]:
        """轉換為字典用於序列化"""
        return {"error": type(self).__name__, "message": self.message, **self.detail}


class InputError(CostBoostError, ValueError):
    """輸入格式或維度不一致"""


class CapacityError(InputError):
    """超出桌面規模上限（標籤數、網格維度等）"""


class ContractError(CostBoostError):
    """理論前提不成立，例如 γ ≤ 0 或偏序不成立"""


class NumericError(CostBoostError, ArithmeticError):
    """數值崩潰：樞軸過小、迭代上限或可行性驗證失敗"""
