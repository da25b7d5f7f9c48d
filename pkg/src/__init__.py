"""
CostBoost - 成本敏感與多目標提升

提供賽局值、門檻階梯、可達性判定、提升演算法與可重現的實驗驅動。
"""

__version__ = "0.1.0"
