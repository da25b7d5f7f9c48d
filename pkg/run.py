#!/usr/bin/env python3
"""
CostBoost 啟動腳本

使用範例:
    # 計算 0-1 成本在三個標籤上的賽局值
    python run.py game-value --cost zero_one:3

    # 判定 population-driven 成本下 z 是否可達
    python run.py attainable --cost population_driven --z 0.25,0.25

    # 執行實驗配置
    python run.py experiment --config configs/dichotomy.json --workers 4

    # 啟動 API 伺服器 / Worker 進程
    python run.py api
    python run.py worker

    # 顯示幫助信息
    python run.py --help
"""
from src.cli import main

if __name__ == "__main__":
    main()
