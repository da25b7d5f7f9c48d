"""實驗驅動：實例產生、二分/多分法實驗、區域追蹤、等價性檢查與暴力神諭"""
