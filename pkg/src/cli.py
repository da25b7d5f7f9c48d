"""
命令行介面：賽局值、門檻階梯、可達性、提升演算法、實驗以及服務進程

標籤旗標（--subset）為 1 起算；所有 JSON 檔案內的標籤為 0 起算。
結束碼：0 成功，1 契約/數值錯誤，2 輸入錯誤。
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from src.config import get_config
from src.core.attainability import (
    AttainMode,
    GuaranteeVector,
    MultiCost,
    is_coin_attainable,
    is_dice_attainable,
    separating_subsets,
)
from src.core.boosting import (
    BoostConfig,
    BoostResult,
    boost_binary,
    boost_mo,
    boost_to_list,
    boost_to_s_list,
    list_to_weak,
    objective_accuracy,
)
from src.core.errors import ContractError, CostBoostError, InputError, NumericError
from src.core.games import CostMatrix, game_value, threshold_ladder
from src.core.learners import (
    Instance,
    WeakLearnerSpec,
    empirical_loss,
    planted_multi_learner,
    planted_noise_learner,
    scalarized_learner,
)
from src.harness.models import ExperimentConfig
from src.harness.oracle import oracle_game_value
from src.harness.runner import run_experiment

logger = logging.getLogger(__name__)


def setup_logging(log_level: str) -> None:
    """
    設置日誌記錄（輸出至 stderr）

    Args:
        log_level: 日誌級別 (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    config = get_config()
    config.log.level = log_level
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)
    logging.basicConfig(level=numeric_level, format=config.log.format, handlers=[logging.StreamHandler()], force=True)


def _fmt(value: float) -> str:
    return f"{value:.9f}"


def _load_multi(source: str) -> MultiCost:
    """成本來源：檔案路徑、population_driven 或 zero_one:K"""
    if source == "population_driven":
        return MultiCost.population_driven()
    if source.startswith("zero_one:"):
        try:
            k = int(source.split(":", 1)[1])
        except ValueError:
            raise InputError(f"無法解析成本來源: {source}")
        return MultiCost.single(CostMatrix.zero_one(k))
    return MultiCost.load(source)


def _load_cost(source: str) -> CostMatrix:
    multi = _load_multi(source)
    if multi.r != 1:
        raise InputError(f"此命令需要單一成本矩陣，實際 r = {multi.r}")
    return multi.costs[0]


def _parse_subset(text: Optional[str], k: int) -> Optional[List[int]]:
    """把 1 起算的 "1,2,3" 轉為 0 起算的標籤"""
    if text is None:
        return None
    try:
        labels = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"無法解析子集合 {text!r}")
    if not labels or any(y < 1 or y > k for y in labels):
        raise InputError(f"子集合 {text!r} 必須是 1…{k} 之間的標籤")
    return [y - 1 for y in labels]


def _parse_vector(text: str) -> GuaranteeVector:
    try:
        return GuaranteeVector(z=[float(part) for part in text.split(",")])
    except ValueError as e:
        raise InputError(f"無法解析保證向量 {text!r}: {e}")


def _write_json(path: str, payload: Dict[str, Any]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def _report_path(args: argparse.Namespace, name: str) -> str:
    return args.report or os.path.join(get_config().harness.output_dir, f"{name}-{args.seed}.json")


def _boost_config(args: argparse.Namespace) -> BoostConfig:
    overrides = {"T": args.rounds, "m_hat": args.m_hat, "sigma": getattr(args, "sigma", None)}
    return BoostConfig(seed=args.seed, **{k: v for k, v in overrides.items() if v is not None})


def _sample_for(args: argparse.Namespace, k: int) -> Any:
    rng = np.random.default_rng(args.seed)
    inst = Instance.random(args.domain_size, k, rng)
    train, holdout = inst.draw(args.sample_size, rng).split(args.holdout, rng)
    return inst, train, holdout


def cmd_game_value(args: argparse.Namespace) -> int:
    w = _load_cost(args.cost)
    subset = _parse_subset(args.subset, w.k)
    value = game_value(w, subset)
    print(_fmt(value.value))
    print("p: " + " ".join(_fmt(p) for p in value.minimax_strategy.probs))
    if args.oracle:
        oracle = oracle_game_value(w, value.restriction, args.step)
        print(f"oracle: {_fmt(oracle)} discrepancy: {_fmt(abs(oracle - value.value))}")
    return 0


def cmd_thresholds(args: argparse.Namespace) -> int:
    ladder = threshold_ladder(_load_cost(args.cost))
    payload = ladder.model_dump()
    payload["levels"] = [round(v, 9) for v in ladder.levels]
    print(json.dumps(payload, sort_keys=True))
    if args.report:
        _write_json(args.report, ladder.model_dump())
    return 0


def cmd_attainable(args: argparse.Namespace) -> int:
    w = _load_multi(args.cost)
    z = _parse_vector(args.z)
    mode = AttainMode(args.mode)
    subset = _parse_subset(args.subset, w.k)
    verdict = is_coin_attainable(w, z, mode) if subset is None else is_dice_attainable(w, z, subset, mode)
    print("attainable" if verdict.attainable else "not attainable")
    if verdict.alpha_witness is not None:
        print("alpha: " + " ".join(_fmt(a) for a in verdict.alpha_witness))
    if args.report:
        _write_json(args.report, verdict.model_dump(mode="json"))
    return 0


def cmd_precedes(args: argparse.Namespace) -> int:
    w = _load_multi(args.cost)
    gaps = separating_subsets(w, _parse_vector(args.z), _parse_vector(args.z_prime))
    print("true" if not gaps else "false")
    for subset in gaps:
        print("separating: " + ",".join(str(y + 1) for y in subset))
    return 0


def _finish_boost(args: argparse.Namespace, name: str, result: BoostResult, extra: Dict[str, Any]) -> int:
    payload = result.to_dict()
    payload.update(extra)
    path = _report_path(args, name)
    _write_json(path, payload)
    for key, value in extra.items():
        print(f"{key}: {_fmt(value) if isinstance(value, float) else value}")
    print(f"report: {path}")
    return 0


def cmd_boost_binary(args: argparse.Namespace) -> int:
    w = _load_cost(args.cost)
    inst, train, holdout = _sample_for(args, w.k)
    result = boost_binary(w, planted_noise_learner(w, args.z, inst), train, _boost_config(args))
    assert result.hypothesis is not None
    return _finish_boost(
        args,
        "boost-binary",
        result,
        {"consistent": bool(result.report.consistent), "holdout_loss": empirical_loss(w, result.hypothesis, holdout)},
    )


def cmd_boost_list(args: argparse.Namespace) -> int:
    w = _load_cost(args.cost)
    inst, train, holdout = _sample_for(args, w.k)
    learner = planted_noise_learner(w, args.z, inst)
    booster = boost_to_s_list if args.s_list else boost_to_list
    result = booster(w, learner, train, _boost_config(args))
    assert result.lists is not None
    h = list_to_weak(w, result.lists)
    return _finish_boost(
        args,
        "boost-list",
        result,
        {
            "coverage": float(result.report.coverage or 0.0),
            "max_list_size": int(result.report.max_list_size or 0),
            "holdout_loss": empirical_loss(w, h, holdout),
        },
    )


def cmd_boost_mo(args: argparse.Namespace) -> int:
    w = _load_multi(args.cost)
    z = _parse_vector(args.z)
    inst, train, holdout = _sample_for(args, w.k)
    inner = planted_multi_learner(w, z, inst, reserve=objective_accuracy(w.r))

    def factory(alpha: np.ndarray) -> WeakLearnerSpec:
        return scalarized_learner(inner, alpha)

    result = boost_mo(w, factory, z, train, _boost_config(args))
    assert result.hypothesis is not None
    losses = [empirical_loss(cost, result.hypothesis, holdout) for cost in w.costs]
    return _finish_boost(args, "boost-mo", result, {"holdout_losses": " ".join(_fmt(v) for v in losses)})


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg = cfg.model_copy(update={"output_dir": args.output_dir})
    outcome = run_experiment(cfg, workers=args.workers)
    print(outcome.run_dir)
    print("passed" if outcome.passed else "failed")
    return 0


def cmd_api(args: argparse.Namespace) -> int:
    import uvicorn

    config = get_config()
    if args.host:
        config.api.host = args.host
    if args.port:
        config.api.port = args.port
    if args.webhook:
        config.api.webhook_url = args.webhook
    config.api.debug = args.debug

    # reload 模式下子進程會重新讀取環境變數
    os.environ["API_HOST"] = config.api.host
    os.environ["API_PORT"] = str(config.api.port)
    os.environ["REDIS_HOST"] = config.redis.host
    os.environ["REDIS_PORT"] = str(config.redis.port)
    if config.redis.password:
        os.environ["REDIS_PASSWORD"] = config.redis.password
    if config.api.webhook_url:
        os.environ["WEBHOOK_URL"] = config.api.webhook_url
    os.environ["API_DEBUG"] = "1" if config.api.debug else "0"

    logger.info(f"啟動API伺服器於 {config.api.host}:{config.api.port}")
    uvicorn.run("src.api.app:app", host=config.api.host, port=config.api.port, reload=config.api.debug)
    return 0


def cmd_worker(args: argparse.Namespace) -> int:
    from src.worker.worker import run_worker

    config = get_config()
    if args.name:
        config.worker.name = args.name
    if args.queues:
        config.worker.queues = args.queues.split(",")
    logger.info(f"啟動Worker: {config.worker.name}")
    run_worker()
    return 0


def _add_boost_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cost", required=True, help="成本 JSON 檔、population_driven 或 zero_one:K")
    parser.add_argument("--seed", type=int, required=True, help="隨機種子（必填）")
    parser.add_argument("--domain-size", type=int, default=50, help="定義域大小 N")
    parser.add_argument("--sample-size", type=int, default=400, help="樣本數 m（含留出集）")
    parser.add_argument("--holdout", type=float, default=get_config().boosting.holdout_fraction, help="留出比例")
    parser.add_argument("--rounds", type=int, help="覆寫回合數 T")
    parser.add_argument("--m-hat", type=int, help="覆寫每輪樣本數 m̂")
    parser.add_argument("--report", help="JSON 報告路徑")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="CostBoost - 成本敏感與多目標提升工具",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="日誌級別",
    )
    parser.add_argument("--redis-host", help="Redis主機地址")
    parser.add_argument("--redis-port", type=int, help="Redis端口")
    parser.add_argument("--redis-password", help="Redis密碼")
    subparsers = parser.add_subparsers(dest="command", help="命令")

    p = subparsers.add_parser("game-value", help="計算 V_J(w) 與極小極大策略")
    p.add_argument("--cost", required=True, help="成本 JSON 檔")
    p.add_argument("--subset", help='子集合 J（1 起算，例如 "1,2"）')
    p.add_argument("--oracle", action="store_true", help="附加網格神諭比對")
    p.add_argument("--step", type=float, default=1e-2, help="神諭網格步長 (1e-2 或 1e-3)")
    p.set_defaults(handler=cmd_game_value)

    p = subparsers.add_parser("thresholds", help="門檻階梯")
    p.add_argument("--cost", required=True, help="成本 JSON 檔")
    p.add_argument("--report", help="JSON 報告路徑")
    p.set_defaults(handler=cmd_thresholds)

    p = subparsers.add_parser("attainable", help="硬幣/骰子可達性判定")
    p.add_argument("--cost", required=True, help="多目標成本 JSON 檔或 population_driven")
    p.add_argument("--z", required=True, help='保證向量，例如 "0.25,0.25"')
    p.add_argument("--subset", help="子集合 J（1 起算；預設為全部標籤）")
    p.add_argument("--mode", choices=[m.value for m in AttainMode], default=AttainMode.AUTO.value, help="判定模式")
    p.add_argument("--report", help="JSON 報告路徑")
    p.set_defaults(handler=cmd_attainable)

    p = subparsers.add_parser("precedes", help="檢查 z ⪯ z′")
    p.add_argument("--cost", required=True, help="多目標成本 JSON 檔或 population_driven")
    p.add_argument("--z", required=True, help="保證向量 z")
    p.add_argument("--z-prime", required=True, help="保證向量 z′")
    p.set_defaults(handler=cmd_precedes)

    p = subparsers.add_parser("boost-binary", help="以植入雜訊學習器執行二元提升")
    _add_boost_flags(p)
    p.add_argument("--z", type=float, required=True, help="弱學習器保證 z")
    p.set_defaults(handler=cmd_boost_binary)

    p = subparsers.add_parser("boost-list", help="弱到清單提升並轉換回弱學習器")
    _add_boost_flags(p)
    p.add_argument("--z", type=float, required=True, help="弱學習器保證 z")
    p.add_argument("--sigma", type=float, help="覆寫 σ")
    p.add_argument("--s-list", action="store_true", help="使用 s-清單提升")
    p.set_defaults(handler=cmd_boost_list)

    p = subparsers.add_parser("boost-mo", help="多目標提升")
    _add_boost_flags(p)
    p.add_argument("--z", required=True, help='保證向量，例如 "0.1,0.4"')
    p.set_defaults(handler=cmd_boost_mo)

    p = subparsers.add_parser("experiment", help="執行實驗配置")
    p.add_argument("--config", required=True, help="實驗 JSON 配置")
    p.add_argument("--workers", type=int, help="平行進程數")
    p.add_argument("--output-dir", help="覆寫輸出目錄")
    p.set_defaults(handler=cmd_experiment)

    p = subparsers.add_parser("api", help="啟動API伺服器")
    p.add_argument("--host", help="API伺服器主機地址")
    p.add_argument("--port", type=int, help="API伺服器端口")
    p.add_argument("--debug", action="store_true", help="啟用調試模式")
    p.add_argument("--webhook", help="Webhook URL")
    p.set_defaults(handler=cmd_api)

    p = subparsers.add_parser("worker", help="啟動Worker進程")
    p.add_argument("--name", help="Worker名稱")
    p.add_argument("--queues", help="要處理的隊列（逗號分隔）")
    p.set_defaults(handler=cmd_worker)

    return parser


def _exit_code(error: BaseException) -> int:
    if isinstance(error, (InputError, ValidationError, json.JSONDecodeError, FileNotFoundError)):
        return 2
    return 1


def main(argv: Optional[List[str]] = None) -> None:
    """主入口函數"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    config = get_config()
    if args.redis_host:
        config.redis.host = args.redis_host
    if args.redis_port:
        config.redis.port = args.redis_port
    if args.redis_password:
        config.redis.password = args.redis_password

    handler: Optional[Callable[[argparse.Namespace], int]] = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        sys.exit(2)

    try:
        code = handler(args)
    except (ContractError, NumericError) as e:
        print(f"錯誤: {e.message}", file=sys.stderr)
        sys.exit(1)
    except (CostBoostError, ValidationError, json.JSONDecodeError, FileNotFoundError) as e:
        print(f"錯誤: {e}", file=sys.stderr)
        sys.exit(_exit_code(e))
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
