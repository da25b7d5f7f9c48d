"""
測試配置: 定義測試用的 fixtures
"""

import typing
from unittest.mock import MagicMock, patch

import fakeredis
import numpy as np
import pytest

from src.config import Config, _config_manager, get_config
from src.core.attainability import MultiCost
from src.core.games import CostMatrix
from src.core.learners import Instance


@pytest.fixture(autouse=True)
def reset_singletons() -> typing.Generator[None, None, None]:
    """自動重置所有單例模式"""
    _config_manager.reset()

    from src.core.queue import QueueManager

    QueueManager._instance = None

    yield


@pytest.fixture
def fake_redis() -> typing.Generator[fakeredis.FakeRedis, None, None]:
    """提供功能性的假 Redis 實例"""
    redis_instance = fakeredis.FakeRedis()
    with patch("src.core.queue.Redis", return_value=redis_instance):
        yield redis_instance


@pytest.fixture
def mock_job() -> MagicMock:
    """模擬 RQ Job"""
    mock = MagicMock()
    mock.id = "test-job-id"
    mock.get_status.return_value = "queued"
    mock.created_at = None
    mock.started_at = None
    mock.ended_at = None
    mock.exc_info = None
    mock.origin = "medium"
    return mock


@pytest.fixture
def test_config(tmp_path: typing.Any) -> Config:
    """提供測試用配置：輸出寫入暫存目錄"""
    _config_manager.reset()
    config = get_config()
    config.redis.host = "localhost"
    config.redis.port = 6379
    config.harness.output_dir = str(tmp_path / "runs")
    config.harness.workers = 1
    return config


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def zero_one_3() -> CostMatrix:
    return CostMatrix.zero_one(3)


@pytest.fixture
def asymmetric_binary() -> CostMatrix:
    """w₊ = 0.6、w₋ = 0.3，V(w) = 0.2"""
    return CostMatrix.binary(w_plus=0.6, w_minus=0.3)


@pytest.fixture
def population_driven() -> MultiCost:
    return MultiCost.population_driven()


@pytest.fixture
def graded_pair() -> MultiCost:
    """k = 3：0-1 成本與一個對稱的分級成本"""
    graded = CostMatrix(k=3, entries=[[0.0, 0.6, 1.0], [0.6, 0.0, 0.8], [1.0, 0.8, 0.0]])
    return MultiCost(costs=[CostMatrix.zero_one(3), graded])


@pytest.fixture
def small_instance() -> Instance:
    return Instance.random(50, 2, np.random.default_rng(7))
