import numpy as np
import pytest

from maple.games import DarkHex, PhantomGo
from maple.net import NetConfig, init_params
from maple.search import NetEvaluator
from maple.train import net_config_for


@pytest.fixture(scope="session")
def hex3():
    return DarkHex(3)


@pytest.fixture(scope="session")
def hex5():
    return DarkHex(5)


@pytest.fixture(scope="session")
def go3():
    return PhantomGo(3)


@pytest.fixture(scope="session")
def go5():
    return PhantomGo(5)


@pytest.fixture(scope="session")
def tiny_net(hex3):
    """Small randomly initialized net + evaluator for 3x3 Dark Hex."""
    cfg = net_config_for(hex3, blocks=1, filters=8)
    params = init_params(cfg, np.random.default_rng(42))
    return NetEvaluator(hex3, params, cfg)


@pytest.fixture(scope="session")
def tiny_net_go(go3):
    cfg = net_config_for(go3, blocks=1, filters=8)
    params = init_params(cfg, np.random.default_rng(42))
    return NetEvaluator(go3, params, cfg)


def pytest_addoption(parser):
    parser.addoption("--smoke-cache", action="store", default=None,
                     help="directory to reuse for the acceptance training run")
