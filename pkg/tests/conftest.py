"""
qcnnlab 测试公共夹具
"""

import numpy as np
import pytest

from qcnnlab.config import config
from qcnnlab.core.experiment_manager import ExperimentManager


@pytest.fixture(autouse=True)
def serial_workers():
    """测试中固定单进程执行"""
    old = config.get('workers')
    config.set('workers', 1)
    yield
    config.set('workers', old)


@pytest.fixture
def results_dir(tmp_path):
    """把结果目录指向临时目录"""
    old = config.get('results_dir')
    config.set('results_dir', str(tmp_path))
    yield tmp_path
    config.set('results_dir', old)


@pytest.fixture
def manager():
    return ExperimentManager(workers=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
