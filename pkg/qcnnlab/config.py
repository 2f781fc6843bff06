"""
qcnnlab 配置管理模块
集中管理运行参数：默认值 < qcnn_config.json < QCNNLAB_CONFIG (JSON) < QCNNLAB_<键名> 单项覆盖
"""

import os
import json
import logging
from pathlib import Path

from qcnnlab.errors import ConfigError

# 基础路径
PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_FILE = PROJECT_ROOT / 'qcnn_config.json'
PRESETS_DIR = PROJECT_ROOT / 'presets'
ENV_PREFIX = 'QCNNLAB_'

# 默认配置
DEFAULT_CONFIG = {
    'log_level': 'info',
    'log_dir': str(PROJECT_ROOT / 'logs'),
    'results_dir': str(PROJECT_ROOT / 'results'),
    'default_n': 1215,
    'default_shots': 10000,
    'default_seed': 20220101,
    'block_shots': 1024,           # 每个随机数块的采样次数
    'lanczos_tol': 1e-10,
    'lanczos_krylov': 200,
    'lanczos_restarts': 1,
    'max_statevector_qubits': 20,
    'max_window_bits': 16,
    'backprop_term_cap': 10 ** 7,
    'mc_max_shots': 1600000,
    'mc_sigma': 3.0,
    'workers': 0,                  # 0 表示按物理核数自动设置
    'progress': False
}

# 必须为正数的数值项
_POSITIVE_KEYS = ('default_shots', 'block_shots', 'lanczos_tol', 'lanczos_krylov', 'lanczos_restarts',
                  'max_statevector_qubits', 'max_window_bits', 'backprop_term_cap', 'mc_max_shots',
                  'mc_sigma')


def _coerce(key, text):
    """按默认值的类型解析环境变量中的单项配置"""
    default = DEFAULT_CONFIG[key]
    try:
        if isinstance(default, bool):
            return text.strip().lower() in ('1', 'true', 'yes', 'on')
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"环境变量 {ENV_PREFIX}{key.upper()} 不是合法的数值: {text}")
    return text


class Config:
    """配置管理类"""
    _instance = None
    _config = None

    def __new__(cls):
        """单例模式"""
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
            cls._instance._load_config()
        return cls._instance

    def _load_config(self):
        """加载配置"""
        self._config = DEFAULT_CONFIG.copy()

        # 从配置文件加载
        if CONFIG_FILE.exists():
            try:
                with open(CONFIG_FILE, 'r', encoding='utf-8') as f:
                    self._config.update(json.load(f))
            except Exception as e:
                logging.error(f"加载配置文件出错: {e}")

        # 从环境变量加载
        if os.environ.get(f'{ENV_PREFIX}CONFIG'):
            try:
                self._config.update(json.loads(os.environ[f'{ENV_PREFIX}CONFIG']))
            except Exception as e:
                logging.error(f"加载环境变量配置出错: {e}")

        for key in DEFAULT_CONFIG:
            value = os.environ.get(f'{ENV_PREFIX}{key.upper()}')
            if value is not None:
                self._config[key] = _coerce(key, value)

        self.validate()

    def reload(self):
        """重新读取配置文件与环境变量，丢弃运行时的修改"""
        self._load_config()
        return self

    def validate(self):
        """
        检查数值项的取值范围

        Returns:
            Config: 自身
        """
        for key in _POSITIVE_KEYS:
            value = self._config.get(key)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"配置项 {key} 必须为正数: {value!r}")
        if int(self._config.get('workers', 0)) < 0:
            raise ConfigError(f"配置项 workers 不能为负: {self._config['workers']}")
        return self

    def get(self, key, default=None):
        """获取配置项"""
        return self._config.get(key, default)

    def set(self, key, value):
        """设置配置项"""
        self._config[key] = value
        return self

    @property
    def as_dict(self):
        """返回配置字典"""
        return self._config.copy()


# 导出配置实例
config = Config()
