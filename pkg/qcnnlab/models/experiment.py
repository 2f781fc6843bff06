"""
qcnnlab 实验数据模型
定义实验配置、运行状态与结果记录的数据结构
"""

import time
from dataclasses import dataclass, field, replace
from enum import Enum

from qcnnlab import __version__
from qcnnlab.config import config
from qcnnlab.errors import InvalidInputError, ConfigError
from qcnnlab.models.architecture import Architecture, STYLES, max_depth
from qcnnlab.models.channel import ChannelSpec
from qcnnlab.models.hamiltonian import HamiltonianParams, AXES
from qcnnlab.models.pauli import ClusterKind

KINDS = ('cluster-noise', 'sweep', 'threshold', 'backprop', 'truthtable', 'gs')
NOISE_AXES = ('pX', 'pY', 'pZ', 'depol')
FORMATS = ('csv', 'json')
CSV_COLUMNS = ('sweep_value', 'depth', 'y', 'y_stderr', 'density', 'shots', 'seed')
FORMAT_VERSION = 1

# 需要 QCNN 结构（因而需要深度列表）的实验
_ARCH_KINDS = ('cluster-noise', 'sweep', 'backprop', 'truthtable')


def parse_depths(value):
    """
    解析深度列表，支持 "A..B"、"1,3,5"、单个整数或整数序列

    Args:
        value: 深度描述

    Returns:
        tuple: 深度元组
    """
    if isinstance(value, int):
        return (value,)
    if isinstance(value, str):
        text = value.strip()
        try:
            if '..' in text:
                start, _, stop = text.partition('..')
                return tuple(range(int(start), int(stop) + 1))
            return tuple(int(part) for part in text.split(',') if part.strip())
        except ValueError:
            raise ConfigError(f"无法解析深度列表: {value}")
    try:
        return tuple(int(d) for d in value)
    except (TypeError, ValueError):
        raise ConfigError(f"无法解析深度列表: {value}")


def noise_channel(axis, value, base=None):
    """
    按噪声扫描轴构造信道

    Args:
        axis: 'pX'、'pY'、'pZ' 或 'depol'
        value: 扫描值
        base: 其余分量所取的信道，默认为零信道

    Returns:
        ChannelSpec: 信道
    """
    base = base or ChannelSpec()
    if axis == 'depol':
        return ChannelSpec.depolarizing(value)
    if axis not in NOISE_AXES:
        raise ConfigError(f"未知的噪声扫描轴: {axis}")
    return replace(base, **{axis: value})


@dataclass
class ExperimentConfig:
    """一次实验的声明式配置"""
    kind: str
    phase: ClusterKind = ClusterKind.ZXZ
    style: str = 'alt-xz'
    n: int = None
    depths: tuple = (1,)
    hamiltonian: HamiltonianParams = None
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    axis: str = None
    grid: tuple = ()
    shots: int = None
    seed: int = None
    out: str = None
    format: str = 'csv'
    options: dict = field(default_factory=dict)
    name: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"未知的实验类型: {self.kind}，可选 {', '.join(KINDS)}")
        try:
            self.phase = ClusterKind.parse(self.phase)
        except InvalidInputError as e:
            raise ConfigError(str(e))
        if self.n is None:
            self.n = self.hamiltonian.N if self.hamiltonian else int(config.get('default_n'))
        self.n = int(self.n)
        self.depths = parse_depths(self.depths)
        self.grid = tuple(float(v) for v in self.grid)
        self.shots = int(config.get('default_shots') if self.shots is None else self.shots)
        self.seed = int(config.get('default_seed') if self.seed is None else self.seed)
        self.options = dict(self.options or {})

    def validate(self):
        """
        检查配置的一致性

        Returns:
            ExperimentConfig: 自身
        """
        if self.shots < 1:
            raise ConfigError(f"采样次数必须 >= 1: {self.shots}")
        if self.seed < 0:
            raise ConfigError(f"种子必须为非负整数: {self.seed}")
        if self.format not in FORMATS:
            raise ConfigError(f"未知的输出格式: {self.format}")
        if self.style not in STYLES:
            raise ConfigError(f"未知的结构风格: {self.style}，可选 {', '.join(STYLES)}")
        steps = [b - a for a, b in zip(self.grid, self.grid[1:])]
        if steps and not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ConfigError("扫描网格必须严格单调")

        if self.kind in _ARCH_KINDS:
            if not self.depths:
                raise ConfigError("深度列表为空")
            for d in self.depths:
                if not 1 <= d <= max_depth(self.n):
                    raise ConfigError(f"深度 {d} 超出 [1, floor(log3 N)={max_depth(self.n)}] (N={self.n})")
                try:
                    self.architecture(d)
                except InvalidInputError as e:
                    raise ConfigError(str(e))

        statevector_limit = int(config.get('max_statevector_qubits', 20))
        if self.kind == 'cluster-noise':
            if self.axis not in NOISE_AXES:
                raise ConfigError(f"cluster-noise 需要噪声扫描轴 {NOISE_AXES}，当前为 {self.axis}")
            if not self.grid:
                raise ConfigError("cluster-noise 需要非空的噪声网格")
            for value in self.grid:
                try:
                    noise_channel(self.axis, value, self.channel)
                except InvalidInputError as e:
                    raise ConfigError(str(e))
        elif self.kind in ('sweep', 'gs'):
            if self.hamiltonian is None:
                raise ConfigError(f"{self.kind} 需要哈密顿量参数")
            if self.hamiltonian.N != self.n:
                raise ConfigError(f"哈密顿量链长 {self.hamiltonian.N} 与 n={self.n} 不一致")
            try:
                self.hamiltonian.require_full_model()
            except InvalidInputError as e:
                raise ConfigError(str(e))
            if self.n > statevector_limit:
                raise ConfigError(f"{self.kind} 要求 N <= {statevector_limit}，当前 N={self.n}")
            if self.kind == 'sweep' and not self.grid:
                raise ConfigError("sweep 需要非空的参数网格")
            if self.grid and self.axis not in AXES:
                raise ConfigError(f"参数扫描轴必须为 {AXES} 之一，当前为 {self.axis}")
        elif self.kind == 'threshold':
            if self.options.get('mode', 'analytic') not in ('analytic', 'mc'):
                raise ConfigError(f"未知的阈值模式: {self.options.get('mode')}")
        return self

    def architecture(self, depth=None):
        """指定深度（默认最大深度）的 QCNN 结构"""
        depth = max(self.depths) if depth is None else depth
        return Architecture.build(self.phase, self.style, depth, self.n)

    def to_dict(self):
        """
        转换为字典

        Returns:
            dict: 可写入 JSON 的配置
        """
        return {
            'kind': self.kind,
            'name': self.name,
            'phase': self.phase.value,
            'style': self.style,
            'n': self.n,
            'depths': list(self.depths),
            'hamiltonian': self.hamiltonian.to_dict() if self.hamiltonian else None,
            'channel': self.channel.to_dict(),
            'axis': self.axis,
            'grid': list(self.grid),
            'shots': self.shots,
            'seed': self.seed,
            'out': self.out,
            'format': self.format,
            'options': dict(self.options)
        }

    @classmethod
    def from_dict(cls, data):
        """
        由字典（配置文件或结果清单中的回显）构造

        Args:
            data: 配置字典，channel 可为字典或 "x:..,y:..,z:.." 文本

        Returns:
            ExperimentConfig: 已校验的配置
        """
        data = dict(data)
        if 'kind' not in data:
            raise ConfigError("配置缺少 kind 字段")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"未知的配置字段: {', '.join(sorted(unknown))}")
        try:
            channel = data.get('channel')
            if isinstance(channel, str):
                data['channel'] = ChannelSpec.parse(channel)
            elif isinstance(channel, dict):
                data['channel'] = ChannelSpec(**channel)
            elif channel is None:
                data.pop('channel', None)
            if data.get('hamiltonian') is not None:
                data['hamiltonian'] = HamiltonianParams.from_dict(data['hamiltonian'])
            return cls(**data).validate()
        except ConfigError:
            raise
        except (InvalidInputError, TypeError) as e:
            raise ConfigError(f"配置不合法: {e}")


class RunStatus(Enum):
    """实验运行状态枚举"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    ERROR = "error"


@dataclass
class ResultRow:
    """结果表的一行"""
    sweep_value: float
    depth: int
    y: float
    y_stderr: float
    density: float
    shots: int
    seed: int

    def as_tuple(self):
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


@dataclass
class ResultRecord:
    """一次实验的结果记录"""
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION
    # 附属输出：文件后缀 -> 文本，以及 gs 实验的基态结果
    texts: dict = field(default_factory=dict)
    ground_state: object = None
    # 各阶段用时（秒）
    timings: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.config.seed

    def manifest(self):
        """
        结果清单：配置回显、版本、计时与附加结果

        Returns:
            dict: 可写入 JSON 的清单
        """
        return {
            'format_version': self.format_version,
            'library_version': __version__,
            'config': self.config.to_dict(),
            'seed': self.seed,
            'timings': dict(self.timings, wall_clock=self.wall_clock),
            'columns': list(CSV_COLUMNS),
            'extra': self.extra
        }


class ExperimentRun:
    """一次实验运行"""

    def __init__(self, run_id, experiment_config):
        """
        初始化实验运行

        Args:
            run_id: 运行ID
            experiment_config: ExperimentConfig
        """
        self.run_id = run_id
        self.config = experiment_config
        self.status = RunStatus.PENDING
        self.message = "等待开始"
        self.result = None
        self.error = None
        self.created_at = time.time()
        self.updated_at = time.time()
        self.started_at = None
        self.completed_at = None

    def start(self):
        """开始运行"""
        self.status = RunStatus.RUNNING
        self.message = "实验运行中"
        self.started_at = time.time()
        self.updated_at = time.time()

    def complete(self, result):
        """
        完成运行

        Args:
            result: ResultRecord
        """
        self.status = RunStatus.COMPLETED
        self.result = result
        self.message = "实验已完成"
        self.updated_at = time.time()
        self.completed_at = time.time()

    def fail(self, error):
        """
        运行失败

        Args:
            error: 异常或错误信息
        """
        self.status = RunStatus.ERROR
        self.error = error
        self.message = f"实验失败: {error}"
        self.updated_at = time.time()

    @property
    def duration(self):
        if self.started_at is None:
            return None
        return (self.completed_at or self.updated_at) - self.started_at

    def to_dict(self):
        """
        转换为字典

        Returns:
            dict: 运行信息
        """
        return {
            'run_id': self.run_id,
            'kind': self.config.kind,
            'name': self.config.name,
            'status': self.status.value,
            'message': self.message,
            'created_at': self.created_at,
            'updated_at': self.updated_at,
            'completed_at': self.completed_at,
            'duration': self.duration,
            'rows': len(self.result.rows) if self.result else 0,
            'error': str(self.error) if self.error else None
        }
