"""
qcnnlab 异常模块
定义各层共用的异常类型，以及命令行退出码
"""


class QcnnLabError(Exception):
    """qcnnlab 异常基类"""
    exit_code = 1


class InvalidInputError(QcnnLabError, ValueError):
    """输入不合法"""
    exit_code = 2


class ConfigError(InvalidInputError):
    """实验配置不合法"""
    exit_code = 2


class ConvergenceError(QcnnLabError, RuntimeError):
    """Lanczos 迭代未收敛"""
    exit_code = 3

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InconclusiveThresholdError(QcnnLabError, RuntimeError):
    """蒙特卡罗阈值探测在最大采样数后仍无显著结论"""
    exit_code = 4

    def __init__(self, message, lower, upper, probe=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.probe = probe


class CircuitConditionError(QcnnLabError, RuntimeError):
    """量子纠错线路没有把 X 基矢映射为 X 基矢"""


class TermOverflowError(QcnnLabError, RuntimeError):
    """精确反向传播的项数超过上限"""

    def __init__(self, message, depth_reached):
        super().__init__(message)
        self.depth_reached = depth_reached


class UnsupportedChannelError(QcnnLabError, NotImplementedError):
    """解析衰减公式不支持的噪声信道"""


class ExportError(QcnnLabError, OSError):
    """结果文件读写失败"""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
