"""
qcnnlab 日志工具模块
统一的日志记录器：诊断信息写到 stderr 和按日期滚动的日志文件，stdout 只留给结果路径
"""

import os
import sys
import time
import logging
from contextlib import contextmanager
from datetime import datetime

from qcnnlab.config import config

# 日志级别映射
LOG_LEVELS = {
    'debug': logging.DEBUG,
    'info': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR,
    'critical': logging.CRITICAL
}

# 进程池中的采样块也会写日志，格式里带上进程名
LOG_FORMAT = '%(asctime)s - %(name)s - %(processName)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(name, level='info', log_file=None):
    """
    设置日志记录器

    Args:
        name: 日志记录器名称
        level: 日志级别
        log_file: 日志文件路径，None 表示只写 stderr

    Returns:
        logger: 日志记录器
    """
    logger = logging.getLogger(name)
    logger.setLevel(LOG_LEVELS.get(level.lower(), logging.INFO))
    logger.propagate = False
    logger.handlers = []

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

    if log_file:
        try:
            os.makedirs(os.path.dirname(log_file), exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)
        except OSError as e:
            sys.stderr.write(f"无法创建日志文件 {log_file}: {e}\n")

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)
    return logger


def get_default_logger(name='qcnnlab'):
    """
    按配置项 log_level / log_dir 获取默认日志记录器，log_dir 为空时不写文件

    Args:
        name: 日志记录器名称

    Returns:
        logger: 日志记录器
    """
    log_dir = config.get('log_dir')
    log_file = os.path.join(log_dir, f"{name}_{datetime.now().strftime('%Y%m%d')}.log") if log_dir else None
    return setup_logger(name, config.get('log_level', 'info'), log_file)


def set_level(level):
    """
    调整默认日志记录器的级别

    Args:
        level: 日志级别名称
    """
    if level.lower() not in LOG_LEVELS:
        logger.warning(f"未知的日志级别 {level}，保持 {logging.getLevelName(logger.level)}")
        return
    logger.setLevel(LOG_LEVELS[level.lower()])


@contextmanager
def timed(label, timings=None):
    """
    记录一段代码的用时

    Args:
        label: 计时项名称
        timings: 可选的字典，退出时写入 label -> 秒数
    """
    started = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - started
        if timings is not None:
            timings[label] = timings.get(label, 0.0) + elapsed
        logger.debug(f"{label} 用时 {elapsed:.3f} 秒")


# 导出默认日志记录器
logger = get_default_logger()
