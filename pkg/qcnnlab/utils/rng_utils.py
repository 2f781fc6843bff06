"""
qcnnlab 随机数工具模块
基于计数器的随机数流：每个 (种子, 块序号) 对应一个独立的 Philox 流，
保证采样结果与执行顺序和并行方式无关
"""

import numpy as np

from qcnnlab.config import config


def block_generator(seed, block_index):
    """
    获取指定块的随机数生成器

    Args:
        seed: 运行种子
        block_index: 块序号

    Returns:
        numpy.random.Generator: 随机数生成器
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block_index)])))


def split_blocks(shots, block=None):
    """
    把采样次数切分成固定大小的块

    Args:
        shots: 总采样次数
        block: 块大小，默认取配置项 block_shots

    Returns:
        list: 每块的采样次数
    """
    block = int(block or config.get('block_shots', 1024))
    full, rest = divmod(int(shots), block)
    return [block] * full + ([rest] if rest else [])


def as_generator(rng):
    """
    把种子或生成器统一转换为生成器

    Args:
        rng: None、整数种子或 numpy Generator

    Returns:
        numpy.random.Generator: 随机数生成器
    """
    if isinstance(rng, np.random.Generator):
        return rng
    return block_generator(config.get('default_seed') if rng is None else rng, 0)
