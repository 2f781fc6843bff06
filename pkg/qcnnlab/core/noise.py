"""
qcnnlab 噪声模块
单比特 Pauli 信道：误差构型采样、轨迹作用，以及弦序参量衰减的解析与蒙特卡罗估计

噪声只作用在 QCNN 线路之前（态制备误差）
"""

import numpy as np

from qcnnlab.core.circuits import conjugate_pauli, disentangler
from qcnnlab.errors import InvalidInputError, UnsupportedChannelError
from qcnnlab.models.channel import ErrorConfig, LETTERS
from qcnnlab.models.pauli import sop_pauli
from qcnnlab.utils.rng_utils import as_generator, block_generator, split_blocks
from qcnnlab.utils.logging_utils import logger

# 误差编码: 0=I, 1=X, 2=Y, 3=Z
CODE = {'I': 0, 'X': 1, 'Y': 2, 'Z': 3}


def draw_codes(ch, shape, rng):
    """
    按信道概率抽取逐格点误差编码

    Args:
        ch: ChannelSpec
        shape: 输出形状
        rng: numpy Generator

    Returns:
        numpy.ndarray: int8 编码数组
    """
    u = rng.random(shape)
    c1, c2, c3 = np.cumsum([ch.pX, ch.pY, ch.pZ])
    codes = np.zeros(shape, dtype=np.int8)
    codes[u < c3] = 3
    codes[u < c2] = 2
    codes[u < c1] = 1
    return codes


def sample_error_codes(ch, n, shots, seed):
    """
    按 (种子, 块序号) 随机数流批量采样误差编码，结果与分块执行顺序无关

    Args:
        ch: ChannelSpec
        n: 链长
        shots: 采样次数
        seed: 运行种子

    Returns:
        numpy.ndarray: (shots, N) 的 int8 编码
    """
    blocks = [draw_codes(ch, (size, n), block_generator(seed, b))
              for b, size in enumerate(split_blocks(shots))]
    return np.concatenate(blocks, axis=0) if blocks else np.zeros((0, n), dtype=np.int8)


def sample_error_config(ch, n, rng):
    """
    采样一条轨迹的误差构型

    Args:
        ch: ChannelSpec
        n: 链长
        rng: numpy Generator 或整数种子

    Returns:
        ErrorConfig: 每个格点独立取 I/X/Y/Z
    """
    if ch.is_zero:
        return ErrorConfig((), n)
    return ErrorConfig.from_codes(draw_codes(ch, n, as_generator(rng)))


def apply_error_config(cfg, state):
    """
    作用一个 Kraus 分支对应的 Pauli 积

    Args:
        cfg: ErrorConfig
        state: StateVector

    Returns:
        StateVector: 作用后的态（范数不变）
    """
    if cfg.n != state.n:
        raise InvalidInputError(f"误差构型链长 {cfg.n} 与态矢量 {state.n} 不一致")
    if not cfg.events:
        return state.copy()
    return state.apply_pauli(cfg.to_pauli())


def anticommuting_probability(ch, letter):
    """与给定字母反对易的误差概率"""
    return sum(p for l, p in zip(LETTERS, (ch.pX, ch.pY, ch.pZ)) if l != letter)


def channel_factor(ch, pauli):
    """
    Pauli 信道下 <P> 的衰减因子 ∏(1 - 2 q_site)，对任意乘积 Pauli 信道精确

    Args:
        ch: ChannelSpec
        pauli: PauliString

    Returns:
        float: 衰减因子
    """
    factor = 1.0
    for _, letter in pauli.letters:
        factor *= 1.0 - 2.0 * anticommuting_probability(ch, letter)
    return factor


def sop_attenuation(ch, spec):
    """
    纯 X 或纯 Z 信道下弦序参量的解析衰减

    Args:
        ch: ChannelSpec
        spec: SopSpec

    Returns:
        float: 纯 X 时 ZXZ 为 (1-2pX)^2，纯 Z 时为 (1-2pZ)^((L-1)/2)
    """
    if not (ch.is_pure_x or ch.is_pure_z):
        raise UnsupportedChannelError(
            f"混合信道 {ch.to_text()} 没有解析衰减公式，请使用 estimate_sop 做蒙特卡罗估计")
    return channel_factor(ch, sop_pauli(spec))


def noisy_sop_expectation(state, spec, ch):
    """
    任意态在 Pauli 信道后的弦序参量期望

    Args:
        state: StateVector
        spec: SopSpec
        ch: ChannelSpec

    Returns:
        float: <S>_noisy = <S> · 衰减因子
    """
    pauli = sop_pauli(spec)
    if pauli.max_site() > state.n:
        raise InvalidInputError(f"弦序参量 {pauli} 超出链长 {state.n}")
    return float(state.expectation(pauli).real) * channel_factor(ch, pauli)


def cluster_expectation(kind, pauli, n):
    """
    簇态上 Pauli 串的期望：经解纠缠线路共轭后若只含 X 则为其符号，否则为 0

    Args:
        kind: 簇态类型
        pauli: PauliString
        n: 链长

    Returns:
        int: -1、0 或 1
    """
    image = conjugate_pauli(disentangler(kind, n), pauli)
    if any(letter != 'X' for _, letter in image.letters):
        return 0
    return image.sign


def estimate_sop(ch, spec, n, shots, seed):
    """
    蒙特卡罗估计含噪簇态上的弦序参量

    每条轨迹的取值为 <S>_clean · (-1)^(与 S 反对易的误差个数)

    Args:
        ch: ChannelSpec
        spec: SopSpec，簇态类型取 spec.kind
        n: 链长
        shots: 采样次数
        seed: 运行种子

    Returns:
        tuple: (均值, 标准误差)
    """
    pauli = sop_pauli(spec)
    if pauli.max_site() > n:
        raise InvalidInputError(f"弦序参量 {pauli} 超出链长 {n}")
    clean = cluster_expectation(spec.kind, pauli, n)
    sites = np.array(pauli.sites) - 1
    letters = np.array([CODE[l] for _, l in pauli.letters], dtype=np.int8)
    anti = []
    for b, size in enumerate(split_blocks(shots)):
        codes = draw_codes(ch, (size, n), block_generator(seed, b))[:, sites]
        anti.append(((codes != 0) & (codes != letters[None, :])).sum(axis=1))
    anti = np.concatenate(anti)
    values = clean * (1.0 - 2.0 * (anti % 2))
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(shots)) if shots > 1 else float('nan')
    logger.debug(f"SOP 估计 {spec.kind.value}({spec.j},{spec.k}) 信道 {ch.to_text()}: {mean:.4f} ± {stderr:.4f}")
    return mean, stderr

