"""
qcnnlab 阈值模块
综合征密度的解析递推、不动点阈值，以及基于快速综合征采样的蒙特卡罗阈值估计
"""

from dataclasses import dataclass

import numpy as np

from qcnnlab.config import config
from qcnnlab.core.decoder import bulk_positions, decode_layers, flip_matrices, layer_density
from qcnnlab.core.noise import draw_codes
from qcnnlab.errors import InvalidInputError, InconclusiveThresholdError
from qcnnlab.models.architecture import Architecture, LayerKind
from qcnnlab.models.channel import ChannelSpec
from qcnnlab.models.pauli import ClusterKind
from qcnnlab.utils.rng_utils import block_generator, split_blocks
from qcnnlab.utils.logging_utils import logger

# 各相蒙特卡罗阈值的默认二分区间
MC_BRACKETS = {
    ClusterKind.ZXZ: (0.01, 0.2),
    ClusterKind.ZXXXZ: (0.002, 0.1),
}


def _check_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(~np.isfinite(p)):
        raise InvalidInputError(f"概率必须在 [0, 1] 内: {p}")
    return p


def f_x(p):
    """X 纠错层的密度映射 p^3 + p(1-p)^2(3 - 2p + 4p^2)"""
    p = _check_probability(p)
    out = p ** 3 + p * (1 - p) ** 2 * (3 - 2 * p + 4 * p ** 2)
    return float(out) if out.ndim == 0 else out


def f_z(p):
    """多数表决层的密度映射 p^2(3 - 2p)"""
    p = _check_probability(p)
    out = p ** 2 * (3 - 2 * p)
    return float(out) if out.ndim == 0 else out


def pair_map(p):
    """一对 (X, Z) 层的复合映射"""
    return f_z(f_x(p))


def analytic_threshold(lo=1e-6, hi=0.5 - 1e-6, tol=1e-6):
    """
    二分求 f_z∘f_x 的非平凡不动点

    Args:
        lo: 区间下端（需在阈值以下）
        hi: 区间上端（需在阈值以上）
        tol: 绝对精度

    Returns:
        float: 阈值概率
    """
    if not 0 < lo < hi < 0.5:
        raise InvalidInputError(f"二分区间必须位于 (0, 0.5) 内: ({lo}, {hi})")
    if pair_map(lo) - lo >= 0 or pair_map(hi) - hi <= 0:
        raise InvalidInputError(f"区间 ({lo}, {hi}) 没有包住非平凡不动点")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pair_map(mid) < mid:
            lo = mid
        else:
            hi = mid
    threshold = 0.5 * (lo + hi)
    logger.info(f"解析阈值 p_th = {threshold:.6f}")
    return threshold


_DENSITY_MAPS = {
    LayerKind.XCORR: f_x,
    LayerKind.CCORR: f_x,
    LayerKind.ZCORR: f_z,
}


@dataclass
class DensityTrajectory:
    """无关联近似下逐层的综合征密度，values[f-1] 为第 f 层之后的密度"""
    p0: float
    layers: tuple
    values: np.ndarray

    def at(self, f):
        return self.p0 if f == 0 else float(self.values[f - 1])


def density_trajectory(p0, arch, depth=None):
    """
    按结构顺序迭代密度映射

    Args:
        p0: 初始翻转概率
        arch: Architecture 或层类型序列
        depth: 层数，默认取结构深度

    Returns:
        DensityTrajectory: 密度轨迹
    """
    _check_probability(p0)
    layers = tuple(arch.layers if isinstance(arch, Architecture) else (LayerKind.parse(l) for l in arch))
    depth = len(layers) if depth is None else depth
    if depth > len(layers):
        raise InvalidInputError(f"深度 {depth} 超过结构层数 {len(layers)}")
    values = []
    p = float(p0)
    for layer in layers[:depth]:
        p = _DENSITY_MAPS[layer](p)
        values.append(p)
    return DensityTrajectory(float(p0), layers[:depth], np.array(values))


def bernstein_profile(table):
    """
    各汉明重量下映射为 1 的输入个数 N_w

    Args:
        table: DecoderTable

    Returns:
        numpy.ndarray: 长度 w+1 的整数数组
    """
    x = np.arange(len(table.bits))
    weights = np.array([bin(int(v)).count('1') for v in x])
    return np.bincount(weights[table.array == 1], minlength=table.width + 1)


def bernstein_polynomial(profile, p):
    """独立输入下的输出密度 Σ N_w p^w (1-p)^(W-w)"""
    profile = np.asarray(profile)
    width = profile.size - 1
    w = np.arange(width + 1)
    p = np.asarray(p, dtype=float)[..., None]
    out = (profile * p ** w * (1 - p) ** (width - w)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass
class ProbeResult:
    """单个 pZ 探测的判定"""
    pz: float
    below: bool
    mean: float
    stderr: float
    shots: int


def pair_trend(kind, pz, n, shots, seed, arch=None):
    """
    纯 Z 噪声簇态上第 4 层与第 2 层综合征密度之差

    两层的密度都只在译码窗口完全位于链内的位置上平均

    Args:
        kind: 簇态类型
        pz: Z 误差概率
        n: 链长
        shots: 采样次数
        seed: 运行种子
        arch: 结构，默认交替 X/Z 纠错的 4 层结构

    Returns:
        tuple: (均值, 标准误差)
    """
    kind = ClusterKind.parse(kind)
    arch = arch or Architecture.build(kind, 'alt-xz', 4, n)
    if arch.depth < 4:
        raise InvalidInputError("阈值统计量需要至少 4 层")
    arch = arch.truncated(4)
    bulk = {f: bulk_positions(arch, f) for f in (2, 4)}
    ch = ChannelSpec(0.0, 0.0, pz)
    flips = flip_matrices(kind, n)
    total = 0.0
    total_sq = 0.0
    count = 0
    for b, size in enumerate(split_blocks(shots)):
        syndromes = flips.syndromes(draw_codes(ch, (size, n), block_generator(seed, b)))
        layers = decode_layers(syndromes, arch)
        diff = (layer_density(layers[4], arch, 4, size, bulk[4])
                - layer_density(layers[2], arch, 2, size, bulk[2]))
        total += diff.sum()
        total_sq += (diff ** 2).sum()
        count += size
    mean = total / count
    var = max(0.0, total_sq / count - mean ** 2) * count / max(1, count - 1)
    return mean, float(np.sqrt(var / count))


def classify_probe(kind, pz, n, shots, seed, arch=None, sigma=None, max_shots=None):
    """
    判定 pZ 是否低于阈值（密度在两层之后显著下降），不确定时按 4 倍加采样

    Args:
        kind: 簇态类型
        pz: Z 误差概率
        n: 链长
        shots: 初始采样次数
        seed: 运行种子
        arch: 结构
        sigma: 单侧检验的标准差倍数，默认取配置 mc_sigma
        max_shots: 采样上限，默认取配置 mc_max_shots

    Returns:
        ProbeResult | None: 判定结果，达到上限仍不显著时返回 None
    """
    if pz == 0:
        return ProbeResult(0.0, True, 0.0, 0.0, 0)
    sigma = float(sigma or config.get('mc_sigma', 3.0))
    max_shots = int(max_shots or config.get('mc_max_shots'))
    shots = int(shots)
    while True:
        mean, stderr = pair_trend(kind, pz, n, shots, seed, arch)
        logger.debug(f"探测 pZ={pz:.5f}: Δ={mean:.3e} ± {stderr:.1e} ({shots} 次采样)")
        if mean + sigma * stderr < 0:
            return ProbeResult(pz, True, mean, stderr, shots)
        if mean - sigma * stderr > 0:
            return ProbeResult(pz, False, mean, stderr, shots)
        if shots * 4 > max_shots:
            return None
        shots *= 4


def mc_threshold(kind, n=None, shots=None, seed=None, tol=0.005, bracket=None, arch=None):
    """
    对 pZ 二分蒙特卡罗阈值

    Args:
        kind: 簇态类型
        n: 链长，默认取配置 default_n
        shots: 每个探测点的初始采样次数
        seed: 运行种子
        tol: 区间宽度精度
        bracket: 初始区间，默认按相取 MC_BRACKETS
        arch: 结构，默认交替 X/Z 纠错的 4 层结构

    Returns:
        float: 阈值估计
    """
    kind = ClusterKind.parse(kind)
    n = int(n or config.get('default_n'))
    shots = int(shots or config.get('default_shots'))
    seed = config.get('default_seed') if seed is None else seed
    lo, hi = bracket or MC_BRACKETS[kind]
    for end, expect_below in ((lo, True), (hi, False)):
        probe = classify_probe(kind, end, n, shots, seed, arch)
        if probe is None or probe.below != expect_below:
            raise InvalidInputError(f"区间 ({lo}, {hi}) 没有包住 {kind.value} 的阈值")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        probe = classify_probe(kind, mid, n, shots, seed, arch)
        if probe is None:
            logger.error(f"阈值探测不确定: pZ={mid:.5f}, 区间 [{lo:.5f}, {hi:.5f}]")
            raise InconclusiveThresholdError(
                f"pZ={mid:.5f} 在采样上限内无法判定，阈值位于 [{lo:.5f}, {hi:.5f}]",
                lower=lo, upper=hi, probe=mid)
        logger.info(f"探测 pZ={mid:.5f}: {'低于' if probe.below else '高于'}阈值")
        if probe.below:
            lo = mid
        else:
            hi = mid
    threshold = 0.5 * (lo + hi)
    logger.info(f"{kind.value} 蒙特卡罗阈值 ≈ {threshold:.4f} (N={n})")
    return threshold
