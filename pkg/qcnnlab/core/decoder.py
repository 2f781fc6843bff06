"""
qcnnlab 译码模块
经典后处理：由纠错幺正提取真值表、按位打包的逐层译码、QCNN 输出估计，
以及簇态输入下的快速精确综合征采样

比特存储为 (N+1, W) 的 uint64 数组，第 s 行为格点 s，第 0 行恒为 0（链外补零），
每个 64 位字装 64 次采样
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from qcnnlab.config import config
from qcnnlab.core.circuits import (
    qec_unitary, extract_permutation, conjugate_pauli, disentangler, flipped_bits,
    walsh_hadamard, index_to_bits
)
from qcnnlab.core.noise import draw_codes
from qcnnlab.errors import InvalidInputError, CircuitConditionError
from qcnnlab.models.architecture import LayerKind
from qcnnlab.models.channel import LETTERS
from qcnnlab.models.pauli import ClusterKind, PauliString
from qcnnlab.models.state import parity_signs
from qcnnlab.utils.rng_utils import block_generator, split_blocks
from qcnnlab.utils.logging_utils import logger

# 提取真值表时使用的参考中心，保证窗口内格点均为正
_REFERENCE_CENTER = 9
_LIGHT_CONE = 6


def mobius_transform(bits):
    """
    GF(2) 上的 Möbius 变换：真值表 -> 代数范式系数

    Args:
        bits: 长度 2^w 的 0/1 数组

    Returns:
        numpy.ndarray: ANF 系数，下标为单项式掩码
    """
    a = np.array(bits, dtype=np.uint8)
    size = a.size
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a[:, 1, :] ^= a[:, 0, :]
        a = a.reshape(size)
        h *= 2
    return a


@dataclass(frozen=True)
class DecoderTable:
    """
    单层译码真值表

    offsets 以 s = 3^(f-1) 为单位，bits 的下标按 offsets 顺序编码、offsets[0] 为最高位
    """
    layer: LayerKind
    offsets: tuple
    bits: tuple

    def __post_init__(self):
        if len(self.bits) != 1 << len(self.offsets):
            raise InvalidInputError(f"真值表长度 {len(self.bits)} 与窗口大小 {len(self.offsets)} 不符")
        if self.bits[0] != 0:
            raise CircuitConditionError("真值表不满足全零输入映射为 0")

    @property
    def width(self):
        return len(self.offsets)

    @property
    def array(self):
        return np.array(self.bits, dtype=np.uint8)

    @property
    def monomials(self):
        """ANF 中系数为 1 的单项式，每个为窗口下标元组"""
        anf = mobius_transform(self.bits)
        w = self.width
        return tuple(tuple(i for i in range(w) if (mask >> (w - 1 - i)) & 1)
                     for mask in np.flatnonzero(anf) if mask)

    def lookup(self, window_bits):
        """按窗口比特（offsets 顺序）查表"""
        index = 0
        for b in window_bits:
            index = (index << 1) | int(b)
        return self.bits[index]

    def to_text(self):
        """审计文本：层类型、偏移与十六进制真值表（第 x 位为 bits[x]）"""
        value = sum(1 << x for x, b in enumerate(self.bits) if b)
        digits = max(1, len(self.bits) // 4)
        return (f"layer {self.layer.value}\n"
                f"offsets {' '.join(str(o) for o in self.offsets)}\n"
                f"bits {value:0{digits}x}\n")

    @classmethod
    def from_text(cls, text):
        fields = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.strip().partition(' ')
                fields[key] = value.strip()
        try:
            offsets = tuple(int(o) for o in fields['offsets'].split())
            value = int(fields['bits'], 16)
            layer = LayerKind.parse(fields['layer'])
        except (KeyError, ValueError) as e:
            raise InvalidInputError(f"无法解析真值表文本: {e}")
        return cls(layer, offsets, tuple((value >> x) & 1 for x in range(1 << len(offsets))))


@lru_cache(maxsize=None)
def _derive(phase, layer):
    gates = qec_unitary(phase, layer, 1, _REFERENCE_CENTER)
    window = gates.light_cone()
    action = extract_permutation(gates, window)
    i = window.index(_REFERENCE_CENTER)
    bits = (action.table >> (action.width - 1 - i)) & 1
    offsets = tuple(site - _REFERENCE_CENTER for site in window)
    logger.debug(f"提取真值表 {phase.value}/{layer.value}: 窗口 {offsets}, {int(bits.sum())} 个输入映射为 1")
    return DecoderTable(layer, offsets, tuple(int(b) for b in bits))


def derive_table(phase, layer, f=1):
    """
    从纠错幺正的 X 基置换中提取保留比特的真值表

    Args:
        phase: 解纠缠线路类型
        layer: 纠错层类型
        f: 层序号；表与 f 无关，偏移以 3^(f-1) 为单位

    Returns:
        DecoderTable: 译码表
    """
    if f < 1:
        raise InvalidInputError(f"层序号必须 >= 1: {f}")
    return _derive(ClusterKind.parse(phase), LayerKind.parse(layer))


def architecture_tables(arch):
    """结构中每一层的译码表"""
    return [derive_table(arch.disentangler, layer, f) for f, layer in enumerate(arch.layers, start=1)]


# 比特打包

def as_samples(x, n=None):
    """把单个或多个综合征串统一为 (shots, N) 的 uint8 数组"""
    x = np.asarray(x, dtype=np.uint8)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or (n is not None and x.shape[1] != n):
        raise InvalidInputError(f"综合征数组形状 {x.shape} 与链长 {n} 不符")
    if np.any(x > 1):
        raise InvalidInputError("综合征比特只能取 0 或 1")
    return x


def pack_bits(samples):
    """
    (shots, N) 比特数组 -> (N+1, W) 打包数组

    Args:
        samples: uint8 数组

    Returns:
        numpy.ndarray: uint64 打包数组，第 0 行为全零补位
    """
    shots, n = samples.shape
    words = max(1, -(-shots // 64))
    padded = np.zeros((n, words * 64), dtype=np.uint8)
    padded[:, :shots] = samples.T
    packed = np.packbits(padded, axis=1, bitorder='little').view('<u8')
    return np.vstack([np.zeros((1, words), dtype='<u8'), packed])


def unpack_bits(packed, shots, sites=None):
    """
    打包数组 -> (shots, len(sites)) 比特数组

    Args:
        packed: (N+1, W) 打包数组
        shots: 采样次数
        sites: 需要取出的格点（默认全部）

    Returns:
        numpy.ndarray: uint8 数组
    """
    rows = packed[1:] if sites is None else packed[np.asarray(sites, dtype=np.int64)]
    bits = np.unpackbits(np.ascontiguousarray(rows, dtype='<u8').view(np.uint8), axis=1, bitorder='little')
    return bits[:, :shots].T.copy()


def decode_layer(packed, table, f, center, n):
    """
    对打包比特执行第 f 层译码

    Args:
        packed: (N+1, W) 打包数组，位置 ≡ c (mod 3^(f-1)) 上为输入比特
        table: DecoderTable
        f: 层序号
        center: 中心格点 c
        n: 链长

    Returns:
        numpy.ndarray: 新的打包数组，只有位置 ≡ c (mod 3^f) 上有值
    """
    s = 3 ** (f - 1)
    step = 3 * s
    positions = np.arange((center - 1) % step + 1, n + 1, step)
    idx = positions[None, :] + np.array(table.offsets, dtype=np.int64)[:, None] * s
    idx = np.where((idx >= 1) & (idx <= n), idx, 0)
    rows = packed[idx]
    acc = np.zeros(rows.shape[1:], dtype=packed.dtype)
    for monomial in table.monomials:
        term = rows[monomial[0]].copy()
        for i in monomial[1:]:
            term &= rows[i]
        acc ^= term
    out = np.zeros_like(packed)
    out[positions] = acc
    return out


def decode_layers(x, arch):
    """
    逐层译码并保留全部中间层

    Args:
        x: (shots, N) 综合征数组或 (N+1, W) 打包数组
        arch: Architecture

    Returns:
        list: 第 f 项为第 f 层之后的打包数组（第 0 项为输入）
    """
    x = np.asarray(x)
    packed = x if x.dtype == np.uint64 else pack_bits(as_samples(x, arch.n))
    if packed.shape[0] != arch.n + 1:
        raise InvalidInputError(f"打包数组行数 {packed.shape[0]} 与链长 {arch.n} 不符")
    layers = [packed]
    for f, table in enumerate(architecture_tables(arch), start=1):
        layers.append(decode_layer(layers[-1], table, f, arch.center, arch.n))
    return layers


def decode(x, arch):
    """
    完整经典译码 G(x)

    Args:
        x: 单个长度 N 的比特串或 (shots, N) 数组
        arch: Architecture

    Returns:
        numpy.ndarray: 单个输入返回 (m,)，批量输入返回 (shots, m)
    """
    single = np.asarray(x).ndim == 1
    samples = as_samples(x, arch.n)
    final = decode_layers(samples, arch)[-1]
    out = unpack_bits(final, samples.shape[0], arch.output_positions())
    return out[0] if single else out


def output_values(samples, arch, positions=None):
    """每次采样的输出 mean_pos(1 - 2 G(x)_pos)，positions 可限定为部分输出位置"""
    outputs = decode(as_samples(samples, arch.n), arch)
    if positions is not None:
        index = {p: i for i, p in enumerate(arch.output_positions())}
        try:
            outputs = outputs[:, [index[p] for p in positions]]
        except KeyError as e:
            raise InvalidInputError(f"{e} 不是输出位置")
    return 1.0 - 2.0 * outputs.mean(axis=1)


def qcnn_output(samples, arch):
    """
    由测量比特串估计 QCNN 输出

    Args:
        samples: (shots, N) 综合征数组
        arch: Architecture

    Returns:
        tuple: (y, 标准误差)
    """
    samples = as_samples(samples, arch.n)
    if samples.shape[0] < 1:
        raise InvalidInputError("至少需要一个采样")
    values = output_values(samples, arch)
    shots = values.size
    stderr = float(values.std(ddof=1) / np.sqrt(shots)) if shots > 1 else float('nan')
    return float(values.mean()), stderr


def window_radii(arch):
    """各层译码窗口的最大偏移（以 3^(f-1) 为单位）"""
    return tuple(max(abs(o) for o in table.offsets) for table in architecture_tables(arch))


def bulk_positions(arch, f):
    """
    第 f 层之后不受链端补零影响的保留位置

    Args:
        arch: Architecture
        f: 层序号

    Returns:
        list: 位置列表（非空）
    """
    positions = arch.interior_positions(f, window_radii(arch))
    if not positions:
        raise InvalidInputError(f"N={arch.n} 太短，第 {f} 层没有窗口完全在链内的位置")
    return positions


def layer_density(packed, arch, f, shots, positions=None):
    """
    第 f 层之后每次采样中保留比特为 1 的比例

    Args:
        packed: 第 f 层之后的打包数组
        arch: Architecture
        f: 层序号
        shots: 采样次数
        positions: 只统计这些位置，默认为第 f 层的全部保留位置

    Returns:
        numpy.ndarray: 长度 shots 的密度
    """
    positions = arch.positions(f) if positions is None else positions
    return unpack_bits(packed, shots, positions).mean(axis=1)


# 综合征翻转集合与快速采样

def flip_set(kind, letter, j, n):
    """
    格点 j 上单个 Pauli 误差经解纠缠线路后翻转的测量比特

    Args:
        kind: 簇态类型
        letter: 'X'、'Y' 或 'Z'
        j: 格点
        n: 链长

    Returns:
        frozenset: 被翻转的格点
    """
    if not 1 <= j <= n:
        raise InvalidInputError(f"格点 {j} 超出 [1, {n}]")
    if letter not in LETTERS:
        raise InvalidInputError(f"未知的误差类型: {letter}")
    local = disentangler(kind, n, window=(j - _LIGHT_CONE, j + _LIGHT_CONE))
    return flipped_bits(conjugate_pauli(local, PauliString.single(j, letter)))


class FlipMatrices:
    """每种误差字母一个稀疏矩阵 F_L，F_L[j-1, k-1] = 1 表示 L_j 翻转比特 k"""

    def __init__(self, kind, n):
        self.kind = ClusterKind.parse(kind)
        self.n = n
        self.matrices = {}
        self.masks = {}
        for letter in LETTERS:
            rows, cols, masks = [], [], []
            for j in range(1, n + 1):
                flips = flip_set(self.kind, letter, j, n)
                rows.extend([j - 1] * len(flips))
                cols.extend(k - 1 for k in flips)
                masks.append(sum(1 << (n - k) for k in flips) if n <= 62 else None)
            self.matrices[letter] = sparse.csr_matrix(
                (np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(n, n))
            self.masks[letter] = masks
        logger.debug(f"构造翻转矩阵 {self.kind.value} N={n}")

    def syndromes(self, codes):
        """
        误差编码 -> 测量综合征

        Args:
            codes: (shots, N) 编码数组，0=I 1=X 2=Y 3=Z

        Returns:
            numpy.ndarray: (shots, N) uint8 综合征
        """
        total = np.zeros((self.n, codes.shape[0]), dtype=np.int32)
        for code, letter in enumerate(LETTERS, start=1):
            indicator = (codes == code).T.astype(np.int32)
            total += self.matrices[letter].T @ indicator
        return (total.T & 1).astype(np.uint8)


@lru_cache(maxsize=8)
def flip_matrices(kind, n):
    """缓存的 FlipMatrices"""
    return FlipMatrices(ClusterKind.parse(kind), n)


def sample_syndromes_cluster(kind, ch, n, shots, seed, block=None):
    """
    簇态输入的快速精确采样：误差构型的翻转集合按位异或

    Args:
        kind: 簇态类型
        ch: ChannelSpec
        n: 链长
        shots: 采样次数
        seed: 运行种子
        block: 可选块序号，给出时只生成该块

    Returns:
        numpy.ndarray: (shots, N) uint8 综合征
    """
    if shots < 1:
        raise InvalidInputError(f"采样次数必须 >= 1: {shots}")
    if ch.is_zero:
        return np.zeros((shots, n), dtype=np.uint8)
    flips = flip_matrices(ClusterKind.parse(kind), n)
    if block is not None:
        return flips.syndromes(draw_codes(ch, (shots, n), block_generator(seed, block)))
    parts = [flips.syndromes(draw_codes(ch, (size, n), block_generator(seed, b)))
             for b, size in enumerate(split_blocks(shots))]
    return np.concatenate(parts, axis=0)


def sample_noisy_x_basis(probabilities, kind, ch, shots, seed):
    """
    任意输入态的含噪测量采样：干净分布的采样异或误差综合征

    Args:
        probabilities: 解纠缠线路之后的 X 基分布（长度 2^N）
        kind: 解纠缠线路类型
        ch: ChannelSpec
        shots: 采样次数
        seed: 运行种子

    Returns:
        numpy.ndarray: (shots, N) uint8 比特
    """
    probabilities = np.asarray(probabilities, dtype=float)
    n = probabilities.size.bit_length() - 1
    flips = None if ch.is_zero else flip_matrices(ClusterKind.parse(kind), n)
    parts = []
    for b, size in enumerate(split_blocks(shots)):
        rng = block_generator(seed, b)
        clean = index_to_bits(rng.choice(probabilities.size, size=size, p=probabilities), n)
        if flips is not None:
            clean ^= flips.syndromes(draw_codes(ch, (size, n), rng))
        parts.append(clean)
    return np.concatenate(parts, axis=0)


def noisy_x_distribution(probabilities, kind, ch):
    """
    含噪测量分布的精确计算：干净分布与综合征分布的异或卷积（Walsh-Hadamard 变换）

    Args:
        probabilities: 干净 X 基分布（长度 2^N，N <= max_statevector_qubits）
        kind: 解纠缠线路类型
        ch: ChannelSpec

    Returns:
        numpy.ndarray: 含噪分布
    """
    probabilities = np.asarray(probabilities, dtype=float)
    dim = probabilities.size
    n = dim.bit_length() - 1
    if dim != 1 << n or n > int(config.get('max_statevector_qubits', 20)):
        raise InvalidInputError(f"分布长度 {dim} 不是允许范围内的 2 的幂")
    if ch.is_zero:
        return probabilities.copy()
    flips = flip_matrices(ClusterKind.parse(kind), n)
    k = np.arange(dim, dtype=np.int64)
    spectrum = np.ones(dim)
    for j in range(n):
        site = np.full(dim, ch.p_identity)
        for letter, p in zip(LETTERS, (ch.pX, ch.pY, ch.pZ)):
            if p:
                site += p * parity_signs(k, flips.masks[letter][j])
        spectrum *= site
    out = walsh_hadamard(walsh_hadamard(probabilities) * spectrum) / dim
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def exact_output(probabilities, arch, positions=None):
    """
    确定性 QCNN 输出 Σ_x P_x · mean_pos(1 - 2 G(x)_pos)

    Args:
        probabilities: 长度 2^N 的 X 基分布
        arch: Architecture
        positions: 只统计这些输出位置（默认全部）

    Returns:
        float: 期望输出
    """
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.size != 1 << arch.n:
        raise InvalidInputError(f"分布长度 {probabilities.size} 与链长 {arch.n} 不符")
    values = output_values(index_to_bits(np.arange(probabilities.size), arch.n), arch, positions)
    return float(probabilities @ values)
