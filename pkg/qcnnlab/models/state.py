"""
qcnnlab 态矢量模型
计算基下的稠密振幅，格点 1 对应最高位
"""

import numpy as np
import psutil

from qcnnlab.config import config
from qcnnlab.errors import InvalidInputError

NORM_TOL = 1e-10


def check_capacity(n, copies=4):
    """
    检查 2^N 维复向量是否放得下

    Args:
        n: 量子比特数
        copies: 同时存在的向量个数估计

    Returns:
        int: 向量维数 2^N
    """
    limit = int(config.get('max_statevector_qubits', 20))
    if n > limit:
        raise InvalidInputError(f"态矢量最多支持 {limit} 个量子比特，当前 N={n}")
    need = copies * 16 * (1 << n)
    available = psutil.virtual_memory().available
    if need > available:
        raise InvalidInputError(f"内存不足: 需要约 {need / 2**20:.0f} MiB，可用 {available / 2**20:.0f} MiB")
    return 1 << n


def site_bits(n, indices=None):
    """
    每个格点在计算基指标中的取值

    Args:
        n: 链长
        indices: 基矢指标数组，默认 0..2^N-1

    Returns:
        numpy.ndarray: 形状 (N, len) 的 uint8 数组，第 s-1 行为格点 s 的比特
    """
    if indices is None:
        indices = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[:, None]
    return ((indices[None, :] >> shifts) & 1).astype(np.uint8)


def parity_signs(indices, zmask):
    """(-1)^popcount(indices & zmask)，逐位累加奇偶"""
    parity = np.zeros(indices.shape, dtype=np.int64)
    mask = int(zmask)
    pos = 0
    while mask:
        if mask & 1:
            parity ^= (indices >> pos) & 1
        mask >>= 1
        pos += 1
    return 1.0 - 2.0 * parity


class StateVector:
    """归一化的 N 比特纯态"""

    def __init__(self, amplitudes, check=True):
        """
        初始化态矢量

        Args:
            amplitudes: 长度为 2^N 的复振幅
            check: 是否检查归一化
        """
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        dim = amplitudes.size
        n = dim.bit_length() - 1
        if amplitudes.ndim != 1 or dim != 1 << n or n < 1:
            raise InvalidInputError(f"振幅长度 {dim} 不是 2 的幂")
        if n > int(config.get('max_statevector_qubits', 20)):
            raise InvalidInputError(f"态矢量比特数 {n} 超过上限")
        if check and abs(np.linalg.norm(amplitudes) - 1.0) > NORM_TOL:
            raise InvalidInputError(f"态矢量未归一化: |v| = {np.linalg.norm(amplitudes)}")
        self.amplitudes = amplitudes
        self.n = n

    @classmethod
    def normalized(cls, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        return cls(amplitudes / np.linalg.norm(amplitudes))

    @classmethod
    def plus_state(cls, n):
        """|+>^N"""
        dim = check_capacity(n)
        return cls(np.full(dim, dim ** -0.5, dtype=np.complex128))

    @classmethod
    def product_x(cls, bits):
        """X 基乘积态，比特 1 对应 |->"""
        n = len(bits)
        dim = check_capacity(n)
        index = int(''.join(str(int(b)) for b in bits), 2)
        signs = parity_signs(np.arange(dim, dtype=np.int64), index)
        return cls(signs.astype(np.complex128) * dim ** -0.5)

    @classmethod
    def random(cls, n, rng):
        dim = check_capacity(n)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls.normalized(v)

    @property
    def dim(self):
        return self.amplitudes.size

    def copy(self):
        return StateVector(self.amplitudes.copy(), check=False)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def apply_pauli(self, pauli):
        """
        作用一个 Pauli 串

        Args:
            pauli: PauliString

        Returns:
            StateVector: P|v>
        """
        xmask, zmask, n_y = pauli.masks(self.n)
        idx = np.arange(self.dim, dtype=np.int64) ^ xmask
        factor = 1j ** ((pauli.phase + n_y) % 4)
        out = factor * parity_signs(idx, zmask) * self.amplitudes[idx]
        return StateVector(out, check=False)

    def expectation(self, pauli):
        """<v|P|v>（复数）"""
        return complex(np.vdot(self.amplitudes, self.apply_pauli(pauli).amplitudes))
