"""
qcnnlab 线路模块
解纠缠线路与量子纠错线路的门级构造、态矢量作用、X 基采样，
Clifford 门下的 Pauli 传播，以及从线路提取 X 基置换（经典译码表的来源）

门的控制端下标 x/y 表示在 X/Y 本征基中取 -1 本征态时触发
"""

from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import product

import numpy as np

from qcnnlab.config import config
from qcnnlab.errors import InvalidInputError, CircuitConditionError
from qcnnlab.models.architecture import LayerKind, SUPPORTED_LAYERS
from qcnnlab.models.pauli import ClusterKind, PauliString
from qcnnlab.models.state import StateVector, check_capacity
from qcnnlab.utils.logging_utils import logger

_I2 = np.eye(2, dtype=np.complex128)
_PAULI = {
    'I': _I2,
    'X': np.array([[0, 1], [1, 0]], dtype=np.complex128),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    'Z': np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def _controlled(control_bases, target):
    """I - P ⊗ (I - U)，P 为控制端 -1 本征态投影之积"""
    proj = reduce(np.kron, [(_I2 - _PAULI[b]) / 2 for b in control_bases])
    return np.eye(2 * proj.shape[0], dtype=np.complex128) - np.kron(proj, _I2 - target)


GATE_MATRICES = {
    'CZ': _controlled('Z', _PAULI['Z']),
    'CyY': _controlled('Y', _PAULI['Y']),
    'Z': _PAULI['Z'],
    'H': _H,
    'SWAP': np.eye(4, dtype=np.complex128)[[0, 2, 1, 3]],
    'CxZ': _controlled('X', _PAULI['Z']),
    'CxCxZ': _controlled('XX', _PAULI['Z']),
    'CxCxNOT': _controlled('XX', _PAULI['X']),
    'CxY': _controlled('X', _PAULI['Y']),
    'CxCxY': _controlled('XX', _PAULI['Y']),
}
GATE_ARITY = {name: int(np.log2(m.shape[0])) for name, m in GATE_MATRICES.items()}


@dataclass(frozen=True)
class Gate:
    """单个门，sites 顺序为 (控制端..., 目标端)"""
    name: str
    sites: tuple

    def __post_init__(self):
        if self.name not in GATE_MATRICES:
            raise InvalidInputError(f"未知的门: {self.name}")
        sites = tuple(int(s) for s in self.sites)
        if len(sites) != GATE_ARITY[self.name]:
            raise InvalidInputError(f"{self.name} 需要 {GATE_ARITY[self.name]} 个作用位: {sites}")
        if len(set(sites)) != len(sites):
            raise InvalidInputError(f"{self.name} 的控制端与目标端必须不同: {sites}")
        object.__setattr__(self, 'sites', sites)

    def __str__(self):
        return ' '.join([self.name] + [str(s) for s in self.sites])


class GateList:
    """有序门序列，先作用的门在前"""

    def __init__(self, gates=()):
        self.gates = tuple(gates)

    @classmethod
    def from_text(cls, text):
        """
        解析逐行文本格式，如 "CZ 1 2"

        Args:
            text: 文本

        Returns:
            GateList: 门序列
        """
        gates = []
        for line in text.splitlines():
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            name, *operands = line.split()
            try:
                gates.append(Gate(name, tuple(int(o) for o in operands)))
            except ValueError:
                raise InvalidInputError(f"无法解析门: {line}")
        return cls(gates)

    def to_text(self):
        return ''.join(f"{g}\n" for g in self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __len__(self):
        return len(self.gates)

    def __getitem__(self, item):
        return self.gates[item]

    def __add__(self, other):
        return GateList(self.gates + tuple(other))

    def __eq__(self, other):
        return isinstance(other, GateList) and self.gates == other.gates

    def __hash__(self):
        return hash(self.gates)

    def __repr__(self):
        return f"GateList({len(self.gates)} gates)"

    def reversed(self):
        """逆序；这里所有门都是自逆的，因此即为逆线路"""
        return GateList(self.gates[::-1])

    def light_cone(self):
        """全部作用位（排序）"""
        return sorted({s for g in self.gates for s in g.sites})

    def max_site(self):
        return max((max(g.sites) for g in self.gates), default=0)

    def restricted(self, n):
        """丢弃作用位超出 [1, N] 的门（开边界截断）"""
        return GateList(g for g in self.gates if min(g.sites) >= 1 and max(g.sites) <= n)


# 解纠缠线路

def disentangler(kind, n, window=None):
    """
    解纠缠线路 U_N†（ZXZ）或 Ũ_N†（ZXXXZ）

    Args:
        kind: 簇态类型
        n: 链长
        window: 可选的 (lo, hi)，只保留作用位全部落在 [lo, hi] 内的门

    Returns:
        GateList: 作用在簇态上得到 |+>^N 的线路
    """
    kind = ClusterKind.parse(kind)
    if n < 3:
        raise InvalidInputError(f"解纠缠线路要求 N >= 3，当前 N={n}")
    lo, hi = (1, n) if window is None else (max(1, window[0]), min(n, window[1]))
    gates = [Gate('CZ', (j, j + 1)) for j in range(lo, hi)]
    if kind is ClusterKind.ZXXXZ:
        gates += [Gate('CyY', (j, j + 1)) for j in range(lo, hi)]
        gates += [Gate('Z', (j,)) for j in range(lo, hi + 1)]
    return GateList(gates)


def cluster_state(kind, n):
    """簇态 = 解纠缠线路之逆作用在 |+>^N 上"""
    return apply_gates(disentangler(kind, n).reversed(), StateVector.plus_state(n))


# 纠错线路

def qec_unitary(phase, layer, f, window_center):
    """
    经纠缠线路变换后的纠错幺正（作用在 X 基测量之间）

    Args:
        phase: 解纠缠线路类型
        layer: 纠错层类型
        f: 层序号，偏移量按 s = 3^(f-1) 缩放
        window_center: 保留比特位置 p

    Returns:
        GateList: 该输出位置的纠错门
    """
    phase = ClusterKind.parse(phase)
    layer = LayerKind.parse(layer)
    if f < 1:
        raise InvalidInputError(f"层序号必须 >= 1: {f}")
    if (phase, layer) not in SUPPORTED_LAYERS:
        raise InvalidInputError(f"{phase.value} 没有 {layer.value} 纠错层")
    s = 3 ** (f - 1)
    p = int(window_center)
    if layer is LayerKind.ZCORR:
        # 多数表决 M(x_{p-7s}, x_p, x_{p+7s})
        return GateList([
            Gate('CxZ', (p, p - 7 * s)),
            Gate('CxZ', (p, p + 7 * s)),
            Gate('CxCxZ', (p - 7 * s, p + 7 * s, p)),
        ])
    if phase is ClusterKind.ZXZ:
        return GateList([
            Gate('CxZ', (p - 2 * s, p)),
            Gate('CxCxZ', (p - 4 * s, p - 2 * s, p)),
            Gate('CxZ', (p + 2 * s, p)),
            Gate('CxCxZ', (p + 2 * s, p + 4 * s, p)),
            Gate('CxCxNOT', (p - 2 * s, p + 2 * s, p)),
        ])
    a = 4 if layer is LayerKind.XCORR else 2
    return GateList([
        Gate('CxY', (p - a * s, p)),
        Gate('CxCxY', (p - 2 * a * s, p - a * s, p)),
        Gate('CxY', (p + a * s, p)),
        Gate('CxCxY', (p + a * s, p + 2 * a * s, p)),
    ])


def layer_gates(phase, layer, f, n, center=None):
    """
    整条链上一个池化层的纠错门（每个保留位置一组，截断越界门）

    Args:
        phase: 解纠缠线路类型
        layer: 纠错层类型
        f: 层序号
        n: 链长
        center: 中心格点，默认 (N+1)/2

    Returns:
        GateList: 门序列
    """
    center = (n + 1) // 2 if center is None else center
    step = 3 ** f
    gates = []
    for p in range((center - 1) % step + 1, n + 1, step):
        gates.extend(qec_unitary(phase, layer, f, p).restricted(n))
    return GateList(gates)


# 态矢量作用

def _apply_matrix(tensor, matrix, axes):
    """在张量指定轴上作用 k 比特矩阵"""
    k = len(axes)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_gates(g, state):
    """
    把门序列作用到态矢量上

    Args:
        g: GateList
        state: StateVector

    Returns:
        StateVector: 新态
    """
    n = state.n
    if g.max_site() > n or any(min(gate.sites) < 1 for gate in g):
        raise InvalidInputError(f"门的作用位超出 [1, {n}]")
    tensor = state.amplitudes.reshape((2,) * n)
    for gate in g:
        tensor = _apply_matrix(tensor, GATE_MATRICES[gate.name], [s - 1 for s in gate.sites])
    return StateVector(np.ascontiguousarray(tensor).reshape(-1), check=False)


def walsh_hadamard(values, axis=-1):
    """
    未归一化的快速 Walsh-Hadamard 变换

    Args:
        values: 数组，变换轴长度为 2 的幂
        axis: 变换轴

    Returns:
        numpy.ndarray: 变换结果
    """
    a = np.moveaxis(np.array(values, copy=True), axis, -1)
    size = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < size:
        a = a.reshape(lead + (size // (2 * h), 2, h))
        x, y = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = x + y
        a[..., 1, :] = x - y
        h *= 2
    return np.moveaxis(a.reshape(lead + (size,)), -1, axis)


def x_basis_amplitudes(state):
    """X 基振幅 <x|_X ψ>，比特 1 表示 X = -1"""
    return walsh_hadamard(state.amplitudes) * 2.0 ** (-state.n / 2)


def x_basis_probabilities(state):
    """X 基测量分布 P_x"""
    p = np.abs(x_basis_amplitudes(state)) ** 2
    return p / p.sum()


def index_to_bits(indices, n):
    """基矢指标转为 (样本数, N) 的 uint8 比特数组，第 s-1 列为格点 s"""
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def bits_to_index(bits):
    """(样本数, N) 比特数组转为基矢指标"""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    weights = np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def sample_x_basis(state, shots, rng):
    """
    在 X 基下测量全部比特

    Args:
        state: StateVector
        shots: 采样次数
        rng: numpy Generator

    Returns:
        numpy.ndarray: (shots, N) 的 uint8 比特数组
    """
    if shots < 1:
        raise InvalidInputError(f"采样次数必须 >= 1: {shots}")
    probs = x_basis_probabilities(state)
    outcomes = rng.choice(probs.size, size=int(shots), p=probs)
    return index_to_bits(outcomes, state.n)


# Clifford 门下的 Pauli 传播

@lru_cache(maxsize=None)
def _conjugation_table(name):
    """
    门 G 的局部共轭表 G P G†，非 Pauli 像记为 None

    Args:
        name: 门名

    Returns:
        dict: 局部字母元组 -> (i 的指数, 字母元组) 或 None
    """
    gate = GATE_MATRICES[name]
    k = GATE_ARITY[name]
    dim = 2 ** k
    candidates = {}
    for letters in product('IXYZ', repeat=k):
        candidates[letters] = reduce(np.kron, [_PAULI[l] for l in letters])
    table = {}
    for letters, pauli in candidates.items():
        image = gate @ pauli @ gate.conj().T
        table[letters] = None
        for other, q in candidates.items():
            overlap = np.trace(q.conj().T @ image) / dim
            if abs(abs(overlap) - 1) < 1e-9:
                exponent = int(np.round(np.angle(overlap) / (np.pi / 2))) % 4
                table[letters] = (exponent, other)
                break
    return table


def conjugate_pauli(gates, pauli, inverse=False):
    """
    Pauli 串经门序列共轭

    Args:
        gates: GateList，线路为 V = g_n...g_1
        pauli: PauliString
        inverse: False 计算 V P V†，True 计算 V† P V

    Returns:
        PauliString: 共轭后的 Pauli 串
    """
    mapping = dict(pauli.letters)
    phase = pauli.phase
    sequence = reversed(gates.gates) if inverse else iter(gates.gates)
    for gate in sequence:
        local = tuple(mapping.get(s, 'I') for s in gate.sites)
        if all(l == 'I' for l in local):
            continue
        image = _conjugation_table(gate.name)[local]
        if image is None:
            raise InvalidInputError(f"{gate} 把 {''.join(local)} 映射为非 Pauli 算符")
        exponent, letters = image
        phase += exponent
        for site, letter in zip(gate.sites, letters):
            if letter == 'I':
                mapping.pop(site, None)
            else:
                mapping[site] = letter
    return PauliString.from_dict(mapping, phase)


def flipped_bits(pauli):
    """Pauli 串作用后在 X 基测量中翻转的比特（Z 或 Y 所在格点）"""
    return frozenset(s for s, l in pauli.letters if l in ('Z', 'Y'))


# 稠密窗口与置换提取

def window_unitary(gates, window):
    """
    门序列在窗口上的稠密矩阵

    Args:
        gates: GateList，作用位必须在窗口内
        window: 有序格点列表，window[0] 为最高位

    Returns:
        numpy.ndarray: 2^w x 2^w 矩阵
    """
    w = len(window)
    limit = int(config.get('max_window_bits', 16))
    if w > limit:
        raise InvalidInputError(f"稠密窗口最多 {limit} 个比特: {w}")
    # 2^w 列的稠密矩阵及一份工作副本
    check_capacity(w, copies=2 << w)
    position = {site: i for i, site in enumerate(window)}
    tensor = np.eye(2 ** w, dtype=np.complex128).reshape((2,) * w + (2 ** w,))
    for gate in gates:
        try:
            axes = [position[s] for s in gate.sites]
        except KeyError:
            raise InvalidInputError(f"{gate} 不在窗口 {window} 内")
        tensor = _apply_matrix(tensor, GATE_MATRICES[gate.name], axes)
    return tensor.reshape(2 ** w, 2 ** w)


def pauli_matrix(pauli, window):
    """Pauli 串在窗口上的稠密矩阵"""
    mapping = pauli.as_dict
    if set(mapping) - set(window):
        raise InvalidInputError(f"{pauli} 不在窗口 {window} 内")
    return (1j ** pauli.phase) * reduce(np.kron, [_PAULI[mapping.get(s, 'I')] for s in window])


@dataclass(frozen=True)
class PermutationAction:
    """X 基上的置换 table[x] 与相位 i^phases[x]，窗口比特按 window 顺序、首位为最高位"""
    width: int
    table: np.ndarray
    phases: np.ndarray

    @property
    def signs(self):
        """相位的复数形式"""
        return 1j ** self.phases

    def bit(self, x, i):
        """输入 x 的像在窗口第 i 位的取值"""
        return (int(self.table[x]) >> (self.width - 1 - i)) & 1


def extract_permutation(g, window):
    """
    逐个 X 基态作用门序列，验证像为单个 X 基态（相差相位）并返回置换

    Args:
        g: GateList
        window: 有序格点列表（不超过 16 个）

    Returns:
        PermutationAction: 置换与相位
    """
    w = len(window)
    if w > int(config.get('max_window_bits', 16)):
        raise InvalidInputError(f"窗口比特数 {w} 超过上限")
    position = {site: i for i, site in enumerate(window)}
    for gate in g:
        if any(s not in position for s in gate.sites):
            raise InvalidInputError(f"{gate} 不在窗口 {window} 内")
    dim = 2 ** w
    table = np.empty(dim, dtype=np.int64)
    phases = np.empty(dim, dtype=np.int64)
    chunk = max(1, min(dim, (1 << 22) // dim))
    for start in range(0, dim, chunk):
        xs = np.arange(start, min(dim, start + chunk))
        # 列 i 为 X 基态 |x_i>，即 Walsh 矩阵的对应列
        batch = np.zeros((dim, xs.size), dtype=np.complex128)
        batch[xs, np.arange(xs.size)] = 1.0
        batch = walsh_hadamard(batch, axis=0) * dim ** -0.5
        tensor = batch.reshape((2,) * w + (xs.size,))
        for gate in g:
            tensor = _apply_matrix(tensor, GATE_MATRICES[gate.name], [position[s] for s in gate.sites])
        image = walsh_hadamard(tensor.reshape(dim, xs.size), axis=0) * dim ** -0.5
        peak = np.argmax(np.abs(image), axis=0)
        values = image[peak, np.arange(xs.size)]
        residual = np.sqrt(np.maximum(0.0, (np.abs(image) ** 2).sum(axis=0) - np.abs(values) ** 2))
        if np.any(np.abs(np.abs(values) - 1) > 1e-10) or np.any(residual > 1e-10):
            bad = int(xs[np.argmax(residual + np.abs(np.abs(values) - 1))])
            raise CircuitConditionError(f"X 基态 {bad:0{w}b} 的像不是单个 X 基态，线路不满足置换条件")
        exponents = np.round(np.angle(values) / (np.pi / 2)).astype(np.int64) % 4
        if np.any(np.abs(values - 1j ** exponents) > 1e-10):
            raise CircuitConditionError("像的相位不是 i 的整数次幂")
        table[xs] = peak
        phases[xs] = exponents
    if not np.array_equal(np.sort(table), np.arange(dim)):
        raise CircuitConditionError("X 基上的映射不是双射")
    logger.debug(f"提取置换: {len(g)} 个门, 窗口 {window}")
    return PermutationAction(w, table, phases)
