"""
qcnnlab 基态模块
不构造矩阵的稀疏哈密顿量作用、全重正交 Lanczos 基态求解、期望值，
以及沿参数轴的基态能量曲率扫描（相边界候选）
"""

from dataclasses import dataclass, field

import numpy as np
import psutil
from scipy import sparse
from scipy.linalg import eigh_tridiagonal

from qcnnlab.config import config
from qcnnlab.errors import InvalidInputError, ConvergenceError
from qcnnlab.models.hamiltonian import HamiltonianParams, AXES
from qcnnlab.models.pauli import PauliString
from qcnnlab.models.state import StateVector, check_capacity, site_bits
from qcnnlab.utils.logging_utils import logger

PIN_STRENGTH = 1e-6
_CACHE_DIM = 1 << 16


class SparseHamiltonian:
    """按翻转掩码分组的哈密顿量作用器: (Hv)[b] = Σ_m d_m(b) · v[b ^ m]"""

    def __init__(self, params, pin_edge=False):
        """
        初始化作用器

        Args:
            params: HamiltonianParams
            pin_edge: 是否在格点 1 加 -ε Z_1 钉扎场
        """
        self.params = params
        self.n = params.N
        self.dim = check_capacity(self.n)
        self.indices = np.arange(self.dim, dtype=np.int64)
        self.bits = site_bits(self.n, self.indices)
        groups = {}
        terms = list(params.terms())
        if pin_edge:
            strength = PIN_STRENGTH * max(params.max_coupling, 1.0)
            terms.append((-strength, PauliString.single(1, 'Z')))
        for coeff, pauli in terms:
            xmask, zmask, _ = pauli.masks(self.n)
            zsites = tuple(s for s, l in pauli.letters if l == 'Z')
            groups.setdefault(xmask, []).append((coeff, zsites))
        self.groups = groups
        self._diagonals = {} if self.dim <= _CACHE_DIM else None

    def _diagonal(self, xmask):
        if self._diagonals is not None and xmask in self._diagonals:
            return self._diagonals[xmask]
        acc = np.zeros(self.dim)
        for coeff, zsites in self.groups[xmask]:
            if not zsites:
                acc += coeff
                continue
            parity = np.zeros(self.dim, dtype=np.uint8)
            for s in zsites:
                parity ^= self.bits[s - 1]
            acc += coeff * (1.0 - 2.0 * parity)
        if self._diagonals is not None:
            self._diagonals[xmask] = acc
        return acc

    def matvec(self, v):
        """H·v，v 为长度 2^N 的数组"""
        out = np.zeros_like(v)
        for xmask in self.groups:
            d = self._diagonal(xmask)
            if xmask:
                out += d * v[self.indices ^ xmask]
            else:
                out += d * v
        return out

    def to_sparse(self):
        """稀疏矩阵形式（用于稠密对角化校验）"""
        rows, cols, data = [], [], []
        for xmask in self.groups:
            rows.append(self.indices)
            cols.append(self.indices ^ xmask)
            data.append(self._diagonal(xmask))
        return sparse.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                 shape=(self.dim, self.dim))


def apply_hamiltonian(params, v):
    """
    哈密顿量作用到态矢量

    Args:
        params: HamiltonianParams
        v: StateVector

    Returns:
        StateVector: H·v（未归一化）
    """
    if v.n != params.N:
        raise InvalidInputError(f"态矢量比特数 {v.n} 与链长 {params.N} 不一致")
    return StateVector(SparseHamiltonian(params).matvec(v.amplitudes), check=False)


@dataclass
class GroundStateResult:
    """基态求解结果"""
    energy: float
    state: StateVector
    residual: float
    gap_estimate: float
    degenerate_flag: bool
    params: HamiltonianParams = None
    iterations: int = 0
    history: list = field(default_factory=list)

    def metadata(self):
        return {
            'J1': self.params.J1, 'J2': self.params.J2, 'h1': self.params.h1, 'h2': self.params.h2,
            'N': self.params.N, 'energy': repr(self.energy), 'residual': repr(self.residual),
            'gap_estimate': repr(self.gap_estimate), 'degenerate': str(self.degenerate_flag).lower()
        }


def _krylov_limit(dim, krylov):
    """按可用内存限制 Krylov 基的个数"""
    fit = int(psutil.virtual_memory().available // (4 * 8 * dim))
    if fit < krylov:
        logger.warning(f"可用内存只够 {fit} 个 Krylov 向量，低于请求的 {krylov}")
    return max(8, min(krylov, fit))


def lanczos(matvec, v0, krylov, tol, deflate=None):
    """
    全重正交 Lanczos 单轮迭代

    Args:
        matvec: 作用函数
        v0: 初始向量
        krylov: Krylov 维数上限
        tol: 残差收敛阈值
        deflate: 需要保持正交的已知向量（列表），用于估计第一激发能

    Returns:
        tuple: (Ritz 值数组, 最低 Ritz 向量, 每步最低 Ritz 值列表, 迭代步数)
    """
    def project(w):
        if deflate:
            for u in deflate:
                w = w - u * np.vdot(u, w)
        return w

    v = project(v0)
    v = v / np.linalg.norm(v)
    basis = np.empty((krylov, v.size), dtype=v.dtype)
    alphas, betas, history = [], [], []
    for k in range(krylov):
        basis[k] = v
        w = project(matvec(v))
        alphas.append(float(np.vdot(v, w).real))
        # 两遍经典 Gram-Schmidt
        for _ in range(2):
            w = w - basis[:k + 1].T @ (basis[:k + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        theta, s = eigh_tridiagonal(np.array(alphas), np.array(betas), select='i', select_range=(0, 0))
        history.append(float(theta[0]))
        if beta < 1e-13 or abs(beta * s[-1, 0]) < 0.1 * tol:
            break
        betas.append(beta)
        v = w / beta
    steps = len(alphas)
    theta, s = eigh_tridiagonal(np.array(alphas), np.array(betas[:steps - 1]))
    ritz = basis[:steps].T @ s[:, 0]
    return theta, ritz / np.linalg.norm(ritz), history, steps


def ground_state(params, tol=None, pin_edge=False, seed=None, krylov=None, restarts=None):
    """
    Lanczos 求解基态

    Args:
        params: HamiltonianParams
        tol: 残差阈值，默认取配置 lanczos_tol
        pin_edge: 是否显式加入边界钉扎场
        seed: 初始随机向量的种子
        krylov: Krylov 维数，默认取配置
        restarts: 重启次数，默认取配置

    Returns:
        GroundStateResult: 基态结果
    """
    tol = float(tol if tol is not None else config.get('lanczos_tol'))
    if not 0 < tol <= 1e-6:
        raise InvalidInputError(f"收敛阈值必须在 (0, 1e-6] 内: {tol}")
    h = SparseHamiltonian(params, pin_edge=pin_edge)
    krylov = _krylov_limit(h.dim, int(krylov or config.get('lanczos_krylov')))
    krylov = min(krylov, h.dim)
    restarts = int(config.get('lanczos_restarts') if restarts is None else restarts)
    rng = np.random.default_rng(config.get('default_seed') if seed is None else seed)
    vec = rng.normal(size=h.dim)

    history = []
    iterations = 0
    residual = np.inf
    energy = None
    for attempt in range(restarts + 1):
        theta, vec, steps_history, steps = lanczos(h.matvec, vec, krylov, tol)
        history.extend(steps_history)
        iterations += steps
        hv = h.matvec(vec)
        energy = float(np.vdot(vec, hv).real)
        residual = float(np.linalg.norm(hv - energy * vec))
        logger.debug(f"Lanczos 第 {attempt + 1} 轮: {steps} 步, E0={energy:.12f}, 残差={residual:.2e}")
        if residual < tol:
            break
    if residual >= tol:
        logger.error(f"Lanczos 未收敛: {params}, 残差 {residual:.2e} >= {tol:.0e}")
        raise ConvergenceError(f"Lanczos 在 {iterations} 步后未收敛 (残差 {residual:.2e})",
                               residual=residual, iterations=iterations)

    # 在基态正交补空间中估计第一激发能
    if h.dim > 1:
        excited, _, _, _ = lanczos(h.matvec, rng.normal(size=h.dim), min(krylov, h.dim - 1), tol, deflate=[vec])
        gap = max(0.0, float(excited[0]) - energy)
    else:
        gap = np.inf
    degenerate = gap < 100 * tol
    if degenerate:
        logger.warning(f"基态近简并: {params}, 能隙估计 {gap:.2e}")
    logger.info(f"基态求解完成: {params}, E0={energy:.10f}, 残差={residual:.1e}, 能隙≈{gap:.3e}")
    return GroundStateResult(energy, StateVector.normalized(vec.astype(np.complex128)), residual, gap,
                             degenerate, params, iterations, history)


def expectation(p, state):
    """
    Pauli 串期望值

    Args:
        p: 厄米 PauliString（相位 ±1）
        state: StateVector

    Returns:
        float: <state|p|state>
    """
    if not p.is_hermitian:
        raise InvalidInputError(f"非厄米 Pauli 串没有实期望值: {p}")
    if p.max_site() > state.n:
        raise InvalidInputError(f"{p} 超出链长 {state.n}")
    value = state.expectation(p)
    if abs(value.imag) > 1e-10:
        raise InvalidInputError(f"期望值虚部过大: {value}")
    return float(value.real)


@dataclass
class CurvatureScan:
    """能量曲率扫描结果，rows 每行为 (λ, E0, d²E0/dλ²)，两端曲率为 NaN"""
    axis: str
    rows: np.ndarray
    peaks: list

    @property
    def grid(self):
        return self.rows[:, 0]

    @property
    def energies(self):
        return self.rows[:, 1]

    @property
    def curvature(self):
        return self.rows[:, 2]


def curvature_peaks(grid, curvature):
    """
    曲率绝对值的局部极大，按 |d²E| 从大到小排列

    Args:
        grid: 网格
        curvature: 与网格等长的曲率，两端为 NaN

    Returns:
        list: 峰所在的网格值
    """
    magnitude = np.nan_to_num(np.abs(np.asarray(curvature, dtype=float)), nan=-np.inf)
    interior = [i for i in range(1, magnitude.size - 1)
                if magnitude[i] > 1e-9 and magnitude[i] >= magnitude[i - 1] and magnitude[i] >= magnitude[i + 1]]
    interior.sort(key=lambda i: -magnitude[i])
    return [float(grid[i]) for i in interior]


def curvature_scan(base, axis, grid, tol=None):
    """
    沿参数轴扫描基态能量的二阶导数

    Args:
        base: HamiltonianParams，除扫描轴外的参数
        axis: 'J1'、'J2'、'h1' 或 'h2'
        grid: 均匀网格（至少 5 个点）
        tol: 求解阈值

    Returns:
        CurvatureScan: 扫描结果与峰位置（按 |d²E| 从大到小）
    """
    if axis not in AXES:
        raise InvalidInputError(f"未知的扫描轴: {axis}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 5:
        raise InvalidInputError("曲率扫描至少需要 5 个网格点")
    steps = np.diff(grid)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
        raise InvalidInputError("曲率扫描要求严格递增的均匀网格")
    h = steps[0]
    energies = np.array([ground_state(base.with_axis(axis, value), tol).energy for value in grid])
    curvature = np.full(grid.size, np.nan)
    curvature[1:-1] = (energies[2:] - 2 * energies[1:-1] + energies[:-2]) / h ** 2
    peaks = curvature_peaks(grid, curvature)
    logger.info(f"曲率扫描 {axis}: {grid.size} 点, 峰位置 {peaks[:3]}")
    return CurvatureScan(axis, np.column_stack([grid, energies, curvature]), peaks)
