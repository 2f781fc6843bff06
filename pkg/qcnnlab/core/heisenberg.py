"""
qcnnlab 海森堡绘景模块
把最终的 X 测量逐层反向传播为输入态上的多尺度弦序参量

纠错幺正在 X 基上只做置换，因此层间可观测量都对 X 基对角，
用字符展开 Σ c_S Π_{s∈S} X_s 表示（布尔函数的 Walsh 展开）
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from qcnnlab.config import config
from qcnnlab.core.circuits import (
    conjugate_pauli, disentangler, qec_unitary, walsh_hadamard, window_unitary, GateList
)
from qcnnlab.core.decoder import architecture_tables, derive_table
from qcnnlab.errors import InvalidInputError, TermOverflowError
from qcnnlab.models.architecture import Architecture, LayerKind, Target, layer_sequence
from qcnnlab.models.pauli import ClusterKind, PauliString, pauli_product
from qcnnlab.utils.logging_utils import logger

_LIGHT_CONE = 6


class XDiagonalOperator:
    """X 基对角算符：{格点集合: 系数}，系数为 Fraction（精确）或 float（截断）"""

    def __init__(self, terms=None, n=None):
        """
        初始化算符

        Args:
            terms: {frozenset: 系数}
            n: 链长（None 表示无限链）
        """
        self.n = n
        self.terms = {}
        for support, coeff in (terms or {}).items():
            support = frozenset(int(s) for s in support)
            if n is not None and any(not 1 <= s <= n for s in support):
                raise InvalidInputError(f"支撑 {sorted(support)} 超出 [1, {n}]")
            if coeff != 0:
                self.terms[support] = coeff

    @classmethod
    def constant(cls, value, n=None):
        return cls({frozenset(): value}, n)

    @classmethod
    def literal(cls, sites, coeff=Fraction(1), n=None):
        """单个字符 coeff · Π X_s"""
        return cls({frozenset(sites): coeff}, n)

    @property
    def is_exact(self):
        return all(isinstance(c, (int, Fraction)) for c in self.terms.values())

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return isinstance(other, XDiagonalOperator) and self.terms == other.terms

    def __add__(self, other):
        terms = dict(self.terms)
        for support, coeff in other.terms.items():
            terms[support] = terms.get(support, 0) + coeff
        return XDiagonalOperator(terms, self.n if self.n is not None else other.n)

    def __mul__(self, other):
        if not isinstance(other, XDiagonalOperator):
            return XDiagonalOperator({s: c * other for s, c in self.terms.items()}, self.n)
        terms = {}
        for sa, ca in self.terms.items():
            for sb, cb in other.terms.items():
                support = sa ^ sb
                terms[support] = terms.get(support, 0) + ca * cb
        return XDiagonalOperator(terms, self.n if self.n is not None else other.n)

    def parseval(self):
        """系数平方和；±1 取值的算符恰为 1"""
        return sum(c * c for c in self.terms.values())

    def l1_norm(self):
        return sum(abs(c) for c in self.terms.values())

    def max_site(self):
        return max((max(s) for s in self.terms if s), default=0)

    def evaluate(self, bits):
        """
        在 X 基比特串上求值，X_s = (-1)^{x_s}

        Args:
            bits: (shots, N) 比特数组，第 s-1 列为格点 s

        Returns:
            numpy.ndarray: 每个比特串上的取值
        """
        bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
        signs = 1 - 2 * bits
        out = np.zeros(bits.shape[0])
        for support, coeff in self.terms.items():
            value = np.ones(bits.shape[0])
            for s in support:
                value = value * signs[:, s - 1]
            out += float(coeff) * value
        return out

    def truncated(self, epsilon=0.0, max_terms=None):
        """丢弃 |系数| < epsilon 的项并最多保留 max_terms 项（转为浮点）"""
        items = [(s, float(c)) for s, c in self.terms.items() if abs(c) >= epsilon]
        if max_terms is not None and len(items) > max_terms:
            items.sort(key=lambda item: -abs(item[1]))
            items = items[:max_terms]
        return XDiagonalOperator(dict(items), self.n)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: (len(item[0]), sorted(item[0])))

    def to_text(self):
        """每行一项: 系数 TAB 格点列表"""
        lines = []
        for support, coeff in self.sorted_terms():
            lines.append(f"{coeff}\t{','.join(str(s) for s in sorted(support))}")
        return '\n'.join(lines) + ('\n' if lines else '')

    def __repr__(self):
        return f"XDiagonalOperator({len(self.terms)} terms)"


def _string_sites(a, b, s):
    """Pauli 串 G_ab: 格点 a, a+2s, ..., b"""
    return frozenset(range(a, b + 1, 2 * s))


def layer_expansion(table, f, p, n=None):
    """
    单个保留比特 (-1)^{g(x)_p} 在窗口上的 Walsh 展开

    Args:
        table: DecoderTable
        f: 层序号
        p: 输出位置
        n: 链长；链外格点按 x = 0 处理（对应字符取 1）

    Returns:
        XDiagonalOperator: 精确的二进分数系数
    """
    w = table.width
    if w > int(config.get('max_window_bits', 16)):
        raise InvalidInputError(f"窗口比特数 {w} 超过上限")
    s = 3 ** (f - 1)
    sites = [p + o * s for o in table.offsets]
    spectrum = walsh_hadamard(1 - 2 * table.array.astype(np.int64))
    terms = {}
    for k in np.flatnonzero(spectrum):
        support = frozenset(site for i, site in enumerate(sites)
                            if (k >> (w - 1 - i)) & 1 and (n is None or 1 <= site <= n))
        terms[support] = terms.get(support, 0) + Fraction(int(spectrum[k]), 1 << w)
    return XDiagonalOperator(terms, n)


@dataclass
class Truncation:
    """截断策略；两个字段都为空时表示精确模式"""
    epsilon: float = 0.0
    max_terms: int = None

    @property
    def active(self):
        return self.epsilon > 0 or self.max_terms is not None


def backprop(arch, position=None, levels=None, truncation=None, allow_deep=False, term_cap=None):
    """
    把输出位置上的 X 测量反向传播过纠错层

    Args:
        arch: Architecture
        position: 输出位置，默认中心 c
        levels: 传播的层数，默认全部 d 层
        truncation: Truncation，None 为精确模式
        allow_deep: 精确模式下是否允许超过 2 层
        term_cap: 项数上限，默认取配置 backprop_term_cap

    Returns:
        XDiagonalOperator: 解纠缠线路之前（测量比特上）的对角形式
    """
    n = arch.n
    position = arch.center if position is None else position
    if position not in arch.output_positions():
        raise InvalidInputError(f"位置 {position} 不是输出比特")
    levels = arch.depth if levels is None else levels
    if not 0 <= levels <= arch.depth:
        raise InvalidInputError(f"层数必须在 [0, {arch.depth}] 内: {levels}")
    exact = truncation is None or not truncation.active
    if exact and levels > 2 and not allow_deep:
        raise InvalidInputError("精确反向传播超过 2 层需要显式 allow_deep=True")
    cap = int(term_cap or config.get('backprop_term_cap'))
    tables = architecture_tables(arch)
    op = XDiagonalOperator.literal([position], n=n)
    for step, f in enumerate(range(arch.depth, arch.depth - levels, -1), start=1):
        table = tables[f - 1]
        expansions = {}
        acc = {}
        for support, coeff in op.terms.items():
            term = XDiagonalOperator.constant(coeff, n)
            for site in sorted(support):
                if site not in expansions:
                    expansions[site] = layer_expansion(table, f, site, n)
                term = term * expansions[site]
            for key, value in term.terms.items():
                acc[key] = acc.get(key, 0) + value
            if len(acc) > cap:
                logger.error(f"反向传播项数超过上限 {cap}，已完成 {step - 1} 层")
                raise TermOverflowError(f"第 {f} 层展开后项数超过 {cap}", depth_reached=step - 1)
        op = XDiagonalOperator(acc, n)
        if not exact:
            op = op.truncated(truncation.epsilon, truncation.max_terms)
        logger.debug(f"反向传播过第 {f} 层 ({table.layer.value}): {len(op)} 项")
    logger.info(f"反向传播完成: {levels} 层, {len(op)} 项, 精确={op.is_exact}")
    return op


# 解纠缠线路共轭

@lru_cache(maxsize=None)
def _site_image(kind, j, n):
    """V† X_j V，V 为解纠缠线路"""
    local = disentangler(kind, n, window=(j - _LIGHT_CONE, j + _LIGHT_CONE))
    return conjugate_pauli(local, PauliString.single(j, 'X'), inverse=True)


def _as_operator(op, n):
    if isinstance(op, PauliString):
        if any(letter != 'X' for _, letter in op.letters) or not op.is_hermitian:
            raise InvalidInputError(f"只能共轭纯 X 串: {op}")
        return XDiagonalOperator.literal(op.sites, Fraction(op.sign), n)
    return op


def conjugate_operator(op, kind, n):
    """
    X 基对角算符经解纠缠线路共轭到输入态上

    Args:
        op: XDiagonalOperator 或纯 X 的 PauliString
        kind: 簇态类型
        n: 链长

    Returns:
        list: [(系数, 相位为 +1 的 PauliString)]
    """
    kind = ClusterKind.parse(kind)
    op = _as_operator(op, n)
    if op.max_site() > n:
        raise InvalidInputError(f"算符支撑超出链长 {n}")
    result = []
    for support, coeff in op.sorted_terms():
        image = pauli_product(_site_image(kind, j, n) for j in sorted(support))
        result.append((coeff * image.sign, image.unsigned()))
    return result


def conjugate_by_cz_chain(op, n):
    """CZ 链（ZXZ 解纠缠线路）共轭: X_j -> Z_{j-1} X_j Z_{j+1}"""
    return conjugate_operator(op, ClusterKind.ZXZ, n)


def operator_expectation(terms, state):
    """Σ c <P> 在态矢量上的取值"""
    return float(sum(float(c) * state.expectation(p).real for c, p in terms))


def sop_factorization(support):
    """
    把 X 支撑拆成间距为 2 的最大连续段，每段 {a, a+2, ..., b} 共轭后为 S_{(a-1)(b+1)}

    Args:
        support: 格点集合

    Returns:
        list: [(j, k)] 弦序参量端点，可能越出 [1, N]（边界处被截断）
    """
    runs = []
    for site in sorted(support):
        for run in runs:
            if run[-1] + 2 == site:
                run.append(site)
                break
        else:
            runs.append([site])
    return sorted((run[0] - 1, run[-1] + 1) for run in runs)


def sop_text(op):
    """共轭后的 SOP 因子形式，每行: 系数 TAB S(j,k) S(j,k) ..."""
    lines = []
    for support, coeff in op.sorted_terms():
        factors = ' '.join(f"S({j},{k})" for j, k in sop_factorization(support)) or 'I'
        lines.append(f"{coeff}\t{factors}")
    return '\n'.join(lines) + ('\n' if lines else '')


# 递推关系

def gx_recursion(j, k, s):
    """
    Pauli 串 G_jk（间距 6s）反向穿过 X 纠错层的 16 项展开（未合并）

    Args:
        j: 左端点
        k: 右端点
        s: 3^(f-1)

    Returns:
        list: [(系数, ((a, b), ...))]，每个 (a, b) 为下一层间距 2s 的 Pauli 串
    """
    if (k - j) % (6 * s) or k < j:
        raise InvalidInputError(f"G 串端点不合法: j={j}, k={k}, s={s}")
    quarter = Fraction(1, 4)
    shifts = (0, 2 * s, 4 * s)
    gamma = 4 * s
    left, right = (j - gamma, j - gamma), (k + gamma, k + gamma)
    products = [(quarter, ((j - a, k + b),)) for a in shifts for b in shifts]
    products += [(-quarter, ((j - a, k), right)) for a in shifts]
    products += [(-quarter, (left, (j, k + a))) for a in shifts]
    products.append((quarter, (left, (j, k), right)))
    return products


def gz_recursion(j, k, s):
    """
    Pauli 串 G_jk 反向穿过多数表决层的展开（未合并）:
    2^{-l} Π_δ [X_{δ-ε} + X_δ + X_{δ+ε} - X_{δ-ε} X_δ X_{δ+ε}]，ε = 7s

    Returns:
        list: [(系数, ((a, a), ...))]
    """
    if (k - j) % (6 * s) or k < j:
        raise InvalidInputError(f"G 串端点不合法: j={j}, k={k}, s={s}")
    eps = 7 * s
    products = [(Fraction(1), ())]
    for delta in range(j, k + 1, 6 * s):
        factor = [(Fraction(1, 2), ((delta - eps, delta - eps),)),
                  (Fraction(1, 2), ((delta, delta),)),
                  (Fraction(1, 2), ((delta + eps, delta + eps),)),
                  (Fraction(-1, 2), ((delta - eps, delta - eps), (delta, delta), (delta + eps, delta + eps)))]
        products = [(c1 * c2, p1 + p2) for c1, p1 in products for c2, p2 in factor]
    return products


def recursion_operator(products, s, n=None):
    """把递推给出的 Pauli 串乘积合并为 XDiagonalOperator"""
    op = XDiagonalOperator(n=n)
    for coeff, strings in products:
        support = frozenset()
        for a, b in strings:
            support ^= _string_sites(a, b, s)
        if n is not None:
            support = frozenset(x for x in support if 1 <= x <= n)
        op = op + XDiagonalOperator({support: coeff}, n)
    return op


def _literal_polynomial(products, s):
    """展开中每个乘积所含 X 个数的生成函数系数"""
    counts = {}
    for _, strings in products:
        size = sum((b - a) // (2 * s) + 1 for a, b in strings)
        counts[size] = counts.get(size, 0) + 1
    return counts


_GENERATING = {
    LayerKind.XCORR: _literal_polynomial(gx_recursion(0, 0, 1), 1),
    LayerKind.ZCORR: _literal_polynomial(gz_recursion(0, 0, 1), 1),
}


def _reach(arch, levels):
    """反向传播 levels 层后支撑离输出位置的最大距离"""
    reach = 0
    for f in range(arch.depth, arch.depth - levels, -1):
        table = derive_table(arch.disentangler, arch.layers[f - 1], f)
        reach += max(abs(o) for o in table.offsets) * 3 ** (f - 1)
    return reach


def count_terms(d, levels_back, merged=False):
    """
    X 测量反向传播 levels_back 层（交替 X/Z 纠错结构）后 Pauli 串乘积的个数

    Args:
        d: 深度
        levels_back: 反向传播的层数
        merged: 是否合并同类项

    Returns:
        int: 项数
    """
    if not 0 <= levels_back <= d:
        raise InvalidInputError(f"层数必须在 [0, {d}] 内: {levels_back}")
    layers = layer_sequence('alt-xz', d)
    if not merged:
        value = 1
        for f in range(d - levels_back + 1, d + 1):
            value = sum(c * value ** power for power, c in _GENERATING[layers[f - 1]].items())
        return value
    if levels_back > 3:
        raise InvalidInputError("合并计数只支持最多 3 层")
    # 链长取 3^d 的奇数倍并包住整个光锥，使边界不截断任何项
    probe = Architecture(Target.ZXZ, ClusterKind.ZXZ, layers, 3 ** d)
    reach = _reach(probe, levels_back)
    m = 1
    while 3 ** d * m < 2 * reach + 1:
        m += 2
    arch = Architecture(Target.ZXZ, ClusterKind.ZXZ, layers, 3 ** d * m)
    return len(backprop(arch, levels=levels_back, allow_deep=True))


# 追踪的乘积族

@dataclass
class TrackedLayer:
    """第 f 层的乘积 H_jk = L_j G_jk G_{(j+3^f)(k-3^f)} R_k，位置相对中心 c"""
    f: int
    l: int
    j: int
    k: int
    left: tuple = ()
    right: tuple = ()


@dataclass
class TrackedFamily:
    """深度 d 的追踪乘积族"""
    d: int
    layers: list = field(default_factory=list)

    @property
    def L(self):
        """输入态上的 SOP 长度 2 l_0 + 1"""
        return 2 * self.layer(0).l + 1

    def layer(self, f):
        for record in self.layers:
            if record.f == f:
                return record
        raise InvalidInputError(f"层 {f} 不在追踪范围内")

    @property
    def lengths(self):
        """从 f = d-2 到 f = 0 的 l_f 序列"""
        return tuple(record.l for record in self.layers)


def closed_form_length(d, f):
    """l_f 的闭式: 奇数 f 为 (3^{d-f}-1)/8，偶数 f 为 (3^{d-f}+13)/8"""
    if f % 2:
        return (3 ** (d - f) - 1) // 8
    return (3 ** (d - f) + 13) // 8


def closed_form_attachments(d, f):
    """
    L/R 附加串的闭式偏移（相对 j 与 k）

    Returns:
        tuple: (左偏移, 右偏移)，均为排序元组
    """
    left = []
    if f % 2:
        for g in range((d - 4 - f) // 2 + 1):
            kappa = (23 * 9 ** g + 1) // 8 * 3 ** f
            left += [-kappa - 3 * 3 ** (f + 2 * g), -kappa]
    else:
        for g in range((d - 5 - f) // 2 + 1):
            lam = (69 * 9 ** g - 13) // 8 * 3 ** f
            left += [-lam - 9 * 3 ** (f + 2 * g), -lam]
    return tuple(sorted(left)), tuple(sorted(-o for o in left))


def tracked_family(d):
    """
    按层递推追踪乘积的长度与附加串

    Args:
        d: 奇数深度 (>= 3)

    Returns:
        TrackedFamily: 从 f = d-2 到 0 的记录
    """
    if d < 3 or d % 2 == 0:
        raise InvalidInputError(f"追踪乘积族要求奇数深度 d >= 3，当前 d={d}")
    family = TrackedFamily(d)
    l = 1
    left = ()
    for f in range(d - 2, -1, -1):
        if f < d - 2:
            # 由第 f+1 层递推到第 f 层
            if (f + 1) % 2:
                l = 3 * l + 2
            else:
                l = 3 * l - 5
            if f % 2:
                left = tuple(sorted([o - 5 * 3 ** f for o in left] + [-6 * 3 ** f, -3 * 3 ** f]))
            else:
                left = tuple(sorted(o + 2 * 3 ** f for o in left))
        right = tuple(sorted(-o for o in left))
        family.layers.append(TrackedLayer(f, l, -l * 3 ** f, l * 3 ** f, left, right))
    logger.debug(f"追踪乘积族 d={d}: l 序列 {family.lengths}, L={family.L}")
    return family


def tracked_product_structure(l=1, center=None):
    """
    间距 9 的单点 X 乘积穿过第一层 X 纠错后的展开，以及 Π A_ζ X_ζ B_ζ 因子形式

    Args:
        l: ζ 取 c-9l, ..., c+9l 共 2l+1 个点
        center: 中心格点（只影响绝对位置）

    Returns:
        tuple: (逐点展开的乘积, 因子形式)，两者应完全相同
    """
    if l < 0:
        raise InvalidInputError(f"l 必须非负: {l}")
    center = 9 * l + 10 if center is None else center
    table = derive_table(ClusterKind.ZXZ, LayerKind.XCORR)
    half = Fraction(1, 2)
    expansion = XDiagonalOperator.constant(Fraction(1))
    factored = XDiagonalOperator.constant(Fraction(1))
    for zeta in range(center - 9 * l, center + 9 * l + 1, 9):
        expansion = expansion * layer_expansion(table, 1, zeta)
        a = XDiagonalOperator({frozenset(): half, frozenset([zeta - 2]): half,
                               frozenset([zeta - 4]): -half, frozenset([zeta - 4, zeta - 2]): half})
        b = XDiagonalOperator({frozenset(): half, frozenset([zeta + 2]): half,
                               frozenset([zeta + 4]): -half, frozenset([zeta + 2, zeta + 4]): half})
        factored = factored * a * XDiagonalOperator.literal([zeta]) * b
    return expansion, factored


def complexity_bounds(d):
    """
    多尺度 SOP 的项数与测量基个数下界（精确大整数）

    Args:
        d: 深度 (>= 3)

    Returns:
        dict: product_bound = 2^{3^{d-2}}，basis_bound_formula = 3^{3^{d-4}}（d >= 4），
              basis_bound_l2 = 3^{2 l_2}，l_2 = floor((3^{d-2}+13)/8)
    """
    if d < 3:
        raise InvalidInputError(f"复杂度下界要求 d >= 3，当前 d={d}")
    l2 = (3 ** (d - 2) + 13) // 8
    return {
        'product_bound': 2 ** (3 ** (d - 2)),
        'basis_bound_formula': 3 ** (3 ** (d - 4)) if d >= 4 else None,
        'basis_bound_l2': 3 ** (2 * l2),
        'l2': l2,
    }


def _compatible(group, pauli):
    for site, letter in pauli.letters:
        own = group.get(site)
        if own is not None and own != letter:
            return False
    return True


def greedy_basis_cover(terms):
    """
    按格点字母一致性贪心分组，返回所需张量积测量基个数的上界

    Args:
        terms: PauliString 列表（也接受 (系数, PauliString)）

    Returns:
        int: 分组数
    """
    groups = []
    for term in terms:
        pauli = term[1] if isinstance(term, tuple) else term
        for group in groups:
            if _compatible(group, pauli):
                group.update(pauli.letters)
                break
        else:
            groups.append(dict(pauli.letters))
    return len(groups)


# 稠密校验

def _layer_gates(which, f, sites):
    if which == 'identity':
        return GateList()
    layer = {'gx': LayerKind.XCORR, 'gz': LayerKind.ZCORR}.get(which)
    if layer is None:
        raise InvalidInputError(f"未知的递推: {which}")
    gates = GateList()
    for delta in sites:
        gates = gates + qec_unitary(ClusterKind.ZXZ, layer, f, delta)
    return gates


def verify_recursion(which, f=1, length=1):
    """
    用稠密矩阵把 G 串共轭过真实的纠错幺正，并与递推展开比较

    Args:
        which: 'gx'、'gz' 或 'identity'
        f: 层序号
        length: G 串的长度 l_f

    Returns:
        float: 系数的最大偏差（含非对角部分）
    """
    s = 3 ** (f - 1)
    base = 8 * s + 1
    j, k = base, base + 6 * s * (length - 1)
    string_sites = sorted(_string_sites(j, k, 3 * s))
    gates = _layer_gates(which, f, string_sites)
    if which == 'gx':
        predicted = recursion_operator(gx_recursion(j, k, s), s)
    elif which == 'gz':
        predicted = recursion_operator(gz_recursion(j, k, s), s)
    else:
        predicted = XDiagonalOperator.literal(string_sites)
    cone = sorted(set(gates.light_cone()) | set(string_sites))
    window = list(range(cone[0] - 1, cone[-1] + 2))
    if len(window) > 11:
        window = cone
    w = len(window)
    dim = 1 << w
    position = {site: i for i, site in enumerate(window)}

    # 列为 U|x>_X，X 串只翻转计算基下标
    u = window_unitary(gates, window)
    cols = walsh_hadamard(u, axis=1) * dim ** -0.5
    xmask = sum(1 << (w - 1 - position[site]) for site in string_sites)
    rows = np.arange(dim) ^ xmask
    m = cols.conj().T @ cols[rows]
    diagonal = np.real(np.diag(m))
    off = float(np.max(np.abs(m - np.diag(np.diag(m))))) if dim > 1 else 0.0
    coefficients = walsh_hadamard(diagonal) / dim
    expected = np.zeros(dim)
    for support, coeff in predicted.terms.items():
        if any(site not in position for site in support):
            raise InvalidInputError(f"递推支撑 {sorted(support)} 不在窗口内")
        k_index = sum(1 << (w - 1 - position[site]) for site in support)
        expected[k_index] += float(coeff)
    deviation = max(off, float(np.max(np.abs(coefficients - expected))))
    logger.info(f"递推校验 {which} f={f} 长度 {length}: 窗口 {w} 比特, 最大偏差 {deviation:.2e}")
    return deviation
