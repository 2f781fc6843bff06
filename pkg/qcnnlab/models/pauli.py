"""
qcnnlab Pauli 代数模块
带相位的多格点 Pauli 串、稳定子、弦序参量以及对称生成元

约定：格点编号从 1 开始；相位以 i 的指数 (mod 4) 存储，不使用浮点数
"""

import re
from dataclasses import dataclass
from enum import Enum

from qcnnlab.errors import InvalidInputError


class ClusterKind(str, Enum):
    """簇态类型"""
    ZXZ = "ZXZ"
    ZXXXZ = "ZXXXZ"

    @classmethod
    def parse(cls, value):
        """
        解析簇态类型，大小写不敏感

        Args:
            value: 字符串或 ClusterKind

        Returns:
            ClusterKind: 簇态类型
        """
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidInputError(f"未知的簇态类型: {value}")


# 单比特乘法表: (a, b) -> (i 的指数, 乘积字母)
_PRODUCT = {
    ('X', 'Y'): (1, 'Z'), ('Y', 'Z'): (1, 'X'), ('Z', 'X'): (1, 'Y'),
    ('Y', 'X'): (3, 'Z'), ('Z', 'Y'): (3, 'X'), ('X', 'Z'): (3, 'Y'),
}

_PHASE_TEXT = {0: '+', 1: '+i', 2: '-', 3: '-i'}
_TEXT_PHASE = {v: k for k, v in _PHASE_TEXT.items()}
_TOKEN = re.compile(r'^([XYZ])(\d+)$')


@dataclass(frozen=True)
class PauliString:
    """带相位的稀疏 Pauli 串，letters 为按格点排序的 (格点, 字母) 元组"""
    phase: int = 0
    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'phase', self.phase % 4)
        for site, letter in self.letters:
            if letter not in ('X', 'Y', 'Z'):
                raise InvalidInputError(f"非法的 Pauli 字母: {letter}")
            if site < 1:
                raise InvalidInputError(f"格点编号必须从 1 开始: {site}")

    @classmethod
    def from_dict(cls, mapping, phase=0):
        """
        从 {格点: 字母} 字典构造，字母 'I' 被忽略

        Args:
            mapping: 格点到字母的映射
            phase: i 的指数

        Returns:
            PauliString: Pauli 串
        """
        return cls(phase, tuple(sorted((int(s), l) for s, l in mapping.items() if l != 'I')))

    @classmethod
    def single(cls, site, letter, phase=0):
        """单格点 Pauli 算符"""
        return cls.from_dict({site: letter}, phase)

    @classmethod
    def identity(cls):
        """恒等算符"""
        return cls()

    @classmethod
    def parse(cls, text):
        """
        解析形如 "+Z1 X2 Z3" 或 "-i Y4" 的文本

        Args:
            text: 文本表示

        Returns:
            PauliString: Pauli 串
        """
        tokens = text.split()
        if not tokens:
            raise InvalidInputError("空的 Pauli 串文本")
        head = tokens[0]
        phase_text = None
        for candidate in ('+i', '-i', '+', '-'):
            if head.startswith(candidate):
                phase_text = candidate
                break
        if phase_text is None:
            raise InvalidInputError(f"缺少相位前缀: {text}")
        tokens[0] = head[len(phase_text):]
        mapping = {}
        for token in tokens:
            if token in ('', 'I'):
                continue
            match = _TOKEN.match(token)
            if not match:
                raise InvalidInputError(f"无法解析 Pauli 项: {token}")
            site = int(match.group(2))
            if site in mapping:
                raise InvalidInputError(f"格点 {site} 重复出现")
            mapping[site] = match.group(1)
        return cls.from_dict(mapping, _TEXT_PHASE[phase_text])

    @property
    def as_dict(self):
        return dict(self.letters)

    @property
    def sites(self):
        return tuple(site for site, _ in self.letters)

    @property
    def weight(self):
        return len(self.letters)

    @property
    def is_hermitian(self):
        return self.phase % 2 == 0

    @property
    def sign(self):
        """厄米串的符号 ±1"""
        if not self.is_hermitian:
            raise InvalidInputError(f"非厄米 Pauli 串没有实符号: {self}")
        return 1 if self.phase == 0 else -1

    def letter(self, site):
        return self.as_dict.get(site, 'I')

    def max_site(self):
        return self.letters[-1][0] if self.letters else 0

    def unsigned(self):
        return PauliString(0, self.letters)

    def commutes(self, other):
        """
        判断两个 Pauli 串是否对易

        Args:
            other: 另一个 Pauli 串

        Returns:
            bool: 对易返回 True
        """
        mine = self.as_dict
        anti = 0
        for site, letter in other.letters:
            own = mine.get(site)
            if own is not None and own != letter:
                anti += 1
        return anti % 2 == 0

    def masks(self, n):
        """
        计算作用到态矢量所需的位掩码，格点 1 为最高位

        Args:
            n: 链长

        Returns:
            tuple: (x 掩码, z 掩码, Y 的个数)
        """
        xmask = zmask = 0
        n_y = 0
        for site, letter in self.letters:
            if site > n:
                raise InvalidInputError(f"格点 {site} 超出链长 {n}")
            bit = 1 << (n - site)
            if letter in ('X', 'Y'):
                xmask |= bit
            if letter in ('Z', 'Y'):
                zmask |= bit
            if letter == 'Y':
                n_y += 1
        return xmask, zmask, n_y

    def __mul__(self, other):
        return pauli_mul(self, other)

    def __str__(self):
        body = ' '.join(f"{letter}{site}" for site, letter in self.letters) or 'I'
        return f"{_PHASE_TEXT[self.phase]}{body}"


def pauli_mul(a, b):
    """
    Pauli 串乘法，相位精确跟踪

    Args:
        a: 左因子
        b: 右因子

    Returns:
        PauliString: 乘积 a·b
    """
    phase = a.phase + b.phase
    merged = dict(a.letters)
    for site, letter in b.letters:
        own = merged.get(site)
        if own is None:
            merged[site] = letter
        elif own == letter:
            del merged[site]
        else:
            exponent, product = _PRODUCT[(own, letter)]
            phase += exponent
            merged[site] = product
    return PauliString(phase, tuple(sorted(merged.items())))


def pauli_product(strings):
    """按顺序连乘一组 Pauli 串"""
    result = PauliString.identity()
    for s in strings:
        result = pauli_mul(result, s)
    return result


@dataclass(frozen=True)
class SopSpec:
    """弦序参量 S_jk (ZXZ) 或 T_jk (ZXXXZ) 的描述"""
    kind: ClusterKind
    j: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, 'kind', ClusterKind.parse(self.kind))
        span = self.k - self.j
        if self.j < 1 or span <= 0 or span % 2:
            raise InvalidInputError(f"弦序参量端点不合法: j={self.j}, k={self.k}")
        if self.kind is ClusterKind.ZXXXZ and span < 6:
            raise InvalidInputError(f"ZXXXZ 弦序参量要求 k-j >= 6，当前为 {span}")

    @property
    def length(self):
        return self.k - self.j + 1


def sop_pauli(spec):
    """
    弦序参量的 Pauli 串，相位为 +1

    Args:
        spec: SopSpec

    Returns:
        PauliString: S_jk 或 T_jk
    """
    j, k = spec.j, spec.k
    if spec.kind is ClusterKind.ZXZ:
        mapping = {j: 'Z', k: 'Z'}
        for site in range(j + 1, k, 2):
            mapping[site] = 'X'
        return PauliString.from_dict(mapping)
    mapping = {j: 'Z', j + 1: 'X', j + 2: 'Y', k - 2: 'Y', k - 1: 'X', k: 'Z'}
    for i in range(2, (k - j) // 2 - 1):
        mapping[j + 2 * i] = 'X'
    return PauliString.from_dict(mapping)


def stabilizer(kind, j, n):
    """
    簇态稳定子 C_j 或 D_j

    Args:
        kind: 簇态类型
        j: 中心格点
        n: 链长

    Returns:
        PauliString: 稳定子
    """
    kind = ClusterKind.parse(kind)
    if kind is ClusterKind.ZXZ:
        if not 2 <= j <= n - 1:
            raise InvalidInputError(f"C_j 要求 2 <= j <= N-1，当前 j={j}, N={n}")
        return PauliString.from_dict({j - 1: 'Z', j: 'X', j + 1: 'Z'})
    if not 3 <= j <= n - 2:
        raise InvalidInputError(f"D_j 要求 3 <= j <= N-2，当前 j={j}, N={n}")
    return PauliString.from_dict({j - 2: 'Z', j - 1: 'X', j: 'X', j + 1: 'X', j + 2: 'Z'})


def stabilizers(kind, n):
    """链上全部稳定子，按中心格点排序"""
    kind = ClusterKind.parse(kind)
    margin = 1 if kind is ClusterKind.ZXZ else 2
    return [stabilizer(kind, j, n) for j in range(1 + margin, n - margin + 1)]


def symmetry_generators(n):
    """
    Z2xZ2 对称生成元 P_e 与 P_o

    Args:
        n: 链长

    Returns:
        tuple: (偶格点 X 之积, 奇格点 X 之积)
    """
    even = PauliString.from_dict({s: 'X' for s in range(2, n + 1, 2)})
    odd = PauliString.from_dict({s: 'X' for s in range(1, n + 1, 2)})
    return even, odd
