"""
qcnnlab QCNN 结构模型
目标相、解纠缠线路类型与逐层纠错类型
"""

from dataclasses import dataclass
from enum import Enum

from qcnnlab.errors import InvalidInputError
from qcnnlab.models.pauli import ClusterKind


class LayerKind(str, Enum):
    """池化层的纠错类型"""
    XCORR = "Xcorr"
    ZCORR = "Zcorr"
    CCORR = "Ccorr"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise InvalidInputError(f"未知的纠错层类型: {value}")


class Target(str, Enum):
    """QCNN 识别的目标相"""
    ZXZ = "ZXZ"
    ZXXXZ = "ZXXXZ"
    ZXXXZ_VS_ZXZ = "ZXXXZ-vs-ZXZ"
    ZXZ_VS_ZXXXZ = "ZXZ-vs-ZXXXZ"


# 每种 (解纠缠类型, 层类型) 组合是否有对应的纠错线路
SUPPORTED_LAYERS = {
    (ClusterKind.ZXZ, LayerKind.XCORR),
    (ClusterKind.ZXZ, LayerKind.ZCORR),
    (ClusterKind.ZXXXZ, LayerKind.XCORR),
    (ClusterKind.ZXXXZ, LayerKind.CCORR),
    (ClusterKind.ZXXXZ, LayerKind.ZCORR),
}

STYLES = ('x-only', 'alt-xz', 'alt-cz')


def max_depth(n):
    """最大深度 floor(log3 N)，用整数运算避免浮点误差"""
    d = 0
    while 3 ** (d + 1) <= n:
        d += 1
    return d


def layer_sequence(style, depth):
    """
    按结构风格生成 f = 1..d 的层类型

    Args:
        style: 'x-only'、'alt-xz' 或 'alt-cz'
        depth: 深度

    Returns:
        tuple: 层类型序列
    """
    if style == 'x-only':
        return tuple(LayerKind.XCORR for _ in range(depth))
    if style == 'alt-xz':
        return tuple(LayerKind.XCORR if f % 2 else LayerKind.ZCORR for f in range(1, depth + 1))
    if style == 'alt-cz':
        return tuple(LayerKind.CCORR if f % 2 else LayerKind.ZCORR for f in range(1, depth + 1))
    raise InvalidInputError(f"未知的结构风格: {style}，可选 {', '.join(STYLES)}")


@dataclass(frozen=True)
class Architecture:
    """一个具体链长上的 QCNN 结构"""
    target: Target
    disentangler: ClusterKind
    layers: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, 'target', Target(self.target))
        object.__setattr__(self, 'disentangler', ClusterKind.parse(self.disentangler))
        object.__setattr__(self, 'layers', tuple(LayerKind.parse(l) for l in self.layers))
        if self.n < 3 or self.n % 2 == 0:
            raise InvalidInputError(f"链长 N 必须为奇数: {self.n}")
        for layer in self.layers:
            if (self.disentangler, layer) not in SUPPORTED_LAYERS:
                raise InvalidInputError(f"{self.disentangler.value} 解纠缠线路没有 {layer.value} 纠错层")
        if self.depth > max_depth(self.n):
            raise InvalidInputError(f"深度 d={self.depth} 超过 floor(log3 N)={max_depth(self.n)}")
        if self.m % 2 == 0:
            raise InvalidInputError(f"输出比特数 m={self.m} 为偶数 (N={self.n}, d={self.depth})")

    @classmethod
    def build(cls, phase, style, depth, n, target=None):
        """
        由相类型与结构风格构造

        Args:
            phase: 解纠缠线路类型 (ZXZ/ZXXXZ)
            style: 结构风格
            depth: 深度 d
            n: 链长
            target: 目标相标签，默认由 phase 与 style 推断

        Returns:
            Architecture: QCNN 结构
        """
        phase = ClusterKind.parse(phase)
        if target is None:
            if phase is ClusterKind.ZXXXZ and style == 'alt-cz':
                target = Target.ZXXXZ_VS_ZXZ
            else:
                target = Target(phase.value)
        return cls(Target(target), phase, layer_sequence(style, depth), n)

    @property
    def depth(self):
        return len(self.layers)

    @property
    def center(self):
        return (self.n + 1) // 2

    @property
    def m(self):
        return self.n // 3 ** self.depth

    @property
    def style(self):
        if LayerKind.CCORR in self.layers:
            return 'alt-cz'
        return 'alt-xz' if LayerKind.ZCORR in self.layers else 'x-only'

    def truncated(self, depth):
        """前 depth 层构成的结构"""
        return Architecture(self.target, self.disentangler, self.layers[:depth], self.n)

    def positions(self, f):
        """
        第 f 层之后保留的格点 (f=0 为全部格点)

        Args:
            f: 层序号

        Returns:
            list: 位置 p ≡ c (mod 3^f) 且位于 [1, N]
        """
        step = 3 ** f
        first = (self.center - 1) % step + 1
        return list(range(first, self.n + 1, step))

    def interior_positions(self, f, radii):
        """
        第 f 层之后译码窗口完全落在链内的保留格点

        第 g 层窗口半径为 radii[g-1]·3^(g-1)，前 f 层叠加后的总半径内不能出现补零位

        Args:
            f: 层序号
            radii: 各层窗口的最大偏移（以 3^(g-1) 为单位）

        Returns:
            list: 满足 reach < p <= N - reach 的保留位置
        """
        if len(radii) < f:
            raise InvalidInputError(f"需要前 {f} 层的窗口半径，只给出 {len(radii)} 层")
        reach = sum(int(r) * 3 ** g for g, r in enumerate(radii[:f]))
        return [p for p in self.positions(f) if reach < p <= self.n - reach]

    def output_positions(self):
        """输出比特位置 c + j·3^d，j = -(m-1)/2..(m-1)/2"""
        half = (self.m - 1) // 2
        step = 3 ** self.depth
        return [self.center + j * step for j in range(-half, half + 1)]

    def to_dict(self):
        return {
            'target': self.target.value,
            'disentangler': self.disentangler.value,
            'layers': [l.value for l in self.layers],
            'n': self.n
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['target'], data['disentangler'], tuple(data['layers']), data['n'])
