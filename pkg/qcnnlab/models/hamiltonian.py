"""
qcnnlab 哈密顿量参数模型
广义簇-Ising 链: H = -J1 ΣC_j - J2 ΣD_j - h1 ΣX_j - h2 ΣX_jX_{j+1}（开边界）
"""

import math
from dataclasses import dataclass, asdict, replace

from qcnnlab.errors import InvalidInputError
from qcnnlab.models.pauli import PauliString, stabilizer

AXES = ('J1', 'J2', 'h1', 'h2')


@dataclass(frozen=True)
class HamiltonianParams:
    """哈密顿量耦合常数与链长"""
    J1: float = 0.0
    J2: float = 0.0
    h1: float = 0.0
    h2: float = 0.0
    N: int = 9

    def __post_init__(self):
        for name in AXES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInputError(f"耦合常数 {name} 必须是有限实数: {value}")
            object.__setattr__(self, name, float(value))
        if int(self.N) != self.N or self.N < 3 or self.N % 2 == 0:
            raise InvalidInputError(f"链长 N 必须为不小于 3 的奇数: {self.N}")
        object.__setattr__(self, 'N', int(self.N))

    @property
    def center(self):
        return (self.N + 1) // 2

    @property
    def max_coupling(self):
        return max(abs(getattr(self, name)) for name in AXES)

    def require_full_model(self):
        """D_j 项存在所需的最小链长 N >= 7"""
        if self.N < 7:
            raise InvalidInputError(f"完整的簇-Ising 模型要求 N >= 7，当前 N={self.N}")
        return self

    def with_axis(self, axis, value):
        """返回替换单个耦合常数后的新参数"""
        if axis not in AXES:
            raise InvalidInputError(f"未知的扫描轴: {axis}")
        return replace(self, **{axis: value})

    def terms(self):
        """
        展开为 (系数, Pauli 串) 列表，求和范围与开边界定义一致

        Returns:
            list: 哈密顿量各项
        """
        n = self.N
        out = []
        if self.J1:
            out += [(-self.J1, stabilizer('ZXZ', j, n)) for j in range(2, n)]
        if self.J2:
            out += [(-self.J2, stabilizer('ZXXXZ', j, n)) for j in range(3, n - 1)]
        if self.h1:
            out += [(-self.h1, PauliString.single(j, 'X')) for j in range(1, n + 1)]
        if self.h2:
            out += [(-self.h2, PauliString.from_dict({j: 'X', j + 1: 'X'})) for j in range(1, n)]
        return out

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: data[k] for k in ('J1', 'J2', 'h1', 'h2', 'N') if k in data})

    def __str__(self):
        return f"J1={self.J1:g}, J2={self.J2:g}, h1={self.h1:g}, h2={self.h2:g}, N={self.N}"
