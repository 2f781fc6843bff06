"""
qcnnlab 噪声信道模型
单比特 Pauli 信道参数与一次采样得到的误差构型
"""

from dataclasses import dataclass

import numpy as np

from qcnnlab.errors import InvalidInputError
from qcnnlab.models.pauli import PauliString

LETTERS = ('X', 'Y', 'Z')


@dataclass(frozen=True)
class ChannelSpec:
    """每个格点独立作用的 Pauli 信道 (pX, pY, pZ)"""
    pX: float = 0.0
    pY: float = 0.0
    pZ: float = 0.0

    def __post_init__(self):
        values = (self.pX, self.pY, self.pZ)
        if any(not np.isfinite(p) or p < 0 for p in values):
            raise InvalidInputError(f"信道概率必须为非负有限实数: {values}")
        if sum(values) > 1 + 1e-12:
            raise InvalidInputError(f"信道概率之和超过 1: {sum(values)}")
        for name, value in zip(('pX', 'pY', 'pZ'), values):
            object.__setattr__(self, name, float(value))

    @classmethod
    def depolarizing(cls, p):
        return cls(p, p, p)

    @classmethod
    def parse(cls, text):
        """
        解析命令行信道描述，如 "x:0.1,y:0.1,z:0.1" 或 "depol:0.015"

        Args:
            text: 信道描述

        Returns:
            ChannelSpec: 信道
        """
        values = {'x': 0.0, 'y': 0.0, 'z': 0.0}
        if not text or not text.strip():
            raise InvalidInputError("空的信道描述")
        for part in text.split(','):
            key, sep, raw = part.strip().partition(':')
            try:
                value = float(raw)
            except ValueError:
                raise InvalidInputError(f"无法解析信道项: {part}")
            key = key.strip().lower()
            if not sep:
                raise InvalidInputError(f"信道项缺少冒号: {part}")
            if key == 'depol':
                values = {'x': value, 'y': value, 'z': value}
            elif key in values:
                values[key] = value
            else:
                raise InvalidInputError(f"未知的信道分量: {key}")
        return cls(values['x'], values['y'], values['z'])

    @property
    def p_identity(self):
        return max(0.0, 1.0 - self.pX - self.pY - self.pZ)

    @property
    def probabilities(self):
        """(p1, pX, pY, pZ)"""
        return np.array([self.p_identity, self.pX, self.pY, self.pZ])

    @property
    def is_zero(self):
        return self.pX == self.pY == self.pZ == 0.0

    @property
    def is_pure_x(self):
        return self.pY == 0.0 and self.pZ == 0.0

    @property
    def is_pure_z(self):
        return self.pX == 0.0 and self.pY == 0.0

    def to_text(self):
        return f"x:{self.pX:g},y:{self.pY:g},z:{self.pZ:g}"

    def to_dict(self):
        return {'pX': self.pX, 'pY': self.pY, 'pZ': self.pZ}


@dataclass(frozen=True)
class ErrorConfig:
    """一条量子轨迹上的误差事件，events 为按格点排序的 (格点, 字母) 元组"""
    events: tuple
    n: int

    def __post_init__(self):
        seen = set()
        for site, letter in self.events:
            if letter not in LETTERS:
                raise InvalidInputError(f"非法的误差字母: {letter}")
            if not 1 <= site <= self.n:
                raise InvalidInputError(f"误差格点 {site} 超出范围 [1, {self.n}]")
            if site in seen:
                raise InvalidInputError(f"格点 {site} 上出现多个误差事件")
            seen.add(site)
        object.__setattr__(self, 'events', tuple(sorted(self.events)))

    @classmethod
    def from_codes(cls, codes):
        """
        从逐格点编码构造 (0=I, 1=X, 2=Y, 3=Z)

        Args:
            codes: 长度为 N 的整数数组

        Returns:
            ErrorConfig: 误差构型
        """
        codes = np.asarray(codes)
        sites = np.nonzero(codes)[0]
        return cls(tuple((int(s) + 1, LETTERS[int(codes[s]) - 1]) for s in sites), int(codes.size))

    def __len__(self):
        return len(self.events)

    def to_pauli(self):
        return PauliString.from_dict(dict(self.events))
