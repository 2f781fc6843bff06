"""
qcnnlab 导出工具模块
结果表 (CSV)、结果清单 (JSON)、基态振幅转储与打包综合征文件的读写
"""

import csv
import json
import math
import os
import struct

import numpy as np

from qcnnlab.errors import ExportError, InvalidInputError
from qcnnlab.utils.logging_utils import logger

SYNDROME_MAGIC = b'QSYN'
# magic(4) + uint32 N + uint64 shots
_SYNDROME_HEADER = struct.Struct('<4sIQ')


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    """numpy 标量与数组转为原生类型，非有限浮点数写为 null"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_csv(columns, rows, path):
    """
    写入 CSV 结果表

    Args:
        columns: 列名序列
        rows: 每行为与列名等长的元组
        path: 输出文件路径

    Returns:
        str: 文件路径
    """
    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as e:
        logger.error(f"写入 CSV 失败: {path}: {e}")
        raise ExportError(f"无法写入 {path}: {e}", path=path)
    logger.info(f"CSV 已保存: {path} ({len(rows)} 行)")
    return path


def read_csv(path):
    """
    读取 CSV 结果表

    Args:
        path: 文件路径

    Returns:
        tuple: (列名列表, 字符串行列表)
    """
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = next(reader, [])
            return header, [row for row in reader]
    except OSError as e:
        raise ExportError(f"无法读取 {path}: {e}", path=path)


def write_json(data, path):
    """
    写入 JSON 文件

    Args:
        data: 字典
        path: 输出文件路径

    Returns:
        str: 文件路径
    """
    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_jsonable(data), f, indent=2, ensure_ascii=False, sort_keys=True)
            f.write('\n')
    except OSError as e:
        logger.error(f"写入 JSON 失败: {path}: {e}")
        raise ExportError(f"无法写入 {path}: {e}", path=path)
    logger.info(f"JSON 已保存: {path}")
    return path


def read_json(path):
    """读取 JSON 文件，解析失败时给出文件路径"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise ExportError(f"无法读取 {path}: {e}", path=path)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path} 不是合法的 JSON: {e}")


def write_text(text, path):
    """
    写入文本文件

    Args:
        text: 文本内容
        path: 输出文件路径

    Returns:
        str: 文件路径
    """
    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
    except OSError as e:
        logger.error(f"写入文本失败: {path}: {e}")
        raise ExportError(f"无法写入 {path}: {e}", path=path)
    logger.info(f"文本已保存: {path}")
    return path


def write_amplitudes(state, metadata, stem):
    """
    基态振幅转储：<stem>.bin 为小端 complex128 振幅，<stem>.txt 为 key=value 元数据

    Args:
        state: StateVector
        metadata: 元数据字典
        stem: 不含扩展名的输出路径

    Returns:
        tuple: (二进制文件路径, 元数据文件路径)
    """
    bin_path = f"{stem}.bin"
    txt_path = f"{stem}.txt"
    try:
        _ensure_parent(bin_path)
        np.asarray(state.amplitudes, dtype='<c16').tofile(bin_path)
    except OSError as e:
        logger.error(f"写入振幅失败: {bin_path}: {e}")
        raise ExportError(f"无法写入 {bin_path}: {e}", path=bin_path)
    lines = [f"{key}={value}" for key, value in metadata.items()]
    write_text("\n".join(lines) + "\n", txt_path)
    return bin_path, txt_path


def read_amplitudes(stem):
    """
    读取振幅转储

    Args:
        stem: 不含扩展名的路径

    Returns:
        tuple: (complex128 振幅数组, 元数据字典)
    """
    try:
        amplitudes = np.fromfile(f"{stem}.bin", dtype='<c16')
        with open(f"{stem}.txt", 'r', encoding='utf-8') as f:
            metadata = dict(line.rstrip('\n').split('=', 1) for line in f if '=' in line)
    except OSError as e:
        raise ExportError(f"无法读取振幅转储 {stem}: {e}", path=stem)
    return amplitudes, metadata


def write_syndromes(samples, path):
    """
    打包综合征导出：16 字节头 (b'QSYN', uint32 N, uint64 shots)，
    之后每次采样按格点 1 在最高位打包成 ceil(N/8) 字节

    Args:
        samples: (shots, N) 0/1 数组
        path: 输出文件路径

    Returns:
        str: 文件路径
    """
    samples = np.asarray(samples, dtype=np.uint8)
    if samples.ndim != 2:
        raise InvalidInputError(f"综合征数组必须为二维: {samples.shape}")
    shots, n = samples.shape
    try:
        _ensure_parent(path)
        with open(path, 'wb') as f:
            f.write(_SYNDROME_HEADER.pack(SYNDROME_MAGIC, n, shots))
            f.write(np.packbits(samples, axis=1, bitorder='big').tobytes())
    except OSError as e:
        logger.error(f"写入综合征失败: {path}: {e}")
        raise ExportError(f"无法写入 {path}: {e}", path=path)
    logger.info(f"综合征已保存: {path} ({shots} 次采样, N={n})")
    return path


def read_syndromes(path):
    """
    读取打包综合征文件

    Args:
        path: 文件路径

    Returns:
        numpy.ndarray: (shots, N) uint8 数组
    """
    try:
        with open(path, 'rb') as f:
            header = f.read(_SYNDROME_HEADER.size)
            payload = f.read()
    except OSError as e:
        raise ExportError(f"无法读取 {path}: {e}", path=path)
    if len(header) != _SYNDROME_HEADER.size:
        raise InvalidInputError(f"{path} 文件头不完整")
    magic, n, shots = _SYNDROME_HEADER.unpack(header)
    if magic != SYNDROME_MAGIC:
        raise InvalidInputError(f"{path} 不是综合征文件 (magic={magic!r})")
    width = (n + 7) // 8
    if len(payload) != shots * width:
        raise InvalidInputError(f"{path} 数据长度 {len(payload)} 与文件头 ({shots}x{n}) 不符")
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(shots, width)
    return np.unpackbits(packed, axis=1, count=n, bitorder='big')
