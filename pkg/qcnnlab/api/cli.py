"""
qcnnlab 命令行模块
子命令 threshold / cluster-noise / sweep / gs / backprop / truthtable，
配置文件（或预设名）打底，命令行参数覆盖
"""

import argparse
import os
import sys

import numpy as np

from qcnnlab import __version__
from qcnnlab.config import config, PRESETS_DIR
from qcnnlab.core.experiment_manager import ExperimentManager, emit_results
from qcnnlab.errors import QcnnLabError, ConfigError
from qcnnlab.models.architecture import STYLES
from qcnnlab.models.experiment import ExperimentConfig, NOISE_AXES
from qcnnlab.models.hamiltonian import AXES
from qcnnlab.utils.export_utils import read_json
from qcnnlab.utils.logging_utils import logger, set_level


def parse_grid(text):
    """
    解析扫描网格："start:stop:num" 为等距网格，否则为逗号分隔的数值

    Args:
        text: 网格描述

    Returns:
        list: 网格点
    """
    try:
        if ':' in text:
            start, stop, num = text.split(':')
            return np.linspace(float(start), float(stop), int(num)).tolist()
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f"无法解析扫描网格: {text}")


def load_preset(name_or_path):
    """
    读取配置文件；不是已有文件时按预设名在 presets 目录中查找

    Args:
        name_or_path: 文件路径或预设名（如 fig3）

    Returns:
        dict: 配置字典
    """
    path = name_or_path
    if not os.path.exists(path):
        candidate = PRESETS_DIR / f"{name_or_path}.json"
        if not candidate.exists():
            raise ConfigError(f"找不到配置文件或预设: {name_or_path}")
        path = str(candidate)
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path} 的顶层必须是对象")
    logger.info(f"已加载实验配置: {path}")
    return data


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='实验配置文件路径或预设名 (fig3, fig5a, fig7, figS3)')
    common.add_argument('--seed', type=int, help='运行种子 (U64)')
    common.add_argument('--shots', type=int, help='采样次数')
    common.add_argument('--n', type=int, help='链长 N')
    common.add_argument('--depths', help='深度列表，如 1..6 或 1,3,5')
    common.add_argument('--phase', choices=['zxz', 'zxxxz'], help='簇态/解纠缠线路类型')
    common.add_argument('--arch', choices=STYLES, help='QCNN 结构风格')
    common.add_argument('--channel', help='噪声信道，如 z:0.05 或 depol:0.015')
    common.add_argument('--out', help='输出路径（不含扩展名或以 .csv/.json 结尾）')
    common.add_argument('--format', choices=['csv', 'json'], help='输出格式')
    common.add_argument('--workers', type=int, help='进程池大小，0 表示按物理核数')
    common.add_argument('--log-level', choices=['debug', 'info', 'warning', 'error'], help='日志级别')
    common.add_argument('--progress', action='store_true', help='显示进度条')
    return common


def _hamiltonian_arguments(parser):
    for axis in AXES:
        parser.add_argument(f'--{axis}', type=float, help=f'耦合常数 {axis}')


def build_parser():
    """
    构造命令行解析器

    Returns:
        argparse.ArgumentParser: 解析器
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='qcnnlab', description='QCNN 对称保护拓扑相识别模拟实验室')
    parser.add_argument('--version', action='version', version=f'qcnnlab {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p_threshold = sub.add_parser('threshold', parents=[common], help='解析或蒙特卡罗阈值')
    mode = p_threshold.add_mutually_exclusive_group()
    mode.add_argument('--analytic', dest='mode', action='store_const', const='analytic', help='f_z∘f_x 的不动点')
    mode.add_argument('--mc', dest='mode', action='store_const', const='mc', help='簇态综合征上的二分估计')
    p_threshold.add_argument('--tol', type=float, help='二分精度')
    p_threshold.add_argument('--bracket', type=float, nargs=2, metavar=('LO', 'HI'), help='初始区间')
    p_threshold.add_argument('--grid', help='附带逐层密度的初始概率网格')

    p_noise = sub.add_parser('cluster-noise', parents=[common], help='簇态 + 噪声下的 QCNN 输出')
    p_noise.add_argument('--axis', choices=NOISE_AXES, help='噪声扫描轴')
    p_noise.add_argument('--grid', help='噪声网格，如 0:0.12:25')
    p_noise.add_argument('--bulk', action='store_true', default=None, help='只统计译码窗口完全在链内的输出位置')

    p_sweep = sub.add_parser('sweep', parents=[common], help='哈密顿量参数扫描（精确对角化）')
    _hamiltonian_arguments(p_sweep)
    p_sweep.add_argument('--axis', choices=AXES, help='扫描轴')
    p_sweep.add_argument('--grid', help='参数网格，如 0:2:21')
    p_sweep.add_argument('--exact', action='store_true', default=None, help='用精确分布代替采样')

    p_gs = sub.add_parser('gs', parents=[common], help='基态求解与能量曲率扫描')
    _hamiltonian_arguments(p_gs)
    p_gs.add_argument('--axis', choices=AXES, help='曲率扫描轴')
    p_gs.add_argument('--grid', help='曲率扫描网格（均匀，至少 5 点）')
    p_gs.add_argument('--pin-edge', action='store_true', default=None, help='加边界钉扎场')

    p_back = sub.add_parser('backprop', parents=[common], help='输出测量的 Heisenberg 反向传播')
    p_back.add_argument('--levels', type=int, help='传播层数')
    p_back.add_argument('--position', type=int, help='输出位置，默认中心')
    p_back.add_argument('--epsilon', type=float, help='系数截断阈值')
    p_back.add_argument('--max-terms', type=int, help='最多保留的项数')
    p_back.add_argument('--allow-deep', action='store_true', default=None, help='允许超过 2 层的精确传播')

    sub.add_parser('truthtable', parents=[common], help='导出各层经典译码表')
    return parser


# 命令行参数名 -> options 键
_OPTION_FLAGS = {
    'mode': 'mode', 'tol': 'tol', 'bracket': 'bracket', 'exact': 'exact', 'pin_edge': 'pin_edge',
    'levels': 'levels', 'position': 'position', 'epsilon': 'epsilon', 'max_terms': 'max_terms',
    'allow_deep': 'allow_deep', 'bulk': 'bulk',
}


def resolve_config(args):
    """
    合并配置文件与命令行参数

    Args:
        args: argparse 命名空间

    Returns:
        ExperimentConfig: 已校验的实验配置
    """
    data = load_preset(args.config) if args.config else {}
    kind = data.setdefault('kind', args.command)
    if kind != args.command:
        raise ConfigError(f"配置文件的实验类型 {kind} 与子命令 {args.command} 不一致")

    for flag in ('seed', 'shots', 'n', 'depths', 'out', 'format', 'axis'):
        value = getattr(args, flag, None)
        if value is not None:
            data[flag] = value
    if args.phase:
        data['phase'] = args.phase.upper()
    if args.arch:
        data['style'] = args.arch
    if args.channel:
        data['channel'] = args.channel
    if getattr(args, 'grid', None):
        data['grid'] = parse_grid(args.grid)

    options = dict(data.get('options') or {})
    for flag, key in _OPTION_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            options[key] = list(value) if isinstance(value, list) else value
    data['options'] = options

    if kind in ('sweep', 'gs'):
        hamiltonian = dict(data.get('hamiltonian') or {})
        for axis in AXES:
            value = getattr(args, axis, None)
            if value is not None:
                hamiltonian[axis] = value
        if 'n' in data:
            hamiltonian['N'] = data['n']
        data['hamiltonian'] = hamiltonian
    return ExperimentConfig.from_dict(data)


def _summary(record):
    extra = record.extra
    if 'threshold' in extra:
        return f"threshold = {extra['threshold']:.6f}"
    if 'ground_state' in extra:
        return f"E0 = {extra['ground_state']['energy']}"
    if 'terms' in extra:
        return f"terms = {extra['terms']}"
    return f"rows = {len(record.rows)}"


def main(argv=None):
    """
    命令行入口

    Args:
        argv: 参数列表，默认取 sys.argv[1:]

    Returns:
        int: 退出码（0 成功，2 配置错误，3 未收敛，4 阈值不确定）
    """
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    if args.progress:
        config.set('progress', True)
    try:
        cfg = resolve_config(args)
        record = ExperimentManager(workers=args.workers).run_experiment(cfg)
        paths = emit_results(record)
    except QcnnLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"未预期的错误: {e}")
        return 1
    print(_summary(record))
    for path in paths:
        print(path)
    return 0


if __name__ == '__main__':
    sys.exit(main())
