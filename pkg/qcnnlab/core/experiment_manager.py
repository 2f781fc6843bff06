"""
qcnnlab 实验管理模块
处理实验的创建、执行和结果输出：按实验类型调度各计算模块，
由进程池并行处理采样块，并把结果写成 CSV/JSON
"""

import itertools
import os
import threading
import time
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import psutil
from tqdm import tqdm

from qcnnlab.config import config
from qcnnlab.core.circuits import apply_gates, disentangler, x_basis_probabilities
from qcnnlab.core.decoder import (architecture_tables, bulk_positions, decode_layers, layer_density,
                                  output_values, exact_output, noisy_x_distribution, sample_noisy_x_basis,
                                  sample_syndromes_cluster)
from qcnnlab.core.groundstate import ground_state, curvature_scan
from qcnnlab.core.heisenberg import backprop, complexity_bounds, Truncation
from qcnnlab.core.noise import noisy_sop_expectation
from qcnnlab.core.threshold import (analytic_threshold, mc_threshold, density_trajectory,
                                   bernstein_profile)
from qcnnlab.errors import ConfigError, InvalidInputError
from qcnnlab.models.architecture import Architecture, layer_sequence
from qcnnlab.models.experiment import (ExperimentConfig, ExperimentRun, ResultRecord, ResultRow,
                                       RunStatus, CSV_COLUMNS, noise_channel)
from qcnnlab.models.pauli import SopSpec
from qcnnlab.utils.export_utils import (write_csv, write_json, write_text, write_amplitudes,
                                        read_json)
from qcnnlab.utils.rng_utils import split_blocks
from qcnnlab.utils.logging_utils import logger, timed


def worker_count(workers=None):
    """
    进程池大小

    Args:
        workers: 显式指定的进程数，默认取配置项 workers，0 表示按物理核数

    Returns:
        int: 进程数 (>= 1)
    """
    workers = int(config.get('workers', 0) if workers is None else workers)
    if workers <= 0:
        workers = psutil.cpu_count(logical=False) or os.cpu_count() or 1
    return max(1, workers)


def _cluster_block(task):
    """
    簇态快速路径的一个采样块：返回每个深度的 (Σy, Σy², Σ密度)

    Args:
        task: (相, 结构风格, 深度元组, N, 信道, 种子, 块序号, 块大小, 是否只统计链内位置)

    Returns:
        numpy.ndarray: (深度数, 3) 部分和
    """
    phase, style, depths, n, channel, seed, block, size, bulk = task
    arch = Architecture.build(phase, style, max(depths), n)
    layers = decode_layers(sample_syndromes_cluster(phase, channel, n, size, seed, block=block), arch)
    out = np.zeros((len(depths), 3))
    for i, d in enumerate(depths):
        density = layer_density(layers[d], arch, d, size, bulk_positions(arch, d) if bulk else None)
        values = 1.0 - 2.0 * density
        out[i] = (values.sum(), (values ** 2).sum(), density.sum())
    return out


def _moments(total, total_sq, count):
    mean = total / count
    if count < 2:
        return mean, float('nan')
    var = max(0.0, total_sq / count - mean ** 2) * count / (count - 1)
    return mean, float(np.sqrt(var / count))


def output_slope(rows):
    """
    各深度下输出对扫描参数的中心差分斜率；斜率最负处为相边界候选

    Args:
        rows: ResultRow 列表

    Returns:
        dict: 深度 -> {'sweep_values', 'slope', 'boundary'}
    """
    by_depth = OrderedDict()
    for row in rows:
        by_depth.setdefault(row.depth, []).append((row.sweep_value, row.y))
    out = OrderedDict()
    for depth, points in by_depth.items():
        points.sort()
        x = np.array([p[0] for p in points])
        y = np.array([p[1] for p in points])
        if x.size < 2:
            out[depth] = {'sweep_values': x.tolist(), 'slope': [], 'boundary': None}
            continue
        slope = np.gradient(y, x)
        out[depth] = {'sweep_values': x.tolist(), 'slope': slope.tolist(),
                      'boundary': float(x[int(np.argmin(slope))])}
    return out


class ExperimentManager:
    """实验管理器类"""

    def __init__(self, max_runs=100, workers=None):
        """
        初始化实验管理器

        Args:
            max_runs: 保留的最大运行数
            workers: 进程池大小，默认取配置
        """
        self.runs = OrderedDict()  # 有序字典，便于清理旧运行
        self.max_runs = max_runs
        self.workers = workers
        self.lock = threading.Lock()
        self._counter = itertools.count(1)
        self._handlers = {
            'cluster-noise': self._run_cluster_noise,
            'sweep': self._run_sweep,
            'threshold': self._run_threshold,
            'backprop': self._run_backprop,
            'truthtable': self._run_truthtable,
            'gs': self._run_ground_state,
        }

    def create_run(self, experiment_config, run_id=None):
        """
        创建实验运行

        Args:
            experiment_config: ExperimentConfig
            run_id: 运行ID（可选，默认自动生成）

        Returns:
            ExperimentRun: 运行对象
        """
        experiment_config.validate()
        with self.lock:
            if run_id is None:
                run_id = f"{int(time.time())}-{next(self._counter)}"
            run = ExperimentRun(run_id, experiment_config)
            self.runs[run_id] = run
            self._clean_old_runs()
        logger.info(f"已创建实验: {run_id}, 类型: {experiment_config.kind}")
        return run

    def execute(self, run_id):
        """
        同步执行实验运行，失败时记录错误并重新抛出

        Args:
            run_id: 运行ID

        Returns:
            ResultRecord: 结果记录
        """
        with self.lock:
            run = self.runs.get(run_id)
            if run is None:
                raise InvalidInputError(f"实验不存在: {run_id}")
            if run.status in (RunStatus.RUNNING, RunStatus.COMPLETED):
                raise InvalidInputError(f"实验 {run_id} 已经{run.status.value}")
            run.start()

        cfg = run.config
        logger.info(f"开始实验 {run_id}: {cfg.kind}, N={cfg.n}, 种子={cfg.seed}")
        timings = {}
        try:
            with timed('wall_clock', timings):
                record = self._handlers[cfg.kind](cfg)
        except Exception as e:
            logger.error(f"实验异常: {run_id}, 错误: {e}")
            with self.lock:
                run.fail(e)
            raise
        record.wall_clock = timings['wall_clock']
        with self.lock:
            run.complete(record)
        logger.info(f"实验完成 {run_id}: {len(record.rows)} 行, 用时 {record.wall_clock:.2f} 秒")
        return record

    def run_experiment(self, experiment_config):
        """
        创建并执行实验

        Args:
            experiment_config: ExperimentConfig

        Returns:
            ResultRecord: 结果记录
        """
        return self.execute(self.create_run(experiment_config).run_id)

    def get_run(self, run_id):
        with self.lock:
            return self.runs.get(run_id)

    def get_all_runs(self):
        with self.lock:
            return self.runs.copy()

    def _clean_old_runs(self):
        """清理旧运行，保持数量在限制内"""
        if len(self.runs) <= self.max_runs:
            return
        runs_by_time = sorted(self.runs.items(), key=lambda x: x[1].created_at)
        for run_id, _ in runs_by_time[:len(runs_by_time) - self.max_runs]:
            del self.runs[run_id]
            logger.debug(f"已清理旧运行: {run_id}")

    def map_blocks(self, fn, tasks):
        """
        在进程池中按顺序映射采样块任务

        Args:
            fn: 模块级函数
            tasks: 任务参数列表

        Returns:
            list: 与任务顺序一致的结果
        """
        workers = min(worker_count(self.workers), len(tasks))
        if workers <= 1:
            return [fn(task) for task in tasks]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, tasks))

    def _progress(self, values, desc):
        return tqdm(values, desc=desc, disable=not config.get('progress', False))

    # 各类实验

    def _run_cluster_noise(self, cfg):
        """簇态 + 噪声扫描（综合征快速路径）"""
        record = ResultRecord(cfg)
        blocks = split_blocks(cfg.shots)
        bulk = bool(cfg.options.get('bulk', False))
        if bulk:
            for d in cfg.depths:
                bulk_positions(cfg.architecture(d), d)
        for value in self._progress(cfg.grid, 'cluster-noise'):
            channel = noise_channel(cfg.axis, value, cfg.channel)
            tasks = [(cfg.phase, cfg.style, cfg.depths, cfg.n, channel, cfg.seed, b, size, bulk)
                     for b, size in enumerate(blocks)]
            # 按块序号顺序求和，与进程数无关
            with timed('sampling', record.timings):
                sums = np.sum(np.stack(self.map_blocks(_cluster_block, tasks)), axis=0)
            for i, d in enumerate(cfg.depths):
                y, stderr = _moments(sums[i, 0], sums[i, 1], cfg.shots)
                record.rows.append(ResultRow(value, d, float(y), stderr, float(sums[i, 2] / cfg.shots),
                                             cfg.shots, cfg.seed))
            logger.debug(f"{cfg.axis}={value:g}: y={[round(r.y, 4) for r in record.rows[-len(cfg.depths):]]}")
        return record

    def _sop_spec(self, cfg):
        try:
            return SopSpec(cfg.phase, 2, cfg.n - 1)
        except InvalidInputError:
            return None

    def _run_sweep(self, cfg):
        """哈密顿量参数扫描（精确对角化 + 态矢量路径）"""
        record = ResultRecord(cfg)
        exact = bool(cfg.options.get('exact', False))
        unitary = disentangler(cfg.phase, cfg.n)
        spec = self._sop_spec(cfg)
        energies, gaps, sop_values = [], [], []
        for value in self._progress(cfg.grid, 'sweep'):
            with timed('ground_state', record.timings):
                gs = ground_state(cfg.hamiltonian.with_axis(cfg.axis, value), seed=cfg.seed)
            energies.append(gs.energy)
            gaps.append(gs.gap_estimate)
            if spec is not None:
                sop_values.append(noisy_sop_expectation(gs.state, spec, cfg.channel))
            probabilities = x_basis_probabilities(apply_gates(unitary, gs.state))
            if exact:
                noisy = noisy_x_distribution(probabilities, cfg.phase, cfg.channel)
            else:
                samples = sample_noisy_x_basis(probabilities, cfg.phase, cfg.channel, cfg.shots, cfg.seed)
            for d in cfg.depths:
                arch = cfg.architecture(d)
                if exact:
                    y = exact_output(noisy, arch)
                    record.rows.append(ResultRow(value, d, y, 0.0, (1.0 - y) / 2, 0, cfg.seed))
                    continue
                values = output_values(samples, arch)
                y, stderr = _moments(values.sum(), (values ** 2).sum(), values.size)
                record.rows.append(ResultRow(value, d, float(y), stderr, float((1.0 - y) / 2),
                                             cfg.shots, cfg.seed))

        slopes = output_slope(record.rows)
        record.extra = {
            'energies': energies,
            'gaps': gaps,
            'output_slope': {str(d): s for d, s in slopes.items()},
            'boundary_candidates': {str(d): s['boundary'] for d, s in slopes.items()},
        }
        if spec is not None:
            sop_slope = np.gradient(sop_values, cfg.grid) if len(sop_values) > 1 else np.array([])
            record.extra['sop'] = {
                'j': spec.j, 'k': spec.k, 'values': sop_values, 'slope': sop_slope.tolist(),
                'boundary': float(cfg.grid[int(np.argmin(sop_slope))]) if sop_slope.size else None
            }
        return record

    def _run_threshold(self, cfg):
        """解析或蒙特卡罗阈值"""
        record = ResultRecord(cfg)
        mode = cfg.options.get('mode', 'analytic')
        if mode == 'mc':
            bracket = cfg.options.get('bracket')
            threshold = mc_threshold(cfg.phase, cfg.n, cfg.shots, cfg.seed,
                                     tol=float(cfg.options.get('tol', 0.005)),
                                     bracket=tuple(bracket) if bracket else None)
        else:
            threshold = analytic_threshold(tol=float(cfg.options.get('tol', 1e-6)))
            # 网格给出时附带无关联近似下的逐层密度
            layers = layer_sequence(cfg.style, max(cfg.depths))
            for p0 in cfg.grid:
                trajectory = density_trajectory(p0, layers)
                for d in cfg.depths:
                    density = trajectory.at(d)
                    record.rows.append(ResultRow(p0, d, 1.0 - 2.0 * density, 0.0, density, 0, cfg.seed))
        record.extra = {'mode': mode, 'threshold': threshold}
        return record

    def _run_backprop(self, cfg):
        """输出测量的 Heisenberg 反向传播"""
        record = ResultRecord(cfg)
        arch = cfg.architecture()
        options = cfg.options
        truncation = Truncation(float(options.get('epsilon', 0.0)), options.get('max_terms'))
        op = backprop(arch, position=options.get('position'), levels=options.get('levels'),
                      truncation=truncation, allow_deep=bool(options.get('allow_deep', False)),
                      term_cap=options.get('term_cap'))
        record.extra = {
            'architecture': arch.to_dict(),
            'terms': len(op),
            'exact': op.is_exact,
            'parseval': float(op.parseval()),
            'l1_norm': float(op.l1_norm()),
            'max_weight': max((len(s) for s in op.terms), default=0),
        }
        if arch.depth >= 3:
            record.extra['complexity_bounds'] = {k: (str(v) if v is not None else None)
                                                 for k, v in complexity_bounds(arch.depth).items()}
        record.texts['terms.txt'] = op.to_text()
        return record

    def _run_truthtable(self, cfg):
        """各层经典译码表与 Bernstein 系数"""
        record = ResultRecord(cfg)
        arch = cfg.architecture()
        tables = architecture_tables(arch)
        seen = {}
        for f, table in enumerate(tables, start=1):
            key = table.layer.value
            if key not in seen:
                seen[key] = {
                    'first_layer': f,
                    'offsets': list(table.offsets),
                    'profile': bernstein_profile(table).tolist(),
                }
                record.texts[f"{key}.table"] = table.to_text()
        record.extra = {'phase': cfg.phase.value, 'tables': seen}
        return record

    def _run_ground_state(self, cfg):
        """单点基态，可选沿参数轴的曲率扫描"""
        record = ResultRecord(cfg)
        result = ground_state(cfg.hamiltonian, seed=cfg.seed,
                              pin_edge=bool(cfg.options.get('pin_edge', False)))
        record.ground_state = result
        record.extra = {'ground_state': result.metadata(), 'iterations': result.iterations}
        if cfg.grid:
            scan = curvature_scan(cfg.hamiltonian, cfg.axis, cfg.grid)
            record.extra['curvature'] = {
                'axis': scan.axis,
                'rows': scan.rows.tolist(),
                'peaks': scan.peaks,
            }
        return record


def result_stem(rec, out=None):
    """输出路径（不含扩展名）"""
    cfg = rec.config
    out = out or cfg.out
    if not out:
        name = cfg.name or cfg.kind
        out = os.path.join(config.get('results_dir'), f"{name}_{cfg.seed}")
    stem, ext = os.path.splitext(out)
    return stem if ext.lower() in ('.csv', '.json') else out


def emit_results(rec, format=None, out=None):
    """
    写出实验结果

    csv: <stem>.csv 结果表 + <stem>.json 清单；json: 单个 <stem>.json，清单中带 rows。
    译码表、反向传播项等文本与基态振幅写在同名前缀的附属文件中。

    Args:
        rec: ResultRecord
        format: 'csv' 或 'json'，默认取配置中的 format
        out: 输出路径，默认取配置中的 out 或 results_dir

    Returns:
        list: 写出的文件路径
    """
    format = format or rec.config.format
    if format not in ('csv', 'json'):
        raise ConfigError(f"未知的输出格式: {format}")
    stem = result_stem(rec, out)
    rows = [row.as_tuple() for row in rec.rows]
    manifest = rec.manifest()
    paths = []
    if format == 'csv':
        paths.append(write_csv(CSV_COLUMNS, rows, f"{stem}.csv"))
    else:
        manifest['rows'] = [list(row) for row in rows]
    paths.append(write_json(manifest, f"{stem}.json"))
    for suffix, text in rec.texts.items():
        paths.append(write_text(text, f"{stem}.{suffix}"))
    if rec.ground_state is not None:
        paths.extend(write_amplitudes(rec.ground_state.state, rec.ground_state.metadata(),
                                      f"{stem}_amplitudes"))
    return paths


def load_manifest(path):
    """
    读取结果清单

    Args:
        path: JSON 清单路径

    Returns:
        tuple: (ExperimentConfig, 清单字典)
    """
    manifest = read_json(path)
    if 'config' not in manifest:
        raise ConfigError(f"{path} 缺少 config 字段")
    return ExperimentConfig.from_dict(manifest['config']), manifest


# 导出实验管理器实例
experiment_manager = ExperimentManager()


def run_experiment(experiment_config):
    """用默认管理器运行实验"""
    return experiment_manager.run_experiment(experiment_config)
