"""
密度递推、解析阈值与蒙特卡罗阈值统计量的测试
"""

import time

import numpy as np
import pytest

from qcnnlab.core.decoder import (derive_table, bulk_positions, decode, decode_layers, layer_density,
                                  flip_matrices, architecture_tables, sample_syndromes_cluster)
from qcnnlab.core.threshold import (
    f_x, f_z, pair_map, analytic_threshold, density_trajectory, bernstein_profile,
    bernstein_polynomial, pair_trend, classify_probe, mc_threshold
)
from qcnnlab.errors import InvalidInputError
from qcnnlab.models.architecture import Architecture, LayerKind, Target, SUPPORTED_LAYERS
from qcnnlab.models.channel import ChannelSpec


class TestDensityMaps:
    def test_values(self):
        assert f_x(0.1) == pytest.approx(0.23104)
        assert f_z(0.2) == pytest.approx(0.104)
        assert f_x(0.0) == 0.0
        assert f_z(0.5) == pytest.approx(0.5)

    def test_vectorized(self):
        grid = np.linspace(0, 1, 11)
        assert np.allclose(f_z(grid), grid ** 2 * (3 - 2 * grid))

    @pytest.mark.parametrize('p', [-0.1, 1.5, float('nan')])
    def test_rejects_non_probability(self, p):
        with pytest.raises(InvalidInputError):
            f_x(p)

    @pytest.mark.parametrize('phase, layer, fn', [
        ('ZXZ', LayerKind.XCORR, f_x),
        ('ZXZ', LayerKind.ZCORR, f_z),
        ('ZXXXZ', LayerKind.CCORR, f_x),
    ])
    def test_bernstein_polynomial_reproduces_map(self, phase, layer, fn):
        profile = bernstein_profile(derive_table(phase, layer))
        grid = np.linspace(0, 1, 21)
        assert np.allclose(bernstein_polynomial(profile, grid), fn(grid))


class TestAnalyticThreshold:
    def test_fixed_point(self):
        threshold = analytic_threshold()
        assert 0.053 <= threshold <= 0.055
        assert pair_map(threshold) == pytest.approx(threshold, abs=1e-5)

    @pytest.mark.parametrize('lo, hi', [(0.01, 0.2), (0.03, 0.1), (0.05, 0.06), (1e-4, 0.49)])
    def test_bracket_invariance(self, lo, hi):
        assert analytic_threshold(lo, hi) == pytest.approx(analytic_threshold(), abs=2e-6)

    @pytest.mark.parametrize('lo, hi', [(0.06, 0.2), (0.01, 0.05), (0.2, 0.1), (0.0, 0.3)])
    def test_bad_bracket(self, lo, hi):
        with pytest.raises(InvalidInputError):
            analytic_threshold(lo, hi)

    def test_iteration_flows(self):
        below, above = 0.03, 0.08
        for _ in range(12):
            below, above = pair_map(below), pair_map(above)
        assert below < 1e-6
        assert above == pytest.approx(0.5, abs=1e-3)


class TestTrajectory:
    def test_alternating_layers(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 4, 81)
        trajectory = density_trajectory(0.03, arch)
        assert trajectory.at(0) == 0.03
        assert trajectory.at(1) == pytest.approx(f_x(0.03))
        assert trajectory.at(2) == pytest.approx(pair_map(0.03))
        # 阈值以下每两层密度下降，奇数层则上升
        assert trajectory.at(4) < trajectory.at(2) < 0.03 < trajectory.at(1)

    def test_layer_names_and_depth(self):
        trajectory = density_trajectory(0.1, ['Xcorr', 'Zcorr', 'Xcorr'], depth=2)
        assert len(trajectory.values) == 2
        with pytest.raises(InvalidInputError):
            density_trajectory(0.1, ['Xcorr'], depth=2)


class TestSingleLayerDensity:
    @pytest.mark.parametrize('phase, layer', sorted(SUPPORTED_LAYERS))
    @pytest.mark.parametrize('p', [0.02, 0.05, 0.1])
    def test_matches_bernstein_polynomial(self, phase, layer, p, rng):
        arch = Architecture(Target(phase.value), phase, (layer,), 81)
        shots = 4000
        samples = (rng.random((shots, 81)) < p).astype(np.uint8)
        density = layer_density(decode_layers(samples, arch)[1], arch, 1, shots, bulk_positions(arch, 1))
        expected = bernstein_polynomial(bernstein_profile(derive_table(phase, layer)), p)
        stderr = density.std(ddof=1) / np.sqrt(shots)
        assert abs(density.mean() - expected) < 4 * stderr


class TestMonteCarlo:
    def test_zero_noise_is_below(self):
        result = classify_probe('ZXZ', 0.0, 243, 100, 1)
        assert result.below

    def test_needs_four_layers(self):
        with pytest.raises(InvalidInputError):
            pair_trend('ZXZ', 0.05, 27, 100, 1, arch=Architecture.build('ZXZ', 'alt-xz', 3, 27))

    def test_bulk_positions_stay_inside_chain(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 4, 1215)
        # 窗口半径 4, 7, 4, 7 叠加为 4 + 21 + 36 + 189
        assert arch.interior_positions(4, (4, 7, 4, 7)) == bulk_positions(arch, 4)
        assert bulk_positions(arch, 4) == [284 + 81 * k for k in range(9)]
        assert min(bulk_positions(arch, 2)) > 25

    def test_short_chain_has_no_bulk(self):
        with pytest.raises(InvalidInputError):
            pair_trend('ZXZ', 0.05, 243, 100, 1)

    @pytest.mark.slow
    def test_pair_trend_sign(self):
        low, low_err = pair_trend('ZXZ', 0.02, 729, 4096, 7)
        high, high_err = pair_trend('ZXZ', 0.15, 729, 4096, 7)
        assert low + 3 * low_err < 0
        assert high - 3 * high_err > 0

    @pytest.mark.slow
    def test_bracket_must_contain_threshold(self):
        with pytest.raises(InvalidInputError):
            mc_threshold('ZXZ', 729, 2048, 7, bracket=(0.15, 0.2))


@pytest.fixture(scope='module')
def zxz_mc_threshold():
    return mc_threshold('ZXZ', 1215, 10 ** 5, 20220101, tol=0.01)


@pytest.mark.slow
class TestMonteCarloThreshold:
    def test_zxz(self, zxz_mc_threshold):
        assert abs(zxz_mc_threshold - 0.054) <= 0.01

    def test_zxz_agrees_with_analytic(self, zxz_mc_threshold):
        assert abs(zxz_mc_threshold - analytic_threshold()) <= 0.01

    def test_zxxxz(self):
        assert abs(mc_threshold('ZXXXZ', 1215, 10 ** 5, 20220101, tol=0.004) - 0.018) <= 0.005


@pytest.mark.slow
class TestRuntime:
    def test_analytic_threshold(self):
        started = time.perf_counter()
        analytic_threshold()
        assert time.perf_counter() - started < 1.0

    def test_sampling_and_decoding(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 5, 1215)
        flip_matrices('ZXZ', 1215)
        architecture_tables(arch)

        started = time.perf_counter()
        samples = sample_syndromes_cluster('ZXZ', ChannelSpec(pZ=0.05), 1215, 10 ** 4, 3)
        assert time.perf_counter() - started < 1.0

        started = time.perf_counter()
        decode(samples, arch)
        assert time.perf_counter() - started < 5.0

    def test_single_classification_at_full_length(self):
        flip_matrices('ZXZ', 1215)
        started = time.perf_counter()
        result = classify_probe('ZXZ', 0.02, 1215, 10 ** 5, 3)
        assert result.below
        assert time.perf_counter() - started < 60.0
