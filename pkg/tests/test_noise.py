"""
Pauli 信道采样、轨迹作用与弦序参量衰减的测试
"""

import numpy as np
import pytest

from qcnnlab.core.circuits import cluster_state
from qcnnlab.core.groundstate import expectation
from qcnnlab.core.noise import (
    sample_error_config, sample_error_codes, apply_error_config, sop_attenuation, channel_factor,
    noisy_sop_expectation, cluster_expectation, estimate_sop
)
from qcnnlab.errors import InvalidInputError, UnsupportedChannelError
from qcnnlab.models.channel import ChannelSpec, ErrorConfig
from qcnnlab.models.pauli import PauliString, SopSpec, sop_pauli, stabilizer
from qcnnlab.models.state import StateVector


class TestSampling:
    def test_zero_channel_is_empty(self):
        assert len(sample_error_config(ChannelSpec(), 9, 7)) == 0

    def test_certain_x(self):
        cfg = sample_error_config(ChannelSpec(pX=1.0), 5, 7)
        assert cfg.events == tuple((s, 'X') for s in range(1, 6))

    def test_deterministic_given_seed(self):
        ch = ChannelSpec(0.1, 0.05, 0.2)
        assert sample_error_config(ch, 30, 99) == sample_error_config(ch, 30, 99)
        assert np.array_equal(sample_error_codes(ch, 30, 3000, 5), sample_error_codes(ch, 30, 3000, 5))

    def test_marginals(self):
        ch = ChannelSpec(0.1, 0.2, 0.3)
        codes = sample_error_codes(ch, 50, 4000, 11)
        total = codes.size
        for code, p in enumerate(ch.probabilities):
            freq = np.count_nonzero(codes == code) / total
            assert abs(freq - p) < 4 * np.sqrt(p * (1 - p) / total) + 1e-12

    def test_mean_event_count(self):
        ch = ChannelSpec(0.1, 0.1, 0.1)
        n, shots = 1215, 2000
        events = np.count_nonzero(sample_error_codes(ch, n, shots, 3), axis=1)
        sigma = np.sqrt(n * 0.3 * 0.7 / shots)
        assert abs(events.mean() - 364.5) < 4 * sigma


class TestApply:
    def test_z_flips_x_expectation(self):
        state = StateVector.plus_state(5)
        noisy = apply_error_config(ErrorConfig(((3, 'Z'),), 5), state)
        assert expectation(PauliString.single(3, 'X'), noisy) == pytest.approx(-1)
        assert noisy.norm() == pytest.approx(1)

    def test_x_on_cluster_flips_neighbours(self):
        state = cluster_state('ZXZ', 7)
        noisy = apply_error_config(ErrorConfig(((3, 'X'),), 7), state)
        assert expectation(stabilizer('ZXZ', 2, 7), noisy) == pytest.approx(-1)
        assert expectation(stabilizer('ZXZ', 4, 7), noisy) == pytest.approx(-1)
        assert expectation(stabilizer('ZXZ', 3, 7), noisy) == pytest.approx(1)

    def test_empty_config_keeps_state(self):
        state = cluster_state('ZXZ', 5)
        out = apply_error_config(ErrorConfig((), 5), state)
        assert np.array_equal(out.amplitudes, state.amplitudes)

    def test_y_equals_x_then_z(self):
        state = cluster_state('ZXXXZ', 7)
        y = apply_error_config(ErrorConfig(((4, 'Y'),), 7), state)
        xz = apply_error_config(ErrorConfig(((4, 'Z'),), 7), apply_error_config(ErrorConfig(((4, 'X'),), 7), state))
        assert abs(abs(y.overlap(xz)) - 1) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            apply_error_config(ErrorConfig(((1, 'X'),), 3), StateVector.plus_state(5))


class TestAttenuation:
    def test_pure_x(self):
        assert sop_attenuation(ChannelSpec(pX=0.5), SopSpec('ZXZ', 1, 9)) == pytest.approx(0)
        assert sop_attenuation(ChannelSpec(pX=0.2), SopSpec('ZXZ', 3, 11)) == pytest.approx(0.36)

    def test_pure_z(self):
        assert sop_attenuation(ChannelSpec(pZ=0.1), SopSpec('ZXZ', 1, 9)) == pytest.approx(0.4096)

    def test_mixed_channel_unsupported(self):
        with pytest.raises(UnsupportedChannelError):
            sop_attenuation(ChannelSpec(0.1, 0.0, 0.1), SopSpec('ZXZ', 1, 9))

    def test_channel_factor_general(self):
        ch = ChannelSpec(0.1, 0.05, 0.02)
        # Z 与 X/Y 误差反对易，X 与 Y/Z 反对易
        expected = (1 - 2 * 0.15) ** 2 * (1 - 2 * 0.07)
        assert channel_factor(ch, PauliString.parse("+Z1 X2 Z3")) == pytest.approx(expected)

    def test_noisy_sop_on_state(self):
        state = cluster_state('ZXZ', 9)
        value = noisy_sop_expectation(state, SopSpec('ZXZ', 1, 9), ChannelSpec(pZ=0.1))
        assert value == pytest.approx(0.4096)

    def test_cluster_expectation(self):
        assert cluster_expectation('ZXZ', sop_pauli(SopSpec('ZXZ', 3, 13)), 15) == 1
        assert cluster_expectation('ZXZ', PauliString.single(4, 'Z'), 15) == 0
        t = sop_pauli(SopSpec('ZXXXZ', 2, 8))
        assert cluster_expectation("ZXXXZ", t, 15) == pytest.approx(expectation(t, cluster_state("ZXXXZ", 11)))

    @pytest.mark.parametrize('pz', [0.05, 0.1, 0.2])
    @pytest.mark.parametrize('length', [5, 9, 13])
    def test_monte_carlo_matches_formula(self, pz, length):
        spec = SopSpec('ZXZ', 10, 9 + length)
        ch = ChannelSpec(pZ=pz)
        mean, stderr = estimate_sop(ch, spec, 41, 20000, 17)
        assert abs(mean - sop_attenuation(ch, spec)) < 4 * stderr + 1e-12
