"""
经典译码表、按位打包译码、翻转集合与快速综合征采样的测试
"""

import itertools

import numpy as np
import pytest

from qcnnlab.core.circuits import apply_gates, cluster_state, disentangler, x_basis_probabilities
from qcnnlab.core.decoder import (
    DecoderTable, derive_table, architecture_tables, mobius_transform, pack_bits, unpack_bits,
    decode, decode_layer, decode_layers, layer_density, qcnn_output, output_values, exact_output, flip_set,
    flip_matrices, sample_syndromes_cluster, sample_noisy_x_basis, noisy_x_distribution
)
from qcnnlab.core.threshold import bernstein_profile
from qcnnlab.errors import InvalidInputError, CircuitConditionError
from qcnnlab.models.architecture import Architecture, LayerKind
from qcnnlab.models.channel import ChannelSpec, LETTERS
from qcnnlab.models.pauli import PauliString
from qcnnlab.models.state import StateVector


def _logic_circuit_alt_xz(x):
    """按真值表逐格点查表、再做显式多数表决的两层译码，不经过打包与代数范式"""
    shots, n = x.shape
    center = (n + 1) // 2

    def bit(bits, site):
        return bits[:, site - 1].astype(np.int64) if 1 <= site <= n else np.zeros(shots, dtype=np.int64)

    x_table = derive_table('ZXZ', LayerKind.XCORR)
    first = np.zeros((shots, n), dtype=np.int64)
    for p in range(1, n + 1):
        if (p - center) % 3 == 0:
            index = np.zeros(shots, dtype=np.int64)
            for o in x_table.offsets:
                index = 2 * index + bit(x, p + o)
            first[:, p - 1] = x_table.array[index]

    outputs = []
    for p in range(1, n + 1):
        if (p - center) % 9 == 0:
            votes = bit(first, p - 21) + bit(first, p) + bit(first, p + 21)
            outputs.append((votes >= 2).astype(np.uint8))
    return np.stack(outputs, axis=1)


class TestTables:
    def test_majority_vote(self):
        table = derive_table('ZXZ', LayerKind.ZCORR)
        assert table.offsets == (-7, 0, 7)
        assert bernstein_profile(table).tolist() == [0, 0, 3, 1]
        assert set(table.monomials) == {(0, 1), (0, 2), (1, 2)}

    @pytest.mark.parametrize('phase, layer, offsets', [
        ('ZXZ', LayerKind.XCORR, (-4, -2, 0, 2, 4)),
        ('ZXXXZ', LayerKind.XCORR, (-8, -4, 0, 4, 8)),
        ('ZXXXZ', LayerKind.CCORR, (-4, -2, 0, 2, 4)),
    ])
    def test_x_correction_profile(self, phase, layer, offsets):
        table = derive_table(phase, layer)
        assert table.offsets == offsets
        assert bernstein_profile(table).tolist() == [0, 3, 4, 6, 2, 1]

    def test_table_independent_of_layer_index(self):
        assert derive_table('ZXZ', LayerKind.XCORR, 1) == derive_table('ZXZ', LayerKind.XCORR, 3)

    def test_text_round_trip(self):
        table = derive_table('ZXZ', LayerKind.ZCORR)
        assert table.to_text() == "layer Zcorr\noffsets -7 0 7\nbits e8\n"
        assert DecoderTable.from_text(table.to_text()) == table
        x_table = derive_table('ZXZ', LayerKind.XCORR)
        assert DecoderTable.from_text(x_table.to_text()) == x_table

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            DecoderTable(LayerKind.ZCORR, (0, 1), (0, 1, 1))
        with pytest.raises(CircuitConditionError):
            DecoderTable(LayerKind.ZCORR, (0,), (1, 0))
        with pytest.raises(InvalidInputError):
            DecoderTable.from_text("layer Zcorr\n")

    def test_mobius_is_involution(self, rng):
        bits = rng.integers(0, 2, size=32)
        assert np.array_equal(mobius_transform(mobius_transform(bits)), bits)

    def test_lookup_matches_monomials(self):
        table = derive_table('ZXZ', LayerKind.XCORR)
        for x in itertools.product((0, 1), repeat=5):
            value = 0
            for monomial in table.monomials:
                value ^= int(all(x[i] for i in monomial))
            assert table.lookup(x) == value


class TestPacking:
    def test_round_trip(self, rng):
        samples = rng.integers(0, 2, size=(130, 11)).astype(np.uint8)
        packed = pack_bits(samples)
        assert packed.shape == (12, 3)
        assert not packed[0].any()
        assert np.array_equal(unpack_bits(packed, 130), samples)
        assert np.array_equal(unpack_bits(packed, 130, [3, 7]), samples[:, [2, 6]])


class TestDecode:
    def test_first_layer_matches_table(self, rng):
        arch = Architecture.build('ZXZ', 'x-only', 1, 15)
        table = derive_table('ZXZ', LayerKind.XCORR)
        samples = rng.integers(0, 2, size=(200, 15)).astype(np.uint8)
        out = decode(samples, arch)
        for row, bits in zip(samples, out):
            padded = np.concatenate([[0], row])
            expected = []
            for p in arch.output_positions():
                window = [padded[p + o] if 1 <= p + o <= 15 else 0 for o in table.offsets]
                expected.append(table.lookup(window))
            assert bits.tolist() == expected

    def test_single_string(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 2, 27)
        x = np.zeros(27, dtype=np.uint8)
        assert decode(x, arch).tolist() == [0, 0, 0]

    def test_intermediate_layers(self, rng):
        arch = Architecture.build('ZXZ', 'alt-xz', 2, 81)
        samples = rng.integers(0, 2, size=(64, 81)).astype(np.uint8)
        layers = decode_layers(samples, arch)
        assert len(layers) == 3
        assert np.array_equal(unpack_bits(layers[0], 64), samples)
        # 只有保留位置上有值
        kept = set(arch.positions(1))
        other = [s for s in range(1, 82) if s not in kept]
        assert not unpack_bits(layers[1], 64, other).any()
        density = layer_density(layers[2], arch, 2, 64)
        assert density.shape == (64,)

    def test_noiseless_output(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 2, 81)
        y, _ = qcnn_output(np.zeros((10, 81), dtype=np.uint8), arch)
        assert y == 1.0

    def test_output_position_subset(self):
        arch = Architecture.build('ZXZ', 'x-only', 1, 15)
        samples = np.zeros((1, 15), dtype=np.uint8)
        samples[0, 7] = 1
        assert output_values(samples, arch, [8]).tolist() == [-1.0]
        with pytest.raises(InvalidInputError):
            output_values(samples, arch, [7])

    @staticmethod
    def _syndrome(kind, letter, j, n):
        x = np.zeros(n, dtype=np.uint8)
        x[[k - 1 for k in flip_set(kind, letter, j, n)]] = 1
        return x

    def test_bulk_x_error_is_corrected(self):
        arch = Architecture.build('ZXZ', 'x-only', 2, 45)
        for j in range(10, 37):
            assert not decode(self._syndrome('ZXZ', 'X', j, 45), arch).any()

    def test_bulk_z_error_sets_one_output(self):
        arch = Architecture.build('ZXZ', 'x-only', 2, 45)
        for j in range(10, 37):
            assert decode(self._syndrome('ZXZ', 'Z', j, 45), arch).sum() == 1

    def test_isolated_flip_removed_by_majority(self):
        table = derive_table('ZXZ', LayerKind.ZCORR)
        x = np.zeros((1, 27), dtype=np.uint8)
        x[0, 13] = 1
        out = decode_layer(pack_bits(x), table, 1, 14, 27)
        assert not unpack_bits(out, 1).any()

    @pytest.mark.parametrize('phase, layer', [('ZXZ', LayerKind.XCORR), ('ZXZ', LayerKind.ZCORR),
                                              ('ZXXXZ', LayerKind.CCORR)])
    def test_translation_covariance(self, phase, layer, rng):
        n, center, shift = 81, 41, 3
        table = derive_table(phase, layer)
        radius = max(abs(o) for o in table.offsets)
        x = rng.integers(0, 2, size=(64, n)).astype(np.uint8)
        shifted = np.zeros_like(x)
        shifted[:, shift:] = x[:, :-shift]
        out = unpack_bits(decode_layer(pack_bits(x), table, 1, center, n), 64)
        moved = unpack_bits(decode_layer(pack_bits(shifted), table, 1, center, n), 64)
        bulk = [p for p in range(radius + 1, n - radius - shift + 1) if (p - center) % 3 == 0]
        assert bulk
        for p in bulk:
            assert np.array_equal(moved[:, p + shift - 1], out[:, p - 1])

    def test_matches_logic_circuit(self, rng):
        n = 45
        arch = Architecture.build('ZXZ', 'alt-xz', 2, n)
        x = rng.integers(0, 2, size=(10 ** 4, n)).astype(np.uint8)
        assert np.array_equal(decode(x, arch), _logic_circuit_alt_xz(x))

    def test_rejects_bad_samples(self):
        arch = Architecture.build('ZXZ', 'x-only', 1, 15)
        with pytest.raises(InvalidInputError):
            decode(np.zeros((2, 14), dtype=np.uint8), arch)
        with pytest.raises(InvalidInputError):
            decode(np.full(15, 2), arch)


class TestSyndromes:
    def test_zxz_flip_sets(self):
        assert flip_set('ZXZ', 'Z', 5, 9) == {5}
        assert flip_set('ZXZ', 'X', 5, 9) == {4, 6}
        assert flip_set('ZXZ', 'Y', 5, 9) == {4, 5, 6}
        assert flip_set('ZXZ', 'X', 1, 9) == {2}

    @pytest.mark.parametrize('kind', ['ZXZ', 'ZXXXZ'])
    def test_flip_sets_match_statevector(self, kind):
        n = 7
        state = cluster_state(kind, n)
        unitary = disentangler(kind, n)
        for j in range(1, n + 1):
            for letter in LETTERS:
                noisy = state.apply_pauli(PauliString.single(j, letter))
                probs = x_basis_probabilities(apply_gates(unitary, noisy))
                outcome = int(np.argmax(probs))
                assert probs[outcome] == pytest.approx(1)
                expected = sum(1 << (n - k) for k in flip_set(kind, letter, j, n))
                assert outcome == expected

    @pytest.mark.parametrize('kind', ['ZXZ', 'ZXXXZ'])
    def test_noisy_distribution_matches_enumeration(self, kind):
        n = 5
        ch = ChannelSpec(0.1, 0.05, 0.15)
        weights = dict(zip(LETTERS, (ch.pX, ch.pY, ch.pZ)))
        weights['I'] = ch.p_identity
        state = cluster_state(kind, n)
        unitary = disentangler(kind, n)
        expected = np.zeros(1 << n)
        for letters in itertools.product('IXYZ', repeat=n):
            weight = np.prod([weights[l] for l in letters])
            noisy = state.apply_pauli(PauliString.from_dict(dict(enumerate(letters, start=1))))
            expected += weight * x_basis_probabilities(apply_gates(unitary, noisy))
        clean = x_basis_probabilities(StateVector.plus_state(n))
        assert np.allclose(noisy_x_distribution(clean, kind, ch), expected, atol=1e-12)

    def test_blocks_are_independent(self):
        ch = ChannelSpec(pZ=0.1)
        full = sample_syndromes_cluster('ZXZ', ch, 27, 3000, 5)
        parts = [sample_syndromes_cluster('ZXZ', ch, 27, size, 5, block=b)
                 for b, size in enumerate((1024, 1024, 952))]
        assert np.array_equal(full, np.concatenate(parts))

    def test_zero_noise_is_clean(self):
        assert not sample_syndromes_cluster('ZXXXZ', ChannelSpec(), 27, 100, 1).any()

    def test_flip_matrix_shapes(self):
        flips = flip_matrices('ZXZ', 9)
        codes = np.zeros((3, 9), dtype=np.int8)
        codes[0, 4] = 3
        codes[1, 4] = 1
        syndromes = flips.syndromes(codes)
        assert np.flatnonzero(syndromes[0]).tolist() == [4]
        assert np.flatnonzero(syndromes[1]).tolist() == [3, 5]
        assert not syndromes[2].any()

    def test_sampled_output_matches_exact(self):
        n = 9
        arch = Architecture.build('ZXZ', 'alt-xz', 1, n)
        ch = ChannelSpec.depolarizing(0.05)
        clean = x_basis_probabilities(StateVector.plus_state(n))
        exact = exact_output(noisy_x_distribution(clean, 'ZXZ', ch), arch)
        y, stderr = qcnn_output(sample_noisy_x_basis(clean, 'ZXZ', ch, 20000, 3), arch)
        assert abs(y - exact) < 4 * stderr

    def test_exact_output_noiseless(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 2, 9)
        clean = x_basis_probabilities(StateVector.plus_state(9))
        assert exact_output(clean, arch) == pytest.approx(1)
        with pytest.raises(InvalidInputError):
            exact_output(clean[:256], arch)

    def test_architecture_tables(self):
        arch = Architecture.build('ZXXXZ', 'alt-cz', 2, 81)
        layers = [t.layer for t in architecture_tables(arch)]
        assert layers == [LayerKind.CCORR, LayerKind.ZCORR]
