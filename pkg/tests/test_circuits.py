"""
门级线路、X 基测量、Pauli 传播与置换提取的测试
"""

import numpy as np
import pytest

from qcnnlab.config import config
from qcnnlab.core.circuits import (
    Gate, GateList, disentangler, cluster_state, qec_unitary, layer_gates, apply_gates,
    x_basis_probabilities, sample_x_basis, index_to_bits, bits_to_index, conjugate_pauli,
    window_unitary, pauli_matrix, extract_permutation, walsh_hadamard
)
from qcnnlab.errors import InvalidInputError, CircuitConditionError
from qcnnlab.models.architecture import LayerKind
from qcnnlab.models.pauli import PauliString, stabilizer
from qcnnlab.models.state import StateVector


class TestGateList:
    def test_text_round_trip(self):
        text = "CZ 1 2\nCyY 2 3\nZ 3\n"
        gates = GateList.from_text(text + "# 注释\n\n")
        assert len(gates) == 3
        assert gates.to_text() == text

    @pytest.mark.parametrize('text', ["FOO 1", "CZ 1", "CZ 2 2", "CZ a b"])
    def test_rejects(self, text):
        with pytest.raises(InvalidInputError):
            GateList.from_text(text)

    def test_restricted_drops_boundary_gates(self):
        gates = qec_unitary('ZXZ', LayerKind.ZCORR, 1, 9)
        assert len(gates.restricted(16)) == 3
        assert gates.restricted(15).gates == (Gate('CxZ', (9, 2)),)
        assert len(qec_unitary('ZXZ', LayerKind.ZCORR, 1, 5).restricted(11)) == 0


class TestDisentangler:
    @pytest.mark.parametrize('kind', ['ZXZ', 'ZXXXZ'])
    def test_maps_cluster_to_plus(self, kind):
        state = cluster_state(kind, 7)
        out = apply_gates(disentangler(kind, 7), state)
        assert np.allclose(out.amplitudes, StateVector.plus_state(7).amplitudes, atol=1e-12)

    def test_cluster_stabilizers(self):
        state = cluster_state('ZXXXZ', 9)
        for j in range(3, 8):
            assert state.expectation(stabilizer('ZXXXZ', j, 9)).real == pytest.approx(1)

    def test_window(self):
        assert disentangler('ZXZ', 20, window=(5, 8)).light_cone() == [5, 6, 7, 8]


class TestXBasis:
    def test_plus_state_measures_zero(self):
        probs = x_basis_probabilities(StateVector.plus_state(4))
        assert probs[0] == pytest.approx(1)

    def test_product_state(self):
        bits = [1, 0, 1, 1, 0]
        probs = x_basis_probabilities(StateVector.product_x(bits))
        assert int(np.argmax(probs)) == int('10110', 2)
        assert probs.max() == pytest.approx(1)

    def test_sampling(self, rng):
        samples = sample_x_basis(StateVector.product_x([0, 1, 1]), 20, rng)
        assert samples.shape == (20, 3)
        assert np.all(samples == [0, 1, 1])

    def test_index_bits_inverse(self):
        indices = np.arange(64)
        assert np.array_equal(bits_to_index(index_to_bits(indices, 6)), indices)
        assert index_to_bits([1], 3).tolist() == [[0, 0, 1]]

    def test_walsh_hadamard_involution(self, rng):
        values = rng.normal(size=32)
        assert np.allclose(walsh_hadamard(walsh_hadamard(values)) / 32, values)


class TestConjugation:
    def test_dense_window_limit_follows_config(self):
        gates = disentangler('ZXZ', 5)
        assert window_unitary(gates, list(range(1, 6))).shape == (32, 32)
        old = config.get('max_window_bits')
        config.set('max_window_bits', 4)
        try:
            with pytest.raises(InvalidInputError):
                window_unitary(gates, list(range(1, 6)))
        finally:
            config.set('max_window_bits', old)

    @pytest.mark.parametrize('kind', ['ZXZ', 'ZXXXZ'])
    def test_matches_dense(self, kind, rng):
        gates = disentangler(kind, 6)
        window = list(range(1, 7))
        u = window_unitary(gates, window)
        for _ in range(20):
            mapping = {s: 'IXYZ'[rng.integers(4)] for s in window}
            p = PauliString.from_dict(mapping)
            forward = conjugate_pauli(gates, p)
            backward = conjugate_pauli(gates, p, inverse=True)
            dense = pauli_matrix(p, window)
            assert np.allclose(pauli_matrix(forward, window), u @ dense @ u.conj().T, atol=1e-12)
            assert np.allclose(pauli_matrix(backward, window), u.conj().T @ dense @ u, atol=1e-12)

    def test_cz_chain_image(self):
        image = conjugate_pauli(disentangler('ZXZ', 5), PauliString.single(3, 'X'), inverse=True)
        assert image == stabilizer('ZXZ', 3, 5)

    def test_zxxxz_image(self):
        image = conjugate_pauli(disentangler('ZXXXZ', 9), PauliString.single(5, 'X'), inverse=True)
        assert image == stabilizer('ZXXXZ', 5, 9)

    def test_non_clifford_rejected(self):
        gates = GateList([Gate('CxCxZ', (1, 2, 3))])
        with pytest.raises(InvalidInputError):
            conjugate_pauli(gates, PauliString.single(3, 'X'))


class TestPermutation:
    @pytest.mark.parametrize('phase, layer', [
        ('ZXZ', LayerKind.XCORR), ('ZXZ', LayerKind.ZCORR),
        ('ZXXXZ', LayerKind.XCORR), ('ZXXXZ', LayerKind.CCORR),
    ])
    def test_qec_unitaries_permute_x_basis(self, phase, layer):
        gates = qec_unitary(phase, layer, 1, 9)
        action = extract_permutation(gates, gates.light_cone())
        assert sorted(action.table.tolist()) == list(range(2 ** action.width))
        assert action.table[0] == 0

    def test_majority_vote_table(self):
        gates = qec_unitary('ZXZ', LayerKind.ZCORR, 1, 9)
        action = extract_permutation(gates, [2, 9, 16])
        for x in range(8):
            a, b, c = (x >> 2) & 1, (x >> 1) & 1, x & 1
            assert action.bit(x, 1) == int(a + b + c >= 2)

    def test_offsets_scale_with_layer(self):
        assert qec_unitary('ZXZ', LayerKind.XCORR, 2, 20).light_cone() == [8, 14, 20, 26, 32]

    def test_hadamard_is_not_a_permutation(self):
        with pytest.raises(CircuitConditionError):
            extract_permutation(GateList([Gate('H', (1,))]), [1])

    def test_layer_gates_cover_kept_positions(self):
        gates = layer_gates('ZXZ', LayerKind.XCORR, 1, 15)
        targets = sorted({g.sites[-1] for g in gates})
        assert targets == [2, 5, 8, 11, 14]
