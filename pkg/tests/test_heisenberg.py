"""
海森堡反向传播、递推关系、追踪乘积族与复杂度下界的测试
"""

from fractions import Fraction

import numpy as np
import pytest

from qcnnlab.core.circuits import apply_gates, disentangler, index_to_bits, x_basis_probabilities
from qcnnlab.core.decoder import decode, exact_output, derive_table
from qcnnlab.core.heisenberg import (
    XDiagonalOperator, Truncation, backprop, layer_expansion, conjugate_operator, conjugate_by_cz_chain,
    operator_expectation, sop_factorization, sop_text, count_terms, tracked_family, closed_form_length,
    closed_form_attachments, tracked_product_structure, complexity_bounds, greedy_basis_cover,
    verify_recursion
)
from qcnnlab.core.groundstate import ground_state
from qcnnlab.errors import InvalidInputError, TermOverflowError
from qcnnlab.models.hamiltonian import HamiltonianParams
from qcnnlab.models.architecture import Architecture, LayerKind
from qcnnlab.models.pauli import PauliString, SopSpec, sop_pauli
from qcnnlab.models.state import StateVector


def all_bits(n):
    return index_to_bits(np.arange(1 << n), n)


class TestXDiagonalOperator:
    def test_algebra(self):
        a = XDiagonalOperator.literal([1, 2], Fraction(1, 2))
        b = XDiagonalOperator.literal([2, 3], Fraction(1, 2))
        product = a * b
        assert product.terms == {frozenset([1, 3]): Fraction(1, 4)}
        assert len(a + b) == 2
        assert len(a + a * -1) == 0

    def test_evaluate(self):
        op = XDiagonalOperator({frozenset([1]): 2, frozenset(): 1})
        assert op.evaluate([[0, 1], [1, 0]]).tolist() == [3.0, -1.0]

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidInputError):
            XDiagonalOperator.literal([0], n=5)

    def test_truncation(self):
        op = XDiagonalOperator({frozenset([1]): Fraction(3, 4), frozenset([2]): Fraction(1, 8),
                                frozenset([3]): Fraction(-1, 2)})
        assert len(op.truncated(epsilon=0.2)) == 2
        assert list(op.truncated(max_terms=1).terms) == [frozenset([1])]
        assert not op.truncated().is_exact

    def test_layer_expansion_is_boolean_function(self):
        table = derive_table('ZXZ', LayerKind.XCORR)
        op = layer_expansion(table, 1, 6, n=11)
        assert op.parseval() == 1
        bits = all_bits(11)
        expected = 1 - 2 * np.array([table.lookup(row[[1, 3, 5, 7, 9]]) for row in bits])
        assert np.allclose(op.evaluate(bits), expected)


class TestBackprop:
    @pytest.mark.parametrize('style, depth, position', [
        ('x-only', 1, 5), ('x-only', 1, 2), ('alt-xz', 2, 5), ('alt-xz', 1, 8),
    ])
    def test_matches_decoder(self, style, depth, position):
        arch = Architecture.build('ZXZ', style, depth, 9)
        op = backprop(arch, position=position)
        bits = all_bits(9)
        column = arch.output_positions().index(position)
        assert np.allclose(op.evaluate(bits), 1 - 2 * decode(bits, arch)[:, column])
        assert op.is_exact
        assert op.parseval() == 1

    def test_expectation_matches_exact_output(self, rng):
        arch = Architecture.build('ZXZ', 'alt-xz', 1, 9)
        state = StateVector.random(9, rng)
        probabilities = x_basis_probabilities(apply_gates(disentangler('ZXZ', 9), state))
        op = backprop(arch)
        terms = conjugate_by_cz_chain(op, 9)
        value = operator_expectation(terms, state)
        assert value == pytest.approx(exact_output(probabilities, arch, positions=[arch.center]), abs=1e-10)

    @pytest.mark.slow
    @pytest.mark.parametrize('style, depth', [('alt-xz', 1), ('x-only', 2)])
    @pytest.mark.parametrize('h1', [0.02, 1.0, 2.0], ids=['deep-zxz', 'near-boundary', 'paramagnet'])
    def test_pipeline_equivalence_on_ground_state(self, style, depth, h1):
        n = 15
        state = ground_state(HamiltonianParams(J1=1.0, h1=h1, N=n), seed=3).state
        arch = Architecture.build('ZXZ', style, depth, n)
        probabilities = x_basis_probabilities(apply_gates(disentangler('ZXZ', n), state))
        value = operator_expectation(conjugate_by_cz_chain(backprop(arch), n), state)
        assert value == pytest.approx(exact_output(probabilities, arch, positions=[arch.center]), abs=1e-8)

    def test_deep_exact_requires_opt_in(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 3, 27)
        with pytest.raises(InvalidInputError):
            backprop(arch)
        truncated = backprop(arch, truncation=Truncation(max_terms=50))
        assert len(truncated) <= 50

    def test_term_cap(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 2, 81)
        with pytest.raises(TermOverflowError) as info:
            backprop(arch, term_cap=10)
        assert info.value.depth_reached == 1

    def test_position_and_levels_validation(self):
        arch = Architecture.build('ZXZ', 'alt-xz', 1, 15)
        with pytest.raises(InvalidInputError):
            backprop(arch, position=7)
        with pytest.raises(InvalidInputError):
            backprop(arch, levels=2)
        assert backprop(arch, levels=0) == XDiagonalOperator.literal([8], n=15)


class TestConjugation:
    def test_x_string_becomes_sop(self):
        terms = conjugate_operator(PauliString.parse("+X3 X5 X7"), 'ZXZ', 11)
        assert terms == [(1, sop_pauli(SopSpec('ZXZ', 2, 8)))]

    def test_rejects_non_x_strings(self):
        with pytest.raises(InvalidInputError):
            conjugate_operator(PauliString.parse("+Z3"), 'ZXZ', 11)

    def test_sop_factorization(self):
        assert sop_factorization({3, 5, 7, 12}) == [(2, 8), (11, 13)]
        text = sop_text(XDiagonalOperator.literal([3, 5], Fraction(1, 2)))
        assert text == "1/2\tS(2,6)\n"


class TestCounting:
    @pytest.mark.parametrize('levels, expected', [(0, 1), (1, 16), (2, 2500)])
    def test_unmerged_counts(self, levels, expected):
        assert count_terms(3, levels) == expected

    def test_merged_counts_do_not_exceed_products(self):
        assert count_terms(2, 1, merged=True) <= count_terms(2, 1)
        assert count_terms(2, 1, merged=True) == 4
        assert count_terms(3, 1, merged=True) == 16


class TestTrackedFamily:
    def test_lengths(self):
        assert tracked_family(3).L == 11
        assert tracked_family(5).L == 65

    @pytest.mark.parametrize('d', [3, 5, 7, 9])
    def test_closed_forms(self, d):
        for record in tracked_family(d).layers:
            assert record.l == closed_form_length(d, record.f)
            assert (record.left, record.right) == closed_form_attachments(d, record.f)

    @pytest.mark.parametrize('d', [2, 4, 1])
    def test_rejects_even_depth(self, d):
        with pytest.raises(InvalidInputError):
            tracked_family(d)

    @pytest.mark.parametrize('l', [0, 1, 2])
    def test_product_structure(self, l):
        expansion, factored = tracked_product_structure(l)
        assert expansion == factored


class TestBounds:
    def test_depth_five(self):
        bounds = complexity_bounds(5)
        assert bounds['product_bound'] == 2 ** 27
        assert bounds['basis_bound_formula'] == 27
        assert bounds['l2'] == 5
        assert bounds['basis_bound_l2'] == 59049

    def test_depth_three(self):
        bounds = complexity_bounds(3)
        assert bounds['product_bound'] == 8
        assert bounds['basis_bound_formula'] is None
        assert bounds['basis_bound_l2'] == 81

    def test_greedy_cover(self):
        terms = [PauliString.parse(t) for t in ("+X1 Z2", "+Z1 X2", "+Y1 Y2")]
        assert greedy_basis_cover(terms) == 3
        assert greedy_basis_cover([PauliString.parse("+X1"), PauliString.parse("+X1 Z2")]) == 1


class TestRecursions:
    @pytest.mark.parametrize('which', ['gx', 'gz', 'identity'])
    def test_first_layer(self, which):
        assert verify_recursion(which) < 1e-10

    def test_longer_string(self):
        assert verify_recursion('gz', f=1, length=2) < 1e-10

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            verify_recursion('gy')
