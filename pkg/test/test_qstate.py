"""
Tests for the qstate (sparse qudit state) module.
"""
import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from mdiqkd import qstate
from mdiqkd.errors import UsageError, ValidationError
from mdiqkd.gf import FieldSpec
from mdiqkd.qstate import (
    Basis,
    BellLabel,
    LocalUnitary,
    StateVector,
    apply_alice_correction,
    apply_correction,
    basis_state,
    bell_basis,
    computational_basis,
    dump,
    fidelity,
    from_amplitudes,
    global_phase_between,
    inner_product,
    insert_qudit,
    make_phi,
    measure_in_basis,
    pack,
    project,
    tensor,
    uniform_superposition,
    unpack,
)


def label(spec, a, b):
    return BellLabel(spec.element(a), spec.element(b))


class TestPacking(unittest.TestCase):
    """
    Ensures labels pack with qudit 0 most significant.
    """

    def test_pack(self):
        """
        For dim 4 the label (1, 2) packs to 1 * 4 + 2.
        """
        self.assertEqual(6, pack((1, 2), 4))

    def test_unpack_inverts_pack(self):
        for values in [(0, 0, 0), (2, 1, 0), (2, 2, 2)]:
            self.assertEqual(values, unpack(pack(values, 3), 3, 3))


class TestStateVector(unittest.TestCase):
    """
    Ensures StateVector validates, prunes and converts.
    """

    def test_unnormalised_rejected(self):
        """
        A state claiming to be normalised must be.
        """
        with self.assertRaises(ValidationError):
            StateVector(2, 1, {0: 1.0, 1: 1.0})

    def test_unnormalised_allowed_when_flagged(self):
        state = StateVector(2, 1, {0: 1.0, 1: 1.0}, normalized=False)
        self.assertAlmostEqual(2.0, state.norm_squared())
        self.assertAlmostEqual(1.0, state.normalize().norm_squared())

    def test_bad_shape(self):
        """
        Dimension below 2 and labels out of range are usage errors.
        """
        with self.assertRaises(UsageError):
            StateVector(1, 1, {0: 1.0})
        with self.assertRaises(UsageError):
            StateVector(2, 1, {2: 1.0})
        with self.assertRaises(UsageError):
            basis_state(3, 0, 3)

    def test_pruning(self):
        """
        Amplitudes below PRUNE are not stored.
        """
        state = StateVector(2, 1, {0: 1.0, 1: 1e-14})
        self.assertEqual(1, state.nnz)
        self.assertEqual(0j, state.amplitude(1))

    def test_amplitudes_read_only(self):
        state = basis_state(2, 1)
        with self.assertRaises(TypeError):
            state.amplitudes[0] = 1.0

    def test_dense_round_trip(self):
        """
        from_dense and to_dense agree, and the qudit count is inferred.
        """
        vector = np.array([0, 0.6, 0, 0.8j, 0, 0, 0, 0, 0])
        state = StateVector.from_dense(3, vector)
        self.assertEqual(2, state.num_qudits)
        self.assertEqual(0.8j, state.amplitude(1, 0))
        self.assertTrue(np.allclose(vector, state.to_dense()))

    def test_dense_wrong_length(self):
        with self.assertRaises(UsageError):
            StateVector.from_dense(2, [1, 0, 0])

    def test_items_in_label_order(self):
        state = from_amplitudes(3, [0.6, 0, -0.8])
        self.assertEqual([((0,), 0.6), ((2,), -0.8)], list(state.items()))

    def test_scale(self):
        """
        Scaling by a phase keeps the state normalised.
        """
        state = uniform_superposition(4).scale(1j)
        self.assertTrue(state.normalized)
        self.assertAlmostEqual(0.5j, state.amplitude(3))

    def test_repr(self):
        self.assertEqual(
            "StateVector(dim=2, 1|0,1>)", repr(basis_state(2, 0, 1))
        )


class TestConstructors(unittest.TestCase):
    """
    Ensures the small state constructors work.
    """

    def test_basis_state(self):
        state = basis_state(4, 3, 1)
        self.assertEqual(1.0, state.amplitude(3, 1))
        self.assertEqual(1, state.nnz)

    def test_from_amplitudes_length(self):
        with self.assertRaises(UsageError):
            from_amplitudes(4, [1.0])

    def test_uniform_superposition(self):
        state = uniform_superposition(8)
        for value in range(8):
            self.assertAlmostEqual(1 / math.sqrt(8), state.amplitude(value).real)


class TestBellBasis(unittest.TestCase):
    """
    Ensures the generalised Bell states are built as defined.
    """

    def test_phi_00_over_gf2(self):
        """
        |Phi_00> over GF(2) is (|00> + |11>) / sqrt(2).
        """
        spec = FieldSpec(1)
        expected = StateVector.from_labels(
            2, {(0, 0): 1 / math.sqrt(2), (1, 1): 1 / math.sqrt(2)}
        )
        self.assertTrue(make_phi(label(spec, 0, 0)).allclose(expected))

    def test_phi_11_over_gf2(self):
        """
        |Phi_11> over GF(2) is (|01> - |10>) / sqrt(2).
        """
        spec = FieldSpec(1)
        expected = StateVector.from_labels(
            2, {(0, 1): 1 / math.sqrt(2), (1, 0): -1 / math.sqrt(2)}
        )
        self.assertTrue(make_phi(label(spec, 1, 1)).allclose(expected))

    def test_orthonormal(self):
        """
        The Gram matrix of all N^2 Bell states is the identity for N = 2, 4, 8.
        """
        for n in (1, 2, 3):
            basis = bell_basis(FieldSpec(n))
            matrix = np.array([v.to_dense() for v in basis])
            self.assertEqual(4**n, len(basis))
            self.assertTrue(
                np.allclose(matrix.conj() @ matrix.T, np.eye(4**n), atol=1e-9)
            )

    def test_index_order(self):
        """
        |Phi_ab> sits at position a * N + b.
        """
        spec = FieldSpec(2)
        basis = bell_basis(spec)
        ab = label(spec, 2, 3)
        self.assertEqual(11, ab.index)
        self.assertTrue(basis[ab.index].allclose(make_phi(ab)))
        self.assertEqual(ab, BellLabel.from_index(spec, 11))
        self.assertEqual((2, 3), ab.as_tuple())

    def test_mixed_field_label(self):
        with self.assertRaises(UsageError):
            BellLabel(FieldSpec(1).one(), FieldSpec(2).one())


class TestBasis(unittest.TestCase):
    """
    Ensures Basis validates orthonormality and completeness.
    """

    def test_incomplete(self):
        with self.assertRaises(ValidationError):
            Basis([basis_state(3, 0), basis_state(3, 1)])

    def test_not_orthogonal(self):
        with self.assertRaises(ValidationError):
            Basis([basis_state(2, 0), uniform_superposition(2)])

    def test_mixed_shapes(self):
        with self.assertRaises(UsageError):
            Basis([basis_state(2, 0), basis_state(3, 1)])

    def test_computational(self):
        basis = computational_basis(3, 2)
        self.assertEqual(9, len(basis))
        self.assertEqual(1.0, basis[5].amplitude(1, 2))


class TestTensor(unittest.TestCase):
    def test_tensor(self):
        """
        The second state's qudits follow the first's.
        """
        state = tensor(basis_state(4, 1), uniform_superposition(4))
        self.assertEqual(2, state.num_qudits)
        self.assertAlmostEqual(0.5, state.amplitude(1, 3).real)
        self.assertEqual(0j, state.amplitude(3, 1))

    def test_dim_mismatch(self):
        with self.assertRaises(UsageError):
            tensor(basis_state(2, 0), basis_state(4, 0))


class TestCorrections(unittest.TestCase):
    """
    Ensures the correction operators act as defined.
    """

    def test_bob_correction_on_basis_state(self):
        """
        |v> -> (-1)^Tr((a + v) b) |v + a>. In GF(4) with a = 1, b = 2 and
        v = 0 the phase is Tr(2) = 1.
        """
        spec = FieldSpec(2)
        result = apply_correction(basis_state(4, 0), 0, label(spec, 1, 2))
        self.assertEqual(-1.0, result.amplitude(1))

    def test_alice_correction_on_basis_state(self):
        """
        |v> -> (-1)^Tr(v b) |v + a>. With v = 0 there is no phase.
        """
        spec = FieldSpec(2)
        result = apply_alice_correction(basis_state(4, 0), 0, label(spec, 1, 2))
        self.assertEqual(1.0, result.amplitude(1))

    def test_bob_correction_undoes_phi(self):
        """
        Correcting the second qudit of |Phi_ab> gives |Phi_00> up to the sign
        (-1)^Tr(ab).
        """
        spec = FieldSpec(2)
        target = make_phi(label(spec, 0, 0))
        for index in range(16):
            ab = BellLabel.from_index(spec, index)
            corrected = apply_correction(make_phi(ab), 1, ab)
            self.assertAlmostEqual(1.0, fidelity(corrected, target))

    def test_twice_is_global_sign(self):
        """
        Applying either correction twice returns the state times
        (-1)^Tr(ab).
        """
        spec = FieldSpec(2)
        state = uniform_superposition(4)
        for index in range(16):
            ab = BellLabel.from_index(spec, index)
            sign = -1.0 if spec.trace_bits(spec.mul_bits(ab.a.bits, ab.b.bits)) else 1.0
            for correction in (apply_correction, apply_alice_correction):
                twice = correction(correction(state, 0, ab), 0, ab)
                self.assertTrue(twice.allclose(state.scale(sign)), repr(ab))

    def test_field_mismatch(self):
        with self.assertRaises(UsageError):
            apply_correction(basis_state(2, 0), 0, label(FieldSpec(2), 1, 1))

    def test_index_out_of_range(self):
        with self.assertRaises(UsageError):
            apply_correction(basis_state(2, 0), 1, label(FieldSpec(1), 1, 1))


class TestLocalUnitary(unittest.TestCase):
    """
    Ensures local unitaries are validated and applied.
    """

    def test_non_unitary_rejected(self):
        with self.assertRaises(ValidationError):
            LocalUnitary([[1, 1], [0, 1]])

    def test_hadamard(self):
        """
        H|0> on the second qudit of |0,0> gives |0,+>.
        """
        h = LocalUnitary(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
        result = h.apply(basis_state(2, 0, 0), 1)
        self.assertAlmostEqual(1 / math.sqrt(2), result.amplitude(0, 1).real)
        self.assertEqual(2, result.nnz)

    def test_column_states(self):
        x = LocalUnitary([[0, 1], [1, 0]])
        basis = x.column_states()
        self.assertEqual(1.0, basis[0].amplitude(1))

    def test_insert_qudit(self):
        state = insert_qudit(basis_state(3, 1, 2), 1, 0)
        self.assertEqual(1.0, state.amplitude(1, 0, 2))


class TestProjection(unittest.TestCase):
    """
    Ensures projection and measurement give Born probabilities.
    """

    def test_project(self):
        """
        Projecting qudit 0 of |Phi_00> over GF(2) onto |1> leaves |1> with
        probability 1/2.
        """
        phi = make_phi(label(FieldSpec(1), 0, 0))
        posterior, probability = project(phi, [0], basis_state(2, 1))
        self.assertAlmostEqual(0.5, probability)
        self.assertFalse(posterior.normalized)
        self.assertAlmostEqual(1.0, fidelity(posterior.normalize(), basis_state(2, 1)))

    def test_project_shape_mismatch(self):
        with self.assertRaises(UsageError):
            project(basis_state(2, 0, 0), [0], basis_state(2, 0, 0))

    def test_measurement_is_deterministic(self):
        """
        The same seed gives the same outcome.
        """
        state = uniform_superposition(8)
        basis = computational_basis(8)
        first = [measure_in_basis(state, [0], basis, seed).outcome for seed in range(20)]
        second = [measure_in_basis(state, [0], basis, seed).outcome for seed in range(20)]
        self.assertEqual(first, second)

    def test_measurement_collapses(self):
        """
        Measuring one half of |Phi_00> leaves the other in the same basis
        state.
        """
        phi = make_phi(label(FieldSpec(2), 0, 0))
        for seed in range(10):
            result = measure_in_basis(phi, [0], computational_basis(4), seed)
            self.assertAlmostEqual(0.25, result.probability)
            self.assertAlmostEqual(1.0, result.posterior.amplitude(result.outcome).real)

    def test_measurement_skips_impossible_outcomes(self):
        """
        Zero probability outcomes are never reported.
        """
        state = from_amplitudes(4, [0, 0.6, 0, 0.8])
        outcomes = {
            measure_in_basis(state, [0], computational_basis(4), seed).outcome
            for seed in range(50)
        }
        self.assertEqual({1, 3}, outcomes)

    def test_measure_accepts_list_of_states(self):
        result = measure_in_basis(
            basis_state(2, 1), [0], [basis_state(2, 0), basis_state(2, 1)], 0
        )
        self.assertEqual(1, result.outcome)

    def test_duplicate_indices(self):
        with self.assertRaises(UsageError):
            project(basis_state(2, 0, 0), [0, 0], basis_state(2, 0, 0))


class TestOverlaps(unittest.TestCase):
    def test_inner_product_conjugates_first(self):
        s1 = from_amplitudes(2, [1j, 0])
        s2 = basis_state(2, 0)
        self.assertEqual(-1j, inner_product(s1, s2))

    def test_global_phase(self):
        s1 = uniform_superposition(4)
        self.assertAlmostEqual(-1, global_phase_between(s1, s1.scale(-1)))
        self.assertIsNone(global_phase_between(s1, basis_state(4, 0)))

    def test_dump(self):
        """
        One line per label: hex label, real and imaginary parts.
        """
        state = from_amplitudes(4, [0.6, 0, 0, -0.8])
        self.assertEqual(
            "0 0.600000000000 0.000000000000\n3 -0.800000000000 0.000000000000",
            dump(state),
        )


class TestUnitarityProperty(unittest.TestCase):
    @settings(derandomize=True, max_examples=50)
    @given(st.integers(min_value=1, max_value=3), st.integers(min_value=0))
    def test_corrections_preserve_norm(self, n, seed):
        """
        Both corrections are unitary: they keep random states normalised.
        """
        spec = FieldSpec(n)
        rng = np.random.default_rng(seed)
        vector = rng.normal(size=spec.N) + 1j * rng.normal(size=spec.N)
        state = StateVector.from_dense(spec.N, vector / np.linalg.norm(vector))
        ab = BellLabel.from_index(spec, int(rng.integers(spec.N**2)))
        for correction in (apply_correction, apply_alice_correction):
            self.assertAlmostEqual(1.0, correction(state, 0, ab).norm_squared())
