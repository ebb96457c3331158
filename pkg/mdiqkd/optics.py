"""
The linear-optics measurement: projecting N qudits of dimension N onto the
totally antisymmetric state

    |Psi> = sum_P sign(P) |P(0), ..., P(N-1)> / sqrt(N!)

Only the postselected projection is modelled, not the optical circuit. The
overlap of |Psi> with a product of single qudit states is a normalised
determinant; a permutation sum is kept as an independent check.

Bob's N-1 qudits reach Charlie in one of two encodings (see Encoding). With
ORDERED the input is a plain product state. With LOGICAL the first state is
Alice's and the remaining N-1 arrive antisymmetrised, which scales the
overlap by sqrt((N-1)!).
"""
import enum
import itertools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from mdiqkd import qstate
from mdiqkd.errors import CapabilityError, UsageError, ValidationError
from mdiqkd.rng import make_rng


logger = logging.getLogger(__name__)

# Largest N accepted by the permutation-sum oracle.
MAX_BRUTEFORCE_N = 6
# Largest N for which |Psi> is built explicitly (N^N labels).
MAX_EXPLICIT_N = 4

AntisymProjection = namedtuple(
    "AntisymProjection", ["amplitude", "probability", "success"]
)


class Encoding(enum.Enum):
    """
    How Bob's N-1 states are delivered to Charlie.
    """

    LOGICAL = "logical"
    ORDERED = "ordered"


@dataclass(frozen=True)
class ProductInput:
    """
    N single qudit states of dimension N, Alice's first.
    """

    states: tuple
    encoding: Encoding = Encoding.ORDERED

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "encoding", Encoding(self.encoding))
        N = len(self.states)
        if N < 2:
            raise UsageError("A product input needs at least two states")
        for state in self.states:
            if state.num_qudits != 1 or state.dim != N:
                raise UsageError(
                    "Expected %d single qudit states of dimension %d" % (N, N)
                )

    @property
    def N(self):
        return len(self.states)

    def matrix(self):
        """
        M[p][q] = <q|phi_p>.
        """
        return np.array([state.to_dense() for state in self.states])

    def normalisation(self):
        if self.encoding is Encoding.LOGICAL:
            return math.sqrt(self.N)
        return math.sqrt(math.factorial(self.N))


def permutation_parity(permutation):
    """
    0 for even permutations, 1 for odd ones (counted by inversions).
    """
    inversions = sum(
        1
        for i, j in itertools.combinations(range(len(permutation)), 2)
        if permutation[i] > permutation[j]
    )
    return inversions % 2


def antisym_overlap_det(product_input):
    """
    <Psi|phi_0 ... phi_{N-1}> via the determinant of the overlap matrix.
    """
    determinant = linalg.det(product_input.matrix())
    return complex(determinant) / product_input.normalisation()


def antisym_overlap_bruteforce(product_input):
    """
    The same overlap as a literal sum over permutations. Only for small N.
    """
    N = product_input.N
    if N > MAX_BRUTEFORCE_N:
        raise CapabilityError(
            "The permutation sum is limited to N <= %d, got %d" % (MAX_BRUTEFORCE_N, N)
        )
    M = product_input.matrix()
    permutations = [
        (p, -1.0 if permutation_parity(p) else 1.0)
        for p in itertools.permutations(range(N))
    ]
    total = 0j
    if product_input.encoding is Encoding.ORDERED:
        for P, sign in permutations:
            term = sign
            for row in range(N):
                term *= M[row, P[row]]
            total += term
        return total / math.sqrt(math.factorial(N))
    # Bob's rows are antisymmetrised among themselves before the projection.
    bob_permutations = [
        ((0,) + tuple(1 + v for v in sigma), -1.0 if permutation_parity(sigma) else 1.0)
        for sigma in itertools.permutations(range(N - 1))
    ]
    for P, sign in permutations:
        for sigma, bob_sign in bob_permutations:
            term = sign * bob_sign
            for position in range(N):
                term *= M[sigma[position], P[position]]
            total += term
    return total / math.sqrt(math.factorial(N) * math.factorial(N - 1))


def project_onto_psi(product_input, rng_seed=None):
    """
    Samples Charlie's success signal for the projection onto |Psi>.
    """
    amplitude = antisym_overlap_det(product_input)
    probability = abs(amplitude) ** 2
    if probability > 1.0 + qstate.TOLERANCE:
        raise ValidationError(
            "Projection probability %r exceeds 1; inputs are not normalised"
            % probability
        )
    probability = min(probability, 1.0)
    rng = make_rng(rng_seed)
    success = bool(rng.random() < probability)
    logger.debug("Projection onto Psi: p=%.6g success=%s", probability, success)
    return AntisymProjection(amplitude, probability, success)


def antisymmetric_state(dim):
    """
    |Psi> on `dim` qudits of dimension `dim` as an explicit sparse state.
    """
    if dim > MAX_EXPLICIT_N:
        raise CapabilityError(
            "|Psi> is only built explicitly for N <= %d, got %d" % (MAX_EXPLICIT_N, dim)
        )
    amplitude = 1 / math.sqrt(math.factorial(dim))
    return qstate.StateVector(
        dim,
        dim,
        {
            qstate.pack(P, dim): -amplitude if permutation_parity(P) else amplitude
            for P in itertools.permutations(range(dim))
        },
    )


def check_pairing(pairing, dim):
    """
    Raises UsageError unless pairing is a perfect matching of range(dim).
    """
    covered = [v for pair in pairing for v in pair]
    if any(len(pair) != 2 for pair in pairing) or sorted(covered) != list(range(dim)):
        raise UsageError("%r is not a perfect matching of %d elements" % (pairing, dim))


def pairing_state(j, k, t, dim):
    """
    (|j> + (-1)^t |k>) / sqrt(2).
    """
    if j == k:
        raise UsageError("A pairing state needs j != k, got j = k = %r" % j)
    half = 1 / math.sqrt(2)
    return qstate.StateVector(dim, 1, {j: half, k: -half if t else half})


def pairing_basis(pairing, dim):
    """
    The qubit-like basis built from a perfect matching: for each pair (j, k)
    in order, the + state then the - state.
    """
    check_pairing(pairing, dim)
    return qstate.Basis(
        pairing_state(j, k, t, dim) for j, k in pairing for t in (0, 1)
    )


def hadamard_blocks(pairing, dim):
    """
    The direct sum of one 2x2 Hadamard block per pair, as a LocalUnitary
    whose columns are the pairing basis.
    """
    check_pairing(pairing, dim)
    matrix = np.zeros((dim, dim), dtype=complex)
    half = 1 / math.sqrt(2)
    for j, k in pairing:
        matrix[j, j] = matrix[k, j] = matrix[j, k] = half
        matrix[k, k] = -half
    return qstate.LocalUnitary(matrix)


def distinct_outcomes_check(unitary, trials, rng_seed=None):
    """
    Measures every qudit of |Psi> in the basis {U|i>} `trials` times. Returns
    True iff every shot gave N distinct outcomes.
    """
    if not isinstance(unitary, qstate.LocalUnitary):
        unitary = qstate.LocalUnitary(unitary)
    rng = make_rng(rng_seed)
    psi = antisymmetric_state(unitary.dim)
    basis = unitary.column_states()
    for trial in range(trials):
        state = psi
        outcomes = []
        while state.num_qudits:
            measurement = qstate.measure_in_basis(state, [0], basis, rng)
            outcomes.append(measurement.outcome)
            state = measurement.posterior
        if len(set(outcomes)) != unitary.dim:
            logger.warning("Repeated outcome in shot %d: %r", trial, outcomes)
            return False
    return True
