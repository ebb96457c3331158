"""
Sparse pure states of m qudits, each of dimension `dim`.

A basis label is a tuple of per-qudit values (qudit 0 first). Labels are
stored packed into a single int in radix `dim`, qudit 0 most significant; for
dim = 2^n this is the bit concatenation of the field elements. Amplitudes
below PRUNE are never stored.

Also here: the generalised Bell basis over GF(2^n), the two correction
operators used after entanglement swapping, local unitaries and projective
measurement with a seeded generator.
"""
import functools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from mdiqkd.errors import UsageError, ValidationError
from mdiqkd.rng import make_rng


logger = logging.getLogger(__name__)

# Amplitudes smaller than this are dropped.
PRUNE = 1e-12
# Tolerance used for normalisation, orthonormality and unitarity checks.
TOLERANCE = 1e-9

Measurement = namedtuple("Measurement", ["outcome", "posterior", "probability"])


def pack(label, dim):
    """
    Packs a label tuple into an int, qudit 0 most significant.
    """
    key = 0
    for value in label:
        key = key * dim + value
    return key


def unpack(key, dim, num_qudits):
    """
    Inverse of pack.
    """
    values = []
    for _ in range(num_qudits):
        key, value = divmod(key, dim)
        values.append(value)
    return tuple(reversed(values))


class StateVector:
    """
    An immutable sparse state vector. Operations return new instances.

    States produced by projection are allowed to be unnormalised; they carry
    normalized=False so they can't be mistaken for physical states.
    """

    __slots__ = ("dim", "num_qudits", "normalized", "_amplitudes")

    def __init__(self, dim, num_qudits, amplitudes, normalized=True):
        if dim < 2:
            raise UsageError("Qudit dimension must be at least 2, got %r" % dim)
        if num_qudits < 0:
            raise UsageError("Negative qudit count %r" % num_qudits)
        size = dim ** num_qudits
        pruned = {}
        for key, amplitude in amplitudes.items():
            if not 0 <= key < size:
                raise UsageError("Basis label %r out of range" % key)
            amplitude = complex(amplitude)
            if abs(amplitude) >= PRUNE:
                pruned[key] = amplitude
        self.dim = dim
        self.num_qudits = num_qudits
        self._amplitudes = pruned
        self.normalized = normalized
        if normalized:
            norm = self.norm_squared()
            if abs(norm - 1.0) > TOLERANCE:
                raise ValidationError(
                    "State is not normalised (squared norm %r)" % norm
                )

    @classmethod
    def from_labels(cls, dim, amplitudes, normalized=True):
        """
        Builds a state from a mapping of label tuples to amplitudes.
        """
        lengths = {len(label) for label in amplitudes}
        if len(lengths) != 1:
            raise UsageError("Labels must all have the same length")
        num_qudits = lengths.pop()
        packed = {}
        for label, amplitude in amplitudes.items():
            if any(not 0 <= v < dim for v in label):
                raise UsageError("Label %r out of range for dim %d" % (label, dim))
            packed[pack(label, dim)] = amplitude
        return cls(dim, num_qudits, packed, normalized)

    @classmethod
    def from_dense(cls, dim, vector, normalized=True):
        """
        Builds a state from a dense numpy vector of length dim**m.
        """
        vector = np.asarray(vector, dtype=complex)
        num_qudits = round(math.log(len(vector), dim)) if len(vector) > 1 else 0
        if dim ** num_qudits != len(vector):
            raise UsageError(
                "Vector length %d is not a power of %d" % (len(vector), dim)
            )
        amplitudes = {key: a for key, a in enumerate(vector) if abs(a) >= PRUNE}
        return cls(dim, num_qudits, amplitudes, normalized)

    @property
    def amplitudes(self):
        """
        Read-only view of the packed label -> amplitude map.
        """
        return MappingProxyType(self._amplitudes)

    @property
    def nnz(self):
        """
        Returns the number of stored (nonzero) amplitudes.
        """
        return len(self._amplitudes)

    def amplitude(self, *label):
        return self._amplitudes.get(pack(label, self.dim), 0j)

    def items(self):
        """
        (label tuple, amplitude) pairs in label order.
        """
        for key in sorted(self._amplitudes):
            yield unpack(key, self.dim, self.num_qudits), self._amplitudes[key]

    def norm_squared(self):
        return math.fsum(abs(a) ** 2 for a in self._amplitudes.values())

    def normalize(self):
        """
        Returns the normalised copy of this state.
        """
        norm = math.sqrt(self.norm_squared())
        if norm < PRUNE:
            raise ValidationError("Cannot normalise a zero vector")
        return StateVector(
            self.dim,
            self.num_qudits,
            {key: a / norm for key, a in self._amplitudes.items()},
        )

    def scale(self, factor):
        return StateVector(
            self.dim,
            self.num_qudits,
            {key: a * factor for key, a in self._amplitudes.items()},
            normalized=self.normalized and abs(abs(factor) - 1.0) <= TOLERANCE,
        )

    def to_dense(self):
        vector = np.zeros(self.dim ** self.num_qudits, dtype=complex)
        for key, amplitude in self._amplitudes.items():
            vector[key] = amplitude
        return vector

    def allclose(self, other, tolerance=TOLERANCE):
        """
        Entry-wise comparison (global phase matters).
        """
        _check_same_shape(self, other)
        keys = set(self._amplitudes) | set(other._amplitudes)
        return all(
            abs(self._amplitudes.get(k, 0j) - other._amplitudes.get(k, 0j))
            <= tolerance
            for k in keys
        )

    def __repr__(self):
        terms = " ".join(
            "%s|%s>" % (format_amplitude(a), ",".join(str(v) for v in label))
            for label, a in self.items()
        )
        return "StateVector(dim=%d, %s)" % (self.dim, terms)


def format_amplitude(amplitude):
    """
    Returns an amplitude as text, dropping a negligible imaginary part.
    """
    if abs(amplitude.imag) < PRUNE:
        return "%.6g" % amplitude.real
    return "(%.6g%+.6gj)" % (amplitude.real, amplitude.imag)


def _check_same_shape(s1, s2):
    if s1.dim != s2.dim or s1.num_qudits != s2.num_qudits:
        raise UsageError(
            "Shape mismatch: %d qudits of dim %d vs %d qudits of dim %d"
            % (s1.num_qudits, s1.dim, s2.num_qudits, s2.dim)
        )


def _check_index(s, qudit_index):
    if not 0 <= qudit_index < s.num_qudits:
        raise UsageError(
            "Qudit index %r out of range for a %d qudit state"
            % (qudit_index, s.num_qudits)
        )


def basis_state(dim, *values):
    """
    The computational basis state |values[0], values[1], ...>.
    """
    return StateVector.from_labels(dim, {tuple(values): 1.0})


def from_amplitudes(dim, amplitudes):
    """
    A single qudit state sum_i amplitudes[i] |i>. The amplitudes must already
    be normalised.
    """
    if len(amplitudes) != dim:
        raise UsageError("Expected %d amplitudes, got %d" % (dim, len(amplitudes)))
    return StateVector(dim, 1, dict(enumerate(amplitudes)))


def uniform_superposition(dim):
    return from_amplitudes(dim, [1 / math.sqrt(dim)] * dim)


@dataclass(frozen=True)
class BellLabel:
    """
    The pair (a, b) indexing |Phi_ab>; also what Charlie announces after a
    Bell measurement.
    """

    a: object
    b: object

    def __post_init__(self):
        if self.a.spec != self.b.spec:
            raise UsageError("Bell label entries belong to different fields")

    @property
    def spec(self):
        return self.a.spec

    @property
    def index(self):
        """
        Position of |Phi_ab> in bell_basis: a * N + b.
        """
        return self.a.bits * self.spec.N + self.b.bits

    @classmethod
    def from_index(cls, spec, index):
        a, b = divmod(index, spec.N)
        return cls(spec.element(a), spec.element(b))

    def as_tuple(self):
        return (self.a.bits, self.b.bits)

    def __repr__(self):
        return "BellLabel(a=%d, b=%d)" % self.as_tuple()


def _sign(bit):
    return -1.0 if bit else 1.0


def make_phi(ab):
    """
    |Phi_ab> = sum_i (-1)^Tr(b i) |i, i+a> / sqrt(N).
    """
    spec = ab.spec
    N = spec.N
    a, b = ab.a.bits, ab.b.bits
    amplitude = 1 / math.sqrt(N)
    return StateVector(
        N,
        2,
        {
            pack((i, i ^ a), N): _sign(spec.trace_bits(spec.mul_bits(b, i)))
            * amplitude
            for i in range(N)
        },
    )


class Basis:
    """
    An orthonormal basis of an m qudit space, validated on construction.
    """

    def __init__(self, vectors):
        vectors = tuple(vectors)
        if not vectors:
            raise ValidationError("A basis needs at least one vector")
        first = vectors[0]
        for vector in vectors:
            _check_same_shape(first, vector)
        self.dim = first.dim
        self.num_qudits = first.num_qudits
        self.vectors = vectors
        size = self.dim ** self.num_qudits
        if len(vectors) != size:
            raise ValidationError(
                "%d vectors cannot span a space of dimension %d"
                % (len(vectors), size)
            )
        matrix = np.array([v.to_dense() for v in vectors])
        gram = matrix.conj() @ matrix.T
        if not np.allclose(gram, np.eye(size), rtol=0, atol=TOLERANCE):
            raise ValidationError("Basis vectors are not orthonormal")

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, index):
        return self.vectors[index]

    def __iter__(self):
        return iter(self.vectors)


@functools.lru_cache(maxsize=None)
def bell_basis(spec):
    """
    All N^2 generalised Bell states, |Phi_ab> at position a * N + b.
    """
    N = spec.N
    return Basis(
        make_phi(BellLabel(spec.element(a), spec.element(b)))
        for a in range(N)
        for b in range(N)
    )


@functools.lru_cache(maxsize=None)
def computational_basis(dim, num_qudits=1):
    return Basis(
        StateVector(dim, num_qudits, {key: 1.0})
        for key in range(dim ** num_qudits)
    )


def tensor(s1, s2):
    """
    The product state s1 (x) s2; s2's qudits follow s1's.
    """
    if s1.dim != s2.dim:
        raise UsageError("Cannot tensor qudits of dim %d and %d" % (s1.dim, s2.dim))
    shift = s1.dim ** s2.num_qudits
    return StateVector(
        s1.dim,
        s1.num_qudits + s2.num_qudits,
        {
            k1 * shift + k2: a1 * a2
            for k1, a1 in s1.amplitudes.items()
            for k2, a2 in s2.amplitudes.items()
        },
        normalized=s1.normalized and s2.normalized,
    )


def _relabel(s, qudit_index, transform):
    """
    Applies |v> -> phase * |v'> to one qudit, where transform(v) returns
    (v', phase) and is a bijection.
    """
    _check_index(s, qudit_index)
    dim, m = s.dim, s.num_qudits
    amplitudes = {}
    for key, amplitude in s.amplitudes.items():
        label = list(unpack(key, dim, m))
        value, phase = transform(label[qudit_index])
        label[qudit_index] = value
        amplitudes[pack(label, dim)] = amplitude * phase
    return StateVector(dim, m, amplitudes, normalized=s.normalized)


def _check_label_field(s, ab):
    if s.dim != ab.spec.N:
        raise UsageError(
            "Bell label over GF(%d) applied to qudits of dim %d" % (ab.spec.N, s.dim)
        )


def apply_correction(s, qudit_index, ab):
    """
    Bob's correction |i> -> (-1)^Tr((a-i) b) |i-a> on one qudit.
    """
    _check_label_field(s, ab)
    spec = ab.spec
    a, b = ab.a.bits, ab.b.bits
    return _relabel(
        s,
        qudit_index,
        lambda i: (i ^ a, _sign(spec.trace_bits(spec.mul_bits(a ^ i, b)))),
    )


def apply_alice_correction(s, qudit_index, ab):
    """
    Alice's correction |i> -> (-1)^(-Tr(i b)) |i+a> on one qudit. The sign of
    the exponent is irrelevant mod 2.
    """
    _check_label_field(s, ab)
    spec = ab.spec
    a, b = ab.a.bits, ab.b.bits
    return _relabel(
        s,
        qudit_index,
        lambda i: (i ^ a, _sign(spec.trace_bits(spec.mul_bits(i, b)))),
    )


class LocalUnitary:
    """
    A single qudit unitary held as a dense numpy matrix. Column i is U|i>.
    """

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError("A local unitary must be a square matrix")
        product = matrix @ matrix.conj().T
        if not np.allclose(product, np.eye(len(matrix)), rtol=0, atol=TOLERANCE):
            raise ValidationError("Matrix is not unitary")
        self.matrix = matrix

    @property
    def dim(self):
        return len(self.matrix)

    def column_states(self):
        """
        The basis {U|i>} as single qudit states.
        """
        return Basis(StateVector.from_dense(self.dim, column) for column in self.matrix.T)

    def apply(self, s, qudit_index):
        return apply_local(s, qudit_index, self)


def apply_local(s, qudit_index, unitary):
    """
    Applies a LocalUnitary to one qudit of s.
    """
    _check_index(s, qudit_index)
    if unitary.dim != s.dim:
        raise UsageError("Unitary of dim %d on qudits of dim %d" % (unitary.dim, s.dim))
    dim, m = s.dim, s.num_qudits
    matrix = unitary.matrix
    amplitudes = {}
    for key, amplitude in s.amplitudes.items():
        label = list(unpack(key, dim, m))
        column = matrix[:, label[qudit_index]]
        for value in range(dim):
            if column[value] != 0:
                label[qudit_index] = value
                new_key = pack(label, dim)
                amplitudes[new_key] = amplitudes.get(new_key, 0j) + column[value] * amplitude
    return StateVector(dim, m, amplitudes, normalized=s.normalized)


def insert_qudit(s, qudit_index, value):
    """
    Returns s with a new qudit in state |value> inserted at qudit_index.
    """
    if not 0 <= qudit_index <= s.num_qudits:
        raise UsageError("Insertion index %r out of range" % qudit_index)
    dim, m = s.dim, s.num_qudits
    amplitudes = {}
    for key, amplitude in s.amplitudes.items():
        label = list(unpack(key, dim, m))
        label.insert(qudit_index, value)
        amplitudes[pack(label, dim)] = amplitude
    return StateVector(dim, m + 1, amplitudes, normalized=s.normalized)


def _split(s, qudit_indices):
    """
    Groups the amplitudes of s by the label of the measured qudits:
    measured key -> list of (rest key, amplitude).
    """
    dim, m = s.dim, s.num_qudits
    for q in qudit_indices:
        _check_index(s, q)
    if len(set(qudit_indices)) != len(qudit_indices):
        raise UsageError("Duplicate qudit indices %r" % (qudit_indices,))
    measured = list(qudit_indices)
    rest = [q for q in range(m) if q not in measured]
    groups = {}
    for key, amplitude in s.amplitudes.items():
        label = unpack(key, dim, m)
        measured_key = pack([label[q] for q in measured], dim)
        rest_key = pack([label[q] for q in rest], dim)
        groups.setdefault(measured_key, []).append((rest_key, amplitude))
    return groups, len(rest)


def _project_groups(groups, vector):
    posterior = {}
    for measured_key, coefficient in vector.amplitudes.items():
        coefficient = coefficient.conjugate()
        for rest_key, amplitude in groups.get(measured_key, ()):
            posterior[rest_key] = posterior.get(rest_key, 0j) + coefficient * amplitude
    return posterior


def project(s, qudit_indices, vector):
    """
    Projects the given qudits of s onto `vector` without sampling.

    Returns (posterior, probability) where posterior is the unnormalised
    state of the remaining qudits and probability is its squared norm
    relative to s.
    """
    if vector.num_qudits != len(qudit_indices) or vector.dim != s.dim:
        raise UsageError("Projection vector does not match the measured qudits")
    groups, remaining = _split(s, qudit_indices)
    posterior = StateVector(
        s.dim, remaining, _project_groups(groups, vector), normalized=False
    )
    return posterior, posterior.norm_squared() / s.norm_squared()


def measure_in_basis(s, qudit_indices, basis, rng_seed=None):
    """
    Measures the given qudits of s in `basis` (a Basis or a list of states,
    validated as orthonormal and complete).

    Returns Measurement(outcome, posterior, probability): the index of the
    sampled basis vector, the normalised state of the unmeasured qudits and
    the exact Born probability of the outcome. Deterministic given the seed.
    """
    if not isinstance(basis, Basis):
        basis = Basis(basis)
    if basis.num_qudits != len(qudit_indices) or basis.dim != s.dim:
        raise UsageError("Basis does not match the measured qudits")
    rng = make_rng(rng_seed)
    groups, remaining = _split(s, qudit_indices)
    total = s.norm_squared()
    branches = []
    for vector in basis:
        posterior = _project_groups(groups, vector)
        weight = math.fsum(abs(a) ** 2 for a in posterior.values()) / total
        branches.append((weight, posterior))
    point = rng.random() * math.fsum(w for w, _ in branches)
    cumulative = 0.0
    outcome = None
    for index, (weight, _) in enumerate(branches):
        if weight <= 0.0:
            continue
        outcome = index
        cumulative += weight
        if point < cumulative:
            break
    weight, posterior = branches[outcome]
    norm = math.sqrt(weight * total)
    result = StateVector(
        s.dim, remaining, {k: a / norm for k, a in posterior.items()}
    )
    logger.debug("Measured qudits %r: outcome %d (p=%.6g)", qudit_indices, outcome, weight)
    return Measurement(outcome, result, weight)


def inner_product(s1, s2):
    """
    <s1|s2>, conjugate-linear in s1.
    """
    _check_same_shape(s1, s2)
    small, large = (s1, s2) if s1.nnz <= s2.nnz else (s2, s1)
    total = 0j
    for key in small.amplitudes:
        if key in large.amplitudes:
            total += s1.amplitudes[key].conjugate() * s2.amplitudes[key]
    return total


def fidelity(s1, s2):
    """
    |<s1|s2>|^2 for normalised states.
    """
    return abs(inner_product(s1, s2)) ** 2


def global_phase_between(s1, s2):
    """
    The phase c with s2 = c * s1 if one exists (within tolerance), else None.
    """
    overlap = inner_product(s1, s2)
    if abs(abs(overlap) - 1.0) > TOLERANCE:
        return None
    phase = overlap / abs(overlap)
    if s1.scale(phase).allclose(s2):
        return phase
    return None


def dump(s):
    """
    Debug dump: one line per stored label, "bits_hex re im", in label order.
    """
    width = max(1, len(format(s.dim ** s.num_qudits - 1, "x")))
    lines = []
    for key in sorted(s.amplitudes):
        amplitude = s.amplitudes[key]
        lines.append(
            "%0*x %.12f %.12f"
            % (width, key, amplitude.real + 0.0, amplitude.imag + 0.0)
        )
    return "\n".join(lines)
