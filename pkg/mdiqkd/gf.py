"""
Arithmetic in the finite field GF(2^n).

Elements are represented by the integer whose binary digits are the
coefficients of a polynomial over GF(2); arithmetic is done modulo an
irreducible polynomial of degree n. Addition is XOR, so every element is its
own additive inverse and subtraction is the same as addition.

Default moduli (overridable per FieldSpec):

    n=1 : x + 1                   0b11       (GF(2) itself)
    n=2 : x^2 + x + 1             0b111
    n=3 : x^3 + x + 1             0b1011
    n=4 : x^4 + x + 1             0b10011
    n=5 : x^5 + x^2 + 1           0b100101
    n=6 : x^6 + x + 1             0b1000011
    n=7 : x^7 + x + 1             0b10000011
    n=8 : x^8 + x^4 + x^3 + x + 1 0b100011011
"""
import functools
from dataclasses import dataclass, field

import numpy as np

from mdiqkd.errors import FieldDomainError, UsageError, ValidationError


DEFAULT_MODULI = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}

MAX_DEGREE = 8


def degree(poly):
    """
    Degree of a polynomial over GF(2) given as an int (-1 for zero).
    """
    return poly.bit_length() - 1


def poly_mod(a, b):
    """
    Remainder of the polynomial a divided by b, both over GF(2).
    """
    if b == 0:
        raise FieldDomainError("Polynomial division by zero.")
    db = degree(b)
    while degree(a) >= db:
        a ^= b << (degree(a) - db)
    return a


def is_irreducible(modulus, n):
    """
    True if `modulus` has degree exactly n and no factor of degree 1..n/2.
    Exhaustive trial division, fine for the n <= 8 fields used here.
    """
    if degree(modulus) != n or n < 1:
        return False
    for d in range(1, n // 2 + 1):
        for candidate in range(1 << d, 1 << (d + 1)):
            if poly_mod(modulus, candidate) == 0:
                return False
    return True


def _carryless_mul(a, b, n, modulus):
    """
    Shift-and-add multiplication of numpy arrays of field values, reduced
    modulo `modulus`. Broadcasts like any numpy operation.
    """
    result = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    high_bit = 1 << n
    for _ in range(n):
        result ^= np.where(b & 1, a, 0)
        a = a << 1
        a = np.where(a & high_bit, a ^ modulus, a)
        b = b >> 1
    return result


@dataclass(frozen=True)
class FieldSpec:
    """
    Describes GF(2^n): the degree n and the irreducible modulus. Instances are
    immutable and hashable so the arithmetic tables for a field are built only
    once.
    """

    n: int
    modulus: int = field(default=None)

    def __post_init__(self):
        if not isinstance(self.n, int) or not 1 <= self.n <= MAX_DEGREE:
            raise UsageError(
                "Field degree must be an integer in [1, %d], got %r"
                % (MAX_DEGREE, self.n)
            )
        if self.modulus is None:
            object.__setattr__(self, "modulus", DEFAULT_MODULI[self.n])
        if not is_irreducible(self.modulus, self.n):
            raise ValidationError(
                "Modulus %s is not an irreducible polynomial of degree %d"
                % (bin(self.modulus), self.n)
            )

    @property
    def N(self):
        """
        Returns the field size 2^n.
        """
        return 1 << self.n

    def element(self, bits):
        """
        The field element with the given bit value.
        """
        return FieldElement(int(bits), self)

    def elements(self):
        """
        Returns every element of the field in bit value order.
        """
        return enumerate_elements(self)

    def zero(self):
        """
        Returns the additive identity.
        """
        return FieldElement(0, self)

    def one(self):
        """
        Returns the multiplicative identity.
        """
        return FieldElement(1, self)

    # Raw integer arithmetic, used by the state code on its hot paths.

    def mul_bits(self, x, y):
        """
        Returns the product of two bit values, looked up in the cached table.
        """
        return _mul_rows(self)[x][y]

    def trace_bits(self, x):
        return _trace_list(self)[x]

    def __repr__(self):
        return "GF(%d)[%s]" % (self.N, bin(self.modulus))


@functools.lru_cache(maxsize=None)
def _mul_table(spec):
    values = np.arange(spec.N, dtype=np.int64)
    return _carryless_mul(values[:, None], values[None, :], spec.n, spec.modulus)


@functools.lru_cache(maxsize=None)
def _trace_table(spec):
    table = _mul_table(spec)
    result = []
    for x in range(spec.N):
        total = 0
        term = x
        for _ in range(spec.n):
            total ^= term
            term = int(table[term, term])
        if total not in (0, 1):
            raise ValidationError(
                "Trace of %d left GF(2) in %r; the modulus is not a field "
                "modulus" % (x, spec)
            )
        result.append(total)
    return np.array(result, dtype=np.int64)


@functools.lru_cache(maxsize=None)
def _mul_rows(spec):
    return _mul_table(spec).tolist()


@functools.lru_cache(maxsize=None)
def _trace_list(spec):
    return _trace_table(spec).tolist()


@dataclass(frozen=True)
class FieldElement:
    """
    An element of GF(2^n). Supports +, - (identical to +), * and unary -.
    """

    bits: int
    spec: FieldSpec

    def __post_init__(self):
        if not 0 <= self.bits < self.spec.N:
            raise UsageError(
                "Element bits %r out of range for %r" % (self.bits, self.spec)
            )

    def __add__(self, other):
        return add(self, other)

    __sub__ = __add__

    def __neg__(self):
        return self

    def __mul__(self, other):
        return mul(self, other)

    def __int__(self):
        return self.bits

    def __index__(self):
        return self.bits

    def __bool__(self):
        return self.bits != 0

    def trace(self):
        return trace(self)

    def inverse(self):
        return inv(self)

    def __repr__(self):
        return "GF(%d)(%s)" % (self.spec.N, format(self.bits, "#0%db" % (self.spec.n + 2)))


def _check_same_field(x, y):
    if x.spec != y.spec:
        raise UsageError(
            "Elements belong to different fields: %r and %r" % (x.spec, y.spec)
        )


def add(x, y):
    """
    x + y in GF(2^n), i.e. bitwise XOR.
    """
    _check_same_field(x, y)
    return FieldElement(x.bits ^ y.bits, x.spec)


def mul(x, y):
    """
    x * y: the polynomial product reduced modulo the field's modulus.
    """
    _check_same_field(x, y)
    return FieldElement(x.spec.mul_bits(x.bits, y.bits), x.spec)


def square(x):
    """
    The Frobenius map x -> x^2.
    """
    return mul(x, x)


def power(x, exponent):
    """
    x ** exponent by repeated squaring (exponent >= 0).
    """
    result = x.spec.one()
    base = x
    while exponent:
        if exponent & 1:
            result = mul(result, base)
        base = square(base)
        exponent >>= 1
    return result


def inv(x):
    """
    The multiplicative inverse of x, computed as x^(N-2).
    """
    if x.bits == 0:
        raise FieldDomainError("Zero has no multiplicative inverse in %r" % x.spec)
    return power(x, x.spec.N - 2)


def trace(x):
    """
    The absolute trace x + x^2 + x^4 + ... + x^(N/2) as the bit 0 or 1.
    """
    return x.spec.trace_bits(x.bits)


def enumerate_elements(spec):
    """
    All N elements of the field in bit-value order 0, 1, ..., N-1.
    """
    return [FieldElement(bits, spec) for bits in range(spec.N)]
