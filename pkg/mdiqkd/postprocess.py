"""
Classical post-processing of the sifted keys: QBER estimation on a public
sample, interactive parity bisection error correction, Toeplitz privacy
amplification and the key length estimate.

The key length formula is a reporting heuristic, not a proven rate.
"""
import hashlib
import logging
import math
from collections import namedtuple
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from mdiqkd.errors import ErrorCorrectionFailed, UsageError, ValidationError
from mdiqkd.rng import make_rng


logger = logging.getLogger(__name__)

# Bits disclosed by one comparison of verification hashes.
VERIFICATION_BITS = 32
DEFAULT_EC_PASSES = 16
DEFAULT_SAMPLE_FRACTION = 0.1
# Largest Toeplitz matrix (in entries) built in one piece.
MAX_DENSE_TOEPLITZ = 1 << 22
TOEPLITZ_CHUNK_ROWS = 256
# A zero sample estimate does not rule out errors, so blocks stay bounded.
MAX_BLOCK = 128

Distillation = namedtuple(
    "Distillation",
    [
        "qber_estimate",
        "qber_sample_size",
        "ec_leakage_bits",
        "final_key_length",
        "alice_final",
        "bob_final",
    ],
)


@dataclass(frozen=True, eq=False)
class SiftedKey:
    """
    One party's sifted key as a numpy array of bits.
    """

    bits: np.ndarray
    origin: str = ""
    session_id: str = ""

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if bits.size and bits.max() > 1:
            raise ValidationError("A key may only contain the bits 0 and 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)

    def with_bits(self, bits):
        return SiftedKey(bits, self.origin, self.session_id)


@dataclass(frozen=True)
class SessionReport:
    """
    Aggregate results of a session. final_key_length never exceeds
    sifted_bits - qber_sample_size; a mother round yields n bits, so this
    can be larger than rounds_sifted - qber_sample_size.

    expected_qber and expected_disagreement_rate are the analytic values
    for a depolarizing channel, or None where no closed form is reported.
    """

    rounds_total: int = 0
    rounds_sifted: int = 0
    rounds_lost: int = 0
    sifted_bits: int = 0
    qber_estimate: float = 0.0
    qber_sample_size: int = 0
    raw_qber: Optional[float] = None
    agreement_rate: Optional[float] = None
    projection_success_rate: float = 0.0
    sifting_rate: float = 0.0
    ec_leakage_bits: int = 0
    final_key_length: int = 0
    key_agreement: bool = False
    attacker_knowledge: Optional[float] = None
    qber_delta: Optional[float] = None
    key_length_heuristic: bool = True
    expected_qber: Optional[float] = None
    expected_disagreement_rate: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def _check_pair(a, b):
    if len(a) != len(b):
        raise UsageError(
            "Sifted keys differ in length (%d and %d)" % (len(a), len(b))
        )


def estimate_qber(a, b, sample_fraction, rng_seed=None):
    """
    Publicly compares a random sample of positions. Returns (qber,
    remaining_a, remaining_b) where the remainders exclude the sample.
    """
    _check_pair(a, b)
    if not 0.0 < sample_fraction < 1.0:
        raise UsageError("sample_fraction must lie in (0, 1), got %r" % sample_fraction)
    length = len(a)
    size = min(length, max(1, round(sample_fraction * length))) if length else 0
    if size == 0:
        raise UsageError("Cannot estimate the QBER from an empty sample")
    rng = make_rng(rng_seed)
    sample = np.zeros(length, dtype=bool)
    sample[rng.choice(length, size=size, replace=False)] = True
    qber = float(np.mean(a.bits[sample] != b.bits[sample]))
    logger.info("Estimated QBER %.4f from %d of %d bits", qber, size, length)
    return qber, a.with_bits(a.bits[~sample]), b.with_bits(b.bits[~sample])


def verification_hash(bits):
    """
    A 32 bit digest of a bit array, used to confirm error correction.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    digest = hashlib.blake2b(
        np.packbits(bits).tobytes() + len(bits).to_bytes(8, "big"),
        digest_size=VERIFICATION_BITS // 8,
    )
    return int.from_bytes(digest.digest(), "big")


def initial_block_size(qber, length):
    if length == 0:
        return 1
    if qber <= 0:
        return min(length, MAX_BLOCK)
    return max(1, min(length, MAX_BLOCK, max(4, math.ceil(0.73 / qber))))


def _parity(bits):
    return int(np.sum(bits)) & 1


def _bisect(alice, bob, positions):
    """
    Finds one error in a block of odd relative parity. Returns the position
    and the number of parities disclosed.
    """
    disclosed = 0
    while len(positions) > 1:
        half = positions[: len(positions) // 2]
        disclosed += 1
        if _parity(alice[half]) != _parity(bob[half]):
            positions = half
        else:
            positions = positions[len(positions) // 2 :]
    return positions[0], disclosed


def error_correct(a, b, qber, rng_seed=None, max_passes=DEFAULT_EC_PASSES):
    """
    Corrects Bob's key towards Alice's by parity bisection over randomly
    permuted blocks.

    A verification hash is compared first and after every pass. The block
    size halves after a pass where no block, or more than a quarter of the
    blocks, had odd parity; a pass with single bit blocks catches everything
    left.

    Returns (corrected_b, leakage_bits). Raises ErrorCorrectionFailed if the
    hashes still differ after max_passes.
    """
    _check_pair(a, b)
    if not 0.0 <= qber < 0.5:
        raise UsageError("Error correction needs qber in [0, 0.5), got %r" % qber)
    rng = make_rng(rng_seed)
    alice = a.bits
    bob = b.bits.copy()
    length = len(alice)
    leakage = VERIFICATION_BITS
    target = verification_hash(alice)
    if verification_hash(bob) == target:
        return b.with_bits(bob), leakage
    block = initial_block_size(qber, length)
    for pass_number in range(max_passes):
        order = rng.permutation(length)
        corrected = 0
        for start in range(0, length, block):
            positions = order[start : start + block]
            leakage += 1
            if _parity(alice[positions]) != _parity(bob[positions]):
                position, disclosed = _bisect(alice, bob, positions)
                leakage += disclosed
                bob[position] ^= 1
                corrected += 1
        leakage += VERIFICATION_BITS
        logger.debug(
            "EC pass %d: block %d, %d corrections", pass_number, block, corrected
        )
        if verification_hash(bob) == target:
            logger.info("Error correction converged, %d bits disclosed", leakage)
            return b.with_bits(bob), leakage
        blocks = -(-length // block)
        if corrected == 0 or 4 * corrected > blocks:
            block = max(1, block // 2)
    raise ErrorCorrectionFailed(
        "Keys still differ after %d error correction passes" % max_passes
    )


def toeplitz_seed(in_len, out_len, rng_seed=None):
    """
    The m + n - 1 random bits defining an out_len x in_len Toeplitz matrix.
    """
    rng = make_rng(rng_seed)
    return rng.integers(0, 2, size=max(0, in_len + out_len - 1), dtype=np.uint8)


def privacy_amplify(key, out_len, rng_seed=None):
    """
    Returns T . key over GF(2) for a seeded binary Toeplitz matrix T with
    T[i, j] = seed[i - j + len(key) - 1].
    """
    key = np.asarray(getattr(key, "bits", key), dtype=np.int64)
    in_len = len(key)
    if not 0 <= out_len <= in_len:
        raise UsageError(
            "Cannot amplify %d bits to %d bits" % (in_len, out_len)
        )
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    seed = toeplitz_seed(in_len, out_len, rng_seed).astype(np.int64)
    if in_len * out_len <= MAX_DENSE_TOEPLITZ:
        matrix = linalg.toeplitz(seed[in_len - 1 :], seed[in_len - 1 :: -1])
        return ((matrix @ key) % 2).astype(np.uint8)
    windows = sliding_window_view(seed, in_len)
    result = np.empty(out_len, dtype=np.uint8)
    reversed_key = key[::-1]
    for start in range(0, out_len, TOEPLITZ_CHUNK_ROWS):
        stop = min(out_len, start + TOEPLITZ_CHUNK_ROWS)
        result[start:stop] = (windows[start:stop] @ reversed_key) % 2
    return result


def binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def final_key_length(n_sifted, qber, ec_leakage, safety_margin=0):
    """
    max(0, floor(n (1 - h2(qber)) - leakage - margin)).
    """
    if min(n_sifted, qber, ec_leakage, safety_margin) < 0:
        raise UsageError("Key length inputs must be nonnegative")
    value = n_sifted * (1.0 - binary_entropy(qber)) - ec_leakage - safety_margin
    return max(0, math.floor(value))


def distill(
    alice,
    bob,
    sample_fraction=DEFAULT_SAMPLE_FRACTION,
    rng_seed=None,
    safety_margin=0,
    ec_max_passes=DEFAULT_EC_PASSES,
):
    """
    Estimate, correct, amplify. Returns a Distillation with both final keys.
    """
    rng = make_rng(rng_seed)
    qber, rest_a, rest_b = estimate_qber(alice, bob, sample_fraction, rng)
    sample_size = len(alice) - len(rest_a)
    empty = np.zeros(0, dtype=np.uint8)
    if qber >= 0.5:
        logger.warning("QBER estimate %.3f too high to correct; no key", qber)
        return Distillation(qber, sample_size, 0, 0, empty, empty)
    corrected_b, leakage = error_correct(rest_a, rest_b, qber, rng, ec_max_passes)
    length = final_key_length(len(rest_a), qber, leakage, safety_margin)
    if length == 0:
        logger.warning("Final key length is zero")
        return Distillation(qber, sample_size, leakage, 0, empty, empty)
    pa_seed = int(rng.integers(2**63))
    alice_final = privacy_amplify(rest_a, length, pa_seed)
    bob_final = privacy_amplify(corrected_b, length, pa_seed)
    logger.info("Distilled %d bits from %d sifted bits", length, len(alice))
    return Distillation(qber, sample_size, leakage, length, alice_final, bob_final)


def summarize(
    records,
    sample_fraction=DEFAULT_SAMPLE_FRACTION,
    rng_seed=None,
    safety_margin=0,
    ec_max_passes=DEFAULT_EC_PASSES,
):
    """
    Builds the SessionReport for a list of round records (in round order)
    and distills the key. Returns (report, distillation); distillation is
    None when there are too few sifted bits.
    """
    records = list(records)
    sifted = [r for r in records if r.sifted]
    attempted = [r for r in records if not r.lost]
    successes = [
        r for r in attempted if r.announcement is not None and r.announcement is not False
    ]
    alice = SiftedKey([b for r in sifted for b in r.alice_raw], "alice")
    bob = SiftedKey([b for r in sifted for b in r.bob_raw], "bob")
    guessed = [r for r in sifted if r.charlie_guess is not None]
    fields = dict(
        rounds_total=len(records),
        rounds_sifted=len(sifted),
        rounds_lost=len(records) - len(attempted),
        sifted_bits=len(alice),
        raw_qber=float(np.mean(alice.bits != bob.bits)) if len(alice) else None,
        agreement_rate=(
            sum(r.agrees for r in sifted) / len(sifted) if sifted else None
        ),
        projection_success_rate=len(successes) / len(attempted) if attempted else 0.0,
        sifting_rate=len(sifted) / len(records) if records else 0.0,
        attacker_knowledge=(
            sum(r.charlie_guess == r.alice_raw for r in guessed) / len(guessed)
            if guessed
            else None
        ),
    )
    logger.info(
        "%d of %d rounds sifted (%d bits)",
        len(sifted),
        len(records),
        len(alice),
    )
    if len(alice) < 2:
        logger.warning("Too few sifted bits (%d) to distill a key", len(alice))
        return SessionReport(**fields), None
    distillation = distill(
        alice, bob, sample_fraction, rng_seed, safety_margin, ec_max_passes
    )
    report = SessionReport(
        qber_estimate=distillation.qber_estimate,
        qber_sample_size=distillation.qber_sample_size,
        ec_leakage_bits=distillation.ec_leakage_bits,
        final_key_length=distillation.final_key_length,
        key_agreement=bool(
            distillation.final_key_length > 0
            and np.array_equal(distillation.alice_final, distillation.bob_final)
        ),
        **fields
    )
    return report, distillation
