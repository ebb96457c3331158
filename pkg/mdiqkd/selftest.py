"""
Exhaustive small-N verification suites, run by `mdiqkd selftest`.

Each suite returns (checks, failures): the number of individual checks made
and a list of human readable failure descriptions. run_selftest runs every
suite, turning any library error into a failure of that suite.
"""
import logging
import math
import time
from collections import namedtuple

import numpy as np
from scipy.stats import unitary_group

from mdiqkd import optics, qstate
from mdiqkd.errors import MdiqkdError
from mdiqkd.gf import DEFAULT_MODULI, FieldSpec
from mdiqkd.optics import Encoding, ProductInput
from mdiqkd.protocols.chau15 import (
    CHAU15_LO_KEY_FLIP,
    derive_chau15_key_flip,
    enumerate_chau15_lo_branches,
    enumerate_naive_chau15_branches,
)
from mdiqkd.protocols.rrdps import enumerate_rrdps_branches
from mdiqkd.protocols.rrdps_lo import (
    average_success_probability,
    enumerate_rrdps_lo_branches,
    successful,
)
from mdiqkd.rng import make_rng
from mdiqkd.swap import CorrectedBy, swap_outcome_table


logger = logging.getLogger(__name__)

SuiteResult = namedtuple("SuiteResult", ["name", "passed", "checks", "detail"])

FIELD_DEGREES = (1, 2, 3, 4)
SMALL_DEGREES = (1, 2, 3)
EXACT = 1e-12
ORACLE_TOLERANCE = 1e-10
# Failures listed per suite before the rest are summarised.
MAX_REPORTED = 5


def field_axioms(moduli_override=None):
    """
    Checks the field axioms exhaustively for every degree in FIELD_DEGREES,
    using `moduli_override` (a dict n -> modulus) in place of the defaults.
    """
    moduli = dict(DEFAULT_MODULI)
    moduli.update(moduli_override or {})
    checks = 0
    failures = []
    for n in FIELD_DEGREES:
        try:
            spec = FieldSpec(n, moduli[n])
        except MdiqkdError as ex:
            failures.append("n=%d: %s" % (n, ex))
            continue
        N = spec.N
        mul = spec.mul_bits
        for x in range(N):
            checks += 2
            if mul(x, 1) != x or mul(x, 0) != 0:
                failures.append("n=%d: identity fails for %d" % (n, x))
            for y in range(N):
                checks += 1
                if mul(x, y) != mul(y, x):
                    failures.append("n=%d: %d*%d not commutative" % (n, x, y))
                for z in range(N):
                    checks += 2
                    if mul(mul(x, y), z) != mul(x, mul(y, z)):
                        failures.append("n=%d: (%d*%d)*%d not associative" % (n, x, y, z))
                    if mul(x, y ^ z) != mul(x, y) ^ mul(x, z):
                        failures.append("n=%d: %d*(%d+%d) not distributive" % (n, x, y, z))
        for x in range(1, N):
            checks += 1
            if not any(mul(x, y) == 1 for y in range(1, N)):
                failures.append("n=%d: %d has no inverse" % (n, x))
        try:
            traces = [spec.trace_bits(x) for x in range(N)]
        except MdiqkdError as ex:
            failures.append("n=%d: %s" % (n, ex))
            continue
        checks += 1
        if sum(traces) != N // 2:
            failures.append("n=%d: trace is not balanced" % n)
        for x in range(N):
            for y in range(N):
                checks += 1
                if traces[x ^ y] != traces[x] ^ traces[y]:
                    failures.append("n=%d: trace not additive at %d, %d" % (n, x, y))
    return checks, failures


def bell_orthonormality():
    """
    The Gram matrix of the N^2 Bell states is the identity.
    """
    checks = 0
    failures = []
    for n in SMALL_DEGREES:
        spec = FieldSpec(n)
        basis = qstate.bell_basis(spec)
        vectors = np.array([vector.to_dense() for vector in basis])
        deviation = np.abs(vectors.conj() @ vectors.T - np.eye(len(vectors))).max()
        checks += 2
        if len(vectors) != spec.N**2:
            failures.append("N=%d: %d Bell states" % (spec.N, len(vectors)))
        if deviation > qstate.TOLERANCE:
            failures.append("N=%d: Gram matrix off by %.3g" % (spec.N, deviation))
    return checks, failures


def swap_table():
    """
    Every swap outcome has probability 1/N^2 and, after either party's
    correction, leaves |Phi_00> exactly.
    """
    checks = 0
    failures = []
    for n in SMALL_DEGREES:
        spec = FieldSpec(n)
        for corrected_by in CorrectedBy:
            table = swap_outcome_table(spec, corrected_by)
            for outcome, (probability, fidelity) in table.items():
                checks += 2
                if abs(probability - 1 / spec.N**2) > EXACT:
                    failures.append("N=%d %r: probability %r" % (spec.N, outcome, probability))
                if abs(fidelity - 1) > EXACT:
                    failures.append(
                        "N=%d %r corrected by %s: fidelity %r"
                        % (spec.N, outcome, corrected_by.value, fidelity)
                    )
    return checks, failures


def random_product_input(N, encoding, rng):
    states = []
    for _ in range(N):
        vector = rng.normal(size=N) + 1j * rng.normal(size=N)
        states.append(qstate.StateVector.from_dense(N, vector / np.linalg.norm(vector)))
    return ProductInput(states, encoding)


def oracle_equivalence(trials=100, rng_seed=0):
    """
    The determinant and permutation-sum overlaps agree on random inputs.
    """
    rng = make_rng(rng_seed)
    checks = 0
    failures = []
    for N in (2, 3, 4):
        for encoding in Encoding:
            for _ in range(trials):
                product_input = random_product_input(N, encoding, rng)
                det = optics.antisym_overlap_det(product_input)
                brute = optics.antisym_overlap_bruteforce(product_input)
                checks += 1
                if abs(det - brute) > ORACLE_TOLERANCE:
                    failures.append(
                        "N=%d %s: %r != %r" % (N, encoding.value, det, brute)
                    )
    return checks, failures


def distinct_outcomes(unitaries=20, shots=20, rng_seed=0):
    """
    Measuring every qudit of |Psi> in one basis always gives N distinct
    outcomes, for Haar random bases and the Hadamard block basis.
    """
    rng = make_rng(rng_seed)
    checks = 0
    failures = []
    for N in (2, 3, 4):
        matrices = [unitary_group.rvs(N, random_state=rng) for _ in range(unitaries)]
        if N % 2 == 0:
            pairing = tuple((i, i + 1) for i in range(0, N, 2))
            matrices.append(optics.hadamard_blocks(pairing, N).matrix)
        for index, matrix in enumerate(matrices):
            checks += shots
            if not optics.distinct_outcomes_check(matrix, shots, rng):
                failures.append("N=%d: repeated outcome for basis %d" % (N, index))
    return checks, failures


def rrdps_exhaustive():
    """
    Every nonzero-probability branch of an honest MDI-RRDPS round gives
    Alice and Bob the same raw bit.
    """
    checks = 0
    failures = []
    for n in (1, 2):
        for branch in enumerate_rrdps_branches(FieldSpec(n)):
            checks += 1
            if branch.alice_raw != branch.bob_raw:
                failures.append("N=%d: %r disagrees" % (1 << n, branch.choices))
    return checks, failures


def rrdps_lo_exhaustive():
    """
    Successful linear optics RRDPS branches agree and succeed 1/N^2 of the
    time on average.
    """
    checks = 0
    failures = []
    for n in (1, 2):
        N = 1 << n
        branches = enumerate_rrdps_lo_branches(FieldSpec(n), Encoding.LOGICAL)
        for branch in successful(branches):
            checks += 1
            if branch.alice_raw != branch.bob_raw:
                failures.append("N=%d: %r disagrees" % (N, branch.choices))
        average = average_success_probability(branches)
        checks += 1
        if not math.isclose(average, 1 / N**2, abs_tol=qstate.TOLERANCE):
            failures.append("N=%d: average success %r" % (N, average))
    return checks, failures


def chau15_key_flip():
    """
    The derived Chau15 key correlation matches the frozen constant and every
    sifted successful branch agrees once it is applied.
    """
    checks = 0
    failures = []
    for n in (1, 2):
        spec = FieldSpec(n)
        checks += 1
        flip = derive_chau15_key_flip(spec)
        if flip != CHAU15_LO_KEY_FLIP:
            failures.append("N=%d: derived flip %d" % (spec.N, flip))
        for branch in enumerate_chau15_lo_branches(spec):
            if branch.sifted and branch.probability > qstate.TOLERANCE:
                checks += 1
                if branch.alice_raw != branch.bob_raw:
                    failures.append("N=%d: %r disagrees" % (spec.N, branch.choices))
    return checks, failures


def naive_attack():
    """
    In the naive scheme the phase-extraction attack learns Alice's bit on
    every branch without adding any disagreement.
    """
    checks = 0
    failures = []
    spec = FieldSpec(1)
    for attack in (False, True):
        for branch in enumerate_naive_chau15_branches(spec, attack):
            checks += 1
            if branch.alice_raw != branch.bob_raw:
                failures.append(
                    "attack=%s: %r disagrees" % (attack, branch.choices)
                )
            if attack:
                checks += 1
                if branch.charlie_guess != branch.alice_raw:
                    failures.append("attacker missed %r" % (branch.choices,))
    return checks, failures


SUITES = (
    ("field_axioms", field_axioms),
    ("bell_orthonormality", bell_orthonormality),
    ("swap_table", swap_table),
    ("oracle_equivalence", oracle_equivalence),
    ("distinct_outcomes", distinct_outcomes),
    ("rrdps_exhaustive", rrdps_exhaustive),
    ("rrdps_lo_exhaustive", rrdps_lo_exhaustive),
    ("chau15_key_flip", chau15_key_flip),
    ("naive_attack", naive_attack),
)


def run_suite(name, suite, *args):
    started = time.monotonic()
    try:
        checks, failures = suite(*args)
    except MdiqkdError as ex:
        checks, failures = 0, ["%s: %s" % (type(ex).__name__, ex)]
    logger.info(
        "Suite %s: %d checks, %d failures in %.2fs",
        name,
        checks,
        len(failures),
        time.monotonic() - started,
    )
    detail = "; ".join(failures[:MAX_REPORTED])
    if len(failures) > MAX_REPORTED:
        detail += "; and %d more" % (len(failures) - MAX_REPORTED)
    return SuiteResult(name, not failures, checks, detail)


def run_selftest(moduli=None):
    """
    Runs every suite. `moduli` replaces field moduli in the field axiom
    suite. Returns a list of SuiteResult.
    """
    results = []
    for name, suite in SUITES:
        args = (moduli,) if suite is field_axioms else ()
        results.append(run_suite(name, suite, *args))
    return results


def render_table(results):
    """
    The pass/fail table printed by `mdiqkd selftest`.
    """
    width = max(len("suite"), *(len(r.name) for r in results))
    lines = ["%-*s  %8s  %s" % (width, "suite", "checks", "result")]
    for result in results:
        line = "%-*s  %8d  %s" % (
            width,
            result.name,
            result.checks,
            "pass" if result.passed else "FAIL",
        )
        if result.detail:
            line += "  " + result.detail
        lines.append(line)
    passed = sum(r.passed for r in results)
    lines.append("%d of %d suites passed" % (passed, len(results)))
    return "\n".join(lines) + "\n"


def all_passed(results):
    return all(result.passed for result in results)
