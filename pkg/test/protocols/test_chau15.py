"""
Tests for the two MDI-Chau15 schemes.
"""
import math
import unittest
from collections import defaultdict

from mdiqkd.channel import ChannelModel, CharlieModel, NaiveAnnouncement
from mdiqkd.errors import CapabilityError, UsageError
from mdiqkd.gf import FieldSpec
from mdiqkd.optics import Encoding, antisym_overlap_bruteforce
from mdiqkd.protocols.chau15 import (
    CHAU15_LO_KEY_FLIP,
    Chau15AliceChoice,
    chau15_alice_prepare,
    derive_chau15_key_flip,
    enumerate_chau15_lo_branches,
    enumerate_naive_chau15_branches,
    naive_bob_raw,
    run_mdi_chau15_lo_round,
    run_naive_chau15_round,
)
from mdiqkd.protocols.utils import MEASUREMENT, PAIRS, Protocol
from mdiqkd.rng import round_seed


class TestChau15AliceChoice(unittest.TestCase):
    def test_invalid(self):
        spec = FieldSpec(2)
        with self.assertRaises(UsageError):
            Chau15AliceChoice(spec, 0, 1, 1)
        with self.assertRaises(UsageError):
            Chau15AliceChoice(spec, 0, 1, 4)

    def test_state(self):
        state = chau15_alice_prepare(Chau15AliceChoice(FieldSpec(2), 1, 0, 3))
        self.assertAlmostEqual(1 / math.sqrt(2), state.amplitude(0).real)
        self.assertAlmostEqual(-1 / math.sqrt(2), state.amplitude(3).real)


class TestKeyFlip(unittest.TestCase):
    """
    Ensures the correlation between s and t on sifted rounds.
    """

    def test_derived_flip(self):
        """
        The permutation-sum oracle finds s = t on every sifted branch, which
        is the constant used by the protocol.
        """
        for n in (1, 2):
            for encoding in Encoding:
                self.assertEqual(0, derive_chau15_key_flip(FieldSpec(n), encoding))
        self.assertEqual(0, CHAU15_LO_KEY_FLIP)

    def test_sifted_branches_agree(self):
        for n in (1, 2):
            for branch in enumerate_chau15_lo_branches(FieldSpec(n)):
                if branch.sifted and branch.probability > 1e-12:
                    self.assertEqual(branch.alice_raw, branch.bob_raw, repr(branch.choices))

    def test_oracles_agree(self):
        """
        Determinant and permutation-sum branches give the same probabilities.
        """
        spec = FieldSpec(2)
        det = enumerate_chau15_lo_branches(spec)
        brute = enumerate_chau15_lo_branches(spec, oracle=antisym_overlap_bruteforce)
        self.assertEqual(len(det), len(brute))
        for first, second in zip(det, brute):
            self.assertAlmostEqual(first.probability, second.probability)

    def test_gf2_always_sifts(self):
        """
        With N = 2 there is a single pair, so every branch is sifted.
        """
        self.assertTrue(all(b.sifted for b in enumerate_chau15_lo_branches(FieldSpec(1))))

    def test_capability(self):
        with self.assertRaises(CapabilityError):
            enumerate_chau15_lo_branches(FieldSpec(3))


class TestChau15LoRound(unittest.TestCase):
    """
    Ensures sampled linear optics rounds behave.
    """

    def test_sifted_rounds_agree(self):
        spec = FieldSpec(2)
        sifted = 0
        for i in range(1000):
            record = run_mdi_chau15_lo_round(spec, round_seed(4, i), round_index=i)
            self.assertIs(Protocol.MDI_CHAU15_LO, record.protocol)
            if record.announcement:
                self.assertEqual(
                    [MEASUREMENT, PAIRS, PAIRS],
                    [e.kind for e in record.transcript.events],
                )
                record.transcript.check_order()
            if record.sifted:
                sifted += 1
                self.assertTrue(record.agrees, "round %d" % i)
                self.assertEqual(
                    set(record.pairs[0]), set(record.pairs[1]), "round %d" % i
                )
        self.assertGreater(sifted, 0)

    def test_silent(self):
        record = run_mdi_chau15_lo_round(FieldSpec(1), 0, charlie=CharlieModel("silent"))
        self.assertFalse(record.sifted)
        self.assertIsNone(record.announcement)

    def test_capability(self):
        with self.assertRaises(CapabilityError):
            run_mdi_chau15_lo_round(FieldSpec(3), 0)


class TestNaiveChau15(unittest.TestCase):
    """
    Ensures the naive scheme works for an honest Charlie and leaks the key
    to a cheating one without raising the error rate.
    """

    def test_bob_raw(self):
        self.assertEqual(0, naive_bob_raw(1, NaiveAnnouncement(0, 1)))
        self.assertEqual(1, naive_bob_raw(1, NaiveAnnouncement(1, 0)))

    def test_honest_branches(self):
        """
        Every branch agrees, and each choice's outcomes sum to one.
        """
        totals = defaultdict(float)
        for branch in enumerate_naive_chau15_branches(FieldSpec(2)):
            self.assertEqual(branch.alice_raw, branch.bob_raw)
            self.assertIsNone(branch.charlie_guess)
            choices = branch.choices
            key = (choices["s"], choices["t"], choices["alice_pair"], choices["bob_pair"])
            totals[key] += branch.probability
        self.assertEqual(4 * 12 * 12, len(totals))
        for total in totals.values():
            self.assertAlmostEqual(1.0, total)

    def test_attacked_branches(self):
        """
        Under attack the keys still agree and Charlie always knows Alice's
        bit.
        """
        for n in (1, 2):
            for branch in enumerate_naive_chau15_branches(FieldSpec(n), attack=True):
                self.assertEqual(branch.alice_raw, branch.bob_raw)
                self.assertEqual(branch.alice_raw, branch.charlie_guess)

    def test_enumeration_capability(self):
        with self.assertRaises(CapabilityError):
            enumerate_naive_chau15_branches(FieldSpec(3))

    def test_attacked_rounds(self):
        spec = FieldSpec(2)
        for i in range(100):
            record = run_naive_chau15_round(
                spec, round_seed(6, i), charlie=CharlieModel("naive_attacker")
            )
            self.assertTrue(record.sifted)
            self.assertTrue(record.agrees)
            self.assertEqual(record.alice_raw, record.charlie_guess)

    def test_pairs_public_first(self):
        record = run_naive_chau15_round(FieldSpec(2), 0)
        self.assertEqual(
            [PAIRS, PAIRS, MEASUREMENT], [e.kind for e in record.transcript.events]
        )

    def test_honest_guess_is_a_coin(self):
        """
        An honest Charlie's guess matches Alice's bit about half the time.
        """
        spec = FieldSpec(1)
        rounds = 400
        hits = 0
        for i in range(rounds):
            record = run_naive_chau15_round(spec, round_seed(7, i))
            self.assertTrue(record.agrees)
            hits += record.charlie_guess == record.alice_raw
        self.assertLess(abs(hits - rounds / 2), 4 * math.sqrt(rounds / 4))

    def test_lost(self):
        record = run_naive_chau15_round(FieldSpec(1), 0, ChannelModel("loss", 1.0))
        self.assertTrue(record.lost)
