"""
Tests for the protocols.utils module: the transcript, the round record and
the shared random choices.
"""
import json
import unittest

import numpy as np

from mdiqkd.errors import ProtocolOrderError, ValidationError
from mdiqkd.gf import FieldSpec
from mdiqkd.qstate import BellLabel
from mdiqkd.protocols.utils import (
    MEASUREMENT,
    PAIRS,
    Protocol,
    RoundRecord,
    Transcript,
    bits_of,
    draw_bits,
    draw_distinct_pair,
    draw_pairing,
    unsifted,
)


class TestTranscript(unittest.TestCase):
    """
    Ensures the transcript enforces the announcement order.
    """

    def test_pair_after_measurement(self):
        """
        Pairs announced after Charlie are logged in order.
        """
        transcript = Transcript()
        transcript.announce_measurement(True)
        transcript.announce_pair("bob", (2, 0))
        kinds = [event.kind for event in transcript.events]
        self.assertEqual([MEASUREMENT, PAIRS], kinds)
        self.assertEqual((2, 0), transcript.events[1].value)
        transcript.check_order()

    def test_pair_before_measurement_refused(self):
        transcript = Transcript()
        with self.assertRaises(ProtocolOrderError):
            transcript.announce_pair("bob", (0, 1))
        self.assertEqual((), transcript.events)

    def test_second_measurement_refused(self):
        transcript = Transcript()
        transcript.announce_measurement(None)
        with self.assertRaises(ProtocolOrderError):
            transcript.announce_measurement(None)

    def test_public_pairs(self):
        """
        In the naive scheme pairs come first and Charlie can read them.
        """
        transcript = Transcript(pairs_public=True)
        transcript.announce_pair("alice", (0, 1))
        transcript.announce_pair("bob", (1, 3))
        self.assertEqual(((0, 1), (1, 3)), transcript.pairs_before_measurement())
        transcript.check_order()

    def test_pairs_not_public(self):
        transcript = Transcript(pairs_public=True)
        transcript.announce_pair("alice", (0, 1))
        transcript.announce_measurement(None)
        transcript.announce_pair("bob", (1, 3))
        with self.assertRaises(ProtocolOrderError):
            transcript.pairs_before_measurement()

    def test_to_list(self):
        """
        The transcript serialises to plain JSON data.
        """
        spec = FieldSpec(2)
        transcript = Transcript()
        transcript.announce_measurement(BellLabel(spec.element(1), spec.element(3)))
        transcript.announce_pair("bob", (0, 2))
        expected = [[0, "charlie", MEASUREMENT, [1, 3]], [1, "bob", PAIRS, [0, 2]]]
        self.assertEqual(expected, transcript.to_list())
        self.assertEqual(expected, json.loads(json.dumps(transcript.to_list())))


class TestRoundRecord(unittest.TestCase):
    """
    Ensures round records only carry raw bits when sifted.
    """

    def test_unsifted_has_no_bits(self):
        record = unsifted(Protocol.MOTHER, 3, {}, lost=True)
        self.assertFalse(record.sifted)
        self.assertTrue(record.lost)
        self.assertEqual(0, record.raw_width)
        self.assertFalse(record.agrees)

    def test_bits_iff_sifted(self):
        with self.assertRaises(ValidationError):
            RoundRecord(Protocol.MOTHER, 0, {}, None, False, alice_raw=(1,), bob_raw=(1,))
        with self.assertRaises(ValidationError):
            RoundRecord(Protocol.MOTHER, 0, {}, None, True)
        with self.assertRaises(ValidationError):
            RoundRecord(Protocol.MOTHER, 0, {}, None, True, alice_raw=(1,), bob_raw=(1, 0))

    def test_agrees(self):
        record = RoundRecord(
            Protocol.MDI_RRDPS, 0, {}, None, True, alice_raw=(1,), bob_raw=(1,)
        )
        self.assertTrue(record.agrees)
        self.assertEqual(1, record.raw_width)

    def test_to_dict(self):
        """
        The record flattens to the documented fields.
        """
        transcript = Transcript()
        transcript.announce_measurement(True)
        transcript.announce_pair("bob", (1, 0))
        record = RoundRecord(
            Protocol.MDI_RRDPS_LO,
            7,
            {"t": 1},
            True,
            True,
            alice_raw=(0,),
            bob_raw=(0,),
            pairs=((1, 0),),
            transcript=transcript,
        )
        self.assertEqual(
            {
                "protocol": "mdi_rrdps_lo",
                "round": 7,
                "sifted": True,
                "lost": False,
                "announcement": True,
                "pairs": [[1, 0]],
                "alice_raw": [0],
                "bob_raw": [0],
                "charlie_guess": None,
                "transcript": [
                    [0, "charlie", MEASUREMENT, True],
                    [1, "bob", PAIRS, [1, 0]],
                ],
            },
            record.to_dict(),
        )

    def test_transcript_not_compared(self):
        first = unsifted(Protocol.MOTHER, 0, {}, transcript=Transcript())
        second = unsifted(Protocol.MOTHER, 0, {}, transcript=Transcript())
        self.assertEqual(first, second)


class TestChoices(unittest.TestCase):
    """
    Ensures the random choices have the right shape.
    """

    def test_draw_bits(self):
        bits = draw_bits(np.random.default_rng(0), 8)
        self.assertEqual(8, len(bits))
        self.assertTrue(set(bits) <= {0, 1})
        self.assertTrue(all(type(b) is int for b in bits))

    def test_draw_distinct_pair(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            j, k = draw_distinct_pair(rng, 4)
            self.assertNotEqual(j, k)
            self.assertTrue(0 <= j < 4 and 0 <= k < 4)

    def test_draw_pairing(self):
        """
        A pairing covers every element exactly once.
        """
        rng = np.random.default_rng(2)
        for _ in range(20):
            pairing = draw_pairing(rng, 8)
            self.assertEqual(4, len(pairing))
            self.assertEqual(list(range(8)), sorted(v for pair in pairing for v in pair))

    def test_bits_of(self):
        """
        Most significant bit first.
        """
        self.assertEqual((1, 0, 1), bits_of(5, 3))
        self.assertEqual((0, 0, 1, 1), bits_of(3, 4))
        self.assertEqual((1,), bits_of(1, 1))
