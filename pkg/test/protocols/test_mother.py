"""
Tests for the mother-of-all entanglement swapping scheme.
"""
import math
import unittest

from mdiqkd.channel import ChannelModel, CharlieModel, depolarizing_disagreement_rate
from mdiqkd.errors import ProtocolOrderError, UsageError
from mdiqkd.gf import FieldSpec
from mdiqkd.protocols.mother import run_mother_of_all_session, run_mother_round
from mdiqkd.protocols.utils import MEASUREMENT, Protocol
from mdiqkd.rng import round_seed
from mdiqkd.swap import CorrectedBy


class TestRunMotherRound(unittest.TestCase):
    """
    Ensures single rounds of the scheme behave.
    """

    def test_noiseless_rounds_agree(self):
        """
        Every noiseless round is sifted and gives both parties the same n
        bits, whoever corrects.
        """
        spec = FieldSpec(3)
        for seed in range(40):
            for corrected_by in CorrectedBy:
                record = run_mother_round(spec, seed, corrected_by=corrected_by)
                self.assertIs(Protocol.MOTHER, record.protocol)
                self.assertTrue(record.sifted)
                self.assertEqual(3, record.raw_width)
                self.assertEqual(record.alice_raw, record.bob_raw)

    def test_announcement_logged(self):
        record = run_mother_round(FieldSpec(2), 1, round_index=4)
        self.assertEqual(4, record.round_index)
        self.assertEqual(MEASUREMENT, record.transcript.events[0].kind)
        self.assertEqual(record.announcement, record.transcript.events[0].value)

    def test_silent_charlie(self):
        record = run_mother_round(FieldSpec(1), 0, charlie=CharlieModel("silent"))
        self.assertFalse(record.sifted)
        self.assertIsNone(record.announcement)

    def test_lost_round(self):
        record = run_mother_round(FieldSpec(1), 0, ChannelModel("loss", 1.0))
        self.assertTrue(record.lost)
        self.assertFalse(record.sifted)

    def test_attack_refused(self):
        """
        There are no public pairs for a phase-extraction attack here.
        """
        with self.assertRaises(ProtocolOrderError):
            run_mother_round(FieldSpec(1), 0, charlie=CharlieModel("naive_attacker"))

    def test_depolarizing_disagreement_rate(self):
        """
        The fraction of rounds with different symbols matches the analytic
        trajectory rate within 4 sigma.
        """
        spec = FieldSpec(2)
        p = 0.2
        channel = ChannelModel("depolarizing", p)
        rounds = 3000
        disagreements = sum(
            not run_mother_round(spec, round_seed(9, i), channel).agrees
            for i in range(rounds)
        )
        expected = depolarizing_disagreement_rate(p, spec.N)
        sigma = math.sqrt(expected * (1 - expected) / rounds)
        self.assertLess(abs(disagreements / rounds - expected), 4 * sigma)


class TestMotherOfAllSession(unittest.TestCase):
    """
    Ensures whole sessions of the scheme distill a shared key.
    """

    def test_noiseless_session(self):
        report = run_mother_of_all_session(FieldSpec(2), 300, rng_seed=1)
        self.assertEqual(1.0, report.agreement_rate)
        self.assertEqual(0.0, report.raw_qber)
        self.assertEqual(0.0, report.qber_estimate)
        self.assertEqual(600, report.sifted_bits)
        self.assertTrue(report.key_agreement)
        self.assertGreater(report.final_key_length, 0)

    def test_noise_lowers_agreement(self):
        spec = FieldSpec(2)
        quiet = run_mother_of_all_session(spec, 300, 2, ChannelModel("depolarizing", 0.05))
        loud = run_mother_of_all_session(spec, 300, 2, ChannelModel("depolarizing", 0.4))
        self.assertLess(quiet.agreement_rate, 1.0)
        self.assertLess(loud.agreement_rate, quiet.agreement_rate)

    def test_needs_rounds(self):
        with self.assertRaises(UsageError):
            run_mother_of_all_session(FieldSpec(1), 0)
