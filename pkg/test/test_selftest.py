"""
Tests for the selftest module.
"""
import unittest

from mdiqkd.errors import CapabilityError
from mdiqkd.selftest import (
    SUITES,
    SuiteResult,
    all_passed,
    field_axioms,
    oracle_equivalence,
    render_table,
    run_selftest,
    run_suite,
)


class TestSuites(unittest.TestCase):
    """
    Ensures the suites pass on a correct build and notice a broken field.
    """

    @classmethod
    def setUpClass(cls):
        cls.results = run_selftest()

    def test_everything_passes(self):
        self.assertEqual([name for name, _ in SUITES], [r.name for r in self.results])
        for result in self.results:
            self.assertTrue(result.passed, "%s: %s" % (result.name, result.detail))
            self.assertGreater(result.checks, 0, result.name)
        self.assertTrue(all_passed(self.results))

    def test_reducible_modulus_fails(self):
        """
        Replacing the GF(4) modulus by x^2 + 1 breaks the field axioms.
        """
        checks, failures = field_axioms({2: 0b101})
        self.assertTrue(failures)
        self.assertIn("n=2", failures[0])
        self.assertGreater(checks, 0)

    def test_selftest_with_broken_modulus(self):
        results = run_selftest({2: 0b101})
        self.assertFalse(all_passed(results))
        self.assertFalse(results[0].passed)
        self.assertTrue(all(r.passed for r in results[1:]))

    def test_oracle_equivalence(self):
        checks, failures = oracle_equivalence(trials=5, rng_seed=1)
        self.assertEqual(3 * 2 * 5, checks)
        self.assertEqual([], failures)


class TestRunSuite(unittest.TestCase):
    def test_library_error_fails_suite(self):
        def broken():
            raise CapabilityError("too big")

        result = run_suite("broken", broken)
        self.assertFalse(result.passed)
        self.assertEqual(0, result.checks)
        self.assertEqual("CapabilityError: too big", result.detail)

    def test_detail_is_truncated(self):
        result = run_suite("noisy", lambda: (10, ["f%d" % i for i in range(8)]))
        self.assertEqual("f0; f1; f2; f3; f4; and 3 more", result.detail)


class TestRenderTable(unittest.TestCase):
    def test_table(self):
        results = [
            SuiteResult("field_axioms", True, 12, ""),
            SuiteResult("swap", False, 3, "N=2: wrong"),
        ]
        lines = render_table(results).splitlines()
        self.assertEqual(["suite", "checks", "result"], lines[0].split())
        self.assertEqual(["field_axioms", "12", "pass"], lines[1].split())
        self.assertTrue(lines[2].endswith("FAIL  N=2: wrong"))
        self.assertEqual("1 of 2 suites passed", lines[3])
