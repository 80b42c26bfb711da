#!/usr/bin/env python3
"""
Tests for the abelian_lab.py command line: subcommands run end to end in a
subprocess, exit codes, error paths and scenario parsing.
"""

import json
import os
import subprocess
import sys
import tempfile
import unittest

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, REPO_ROOT)

from abelian_lab import EXIT_INPUT, EXIT_NO, EXIT_OK, create_cli_parser
from alab.errors import ScenarioError
from alab.scenario import parse_scenario, validate_inputs


def run_cli(*args):
    env = {k: v for k, v in os.environ.items() if not k.startswith("ALAB_")}
    cmd = [sys.executable, "abelian_lab.py", *args]
    return subprocess.run(cmd, capture_output=True, text=True, cwd=REPO_ROOT, env=env)


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, document):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f)
        return path

    def test_snf_of_identity(self):
        path = self.write("matrix.json", [[1, 0], [0, 1]])
        result = run_cli("snf", "--in", path)
        self.assertEqual(result.returncode, EXIT_OK, result.stderr)
        self.assertIn("=== SMITH NORMAL FORM ===", result.stdout)
        self.assertIn("Invariant factors: (1, 1)", result.stdout)

    def test_purity_with_flags(self):
        ambient = self.write("Z2.json", {"free_rank": 2})
        result = run_cli("purity", "--ambient", ambient, "--gens", "[[2,0]]")
        self.assertEqual(result.returncode, EXIT_NO, result.stderr)
        self.assertIn("Pure: no", result.stdout)
        result = run_cli("purity", "--ambient", ambient, "--gens", "[[1,2]]")
        self.assertEqual(result.returncode, EXIT_OK, result.stderr)
        self.assertIn("Pure: yes", result.stdout)

    def test_chain_with_flags(self):
        base = self.write("Z.json", {"free_rank": 1})
        result = run_cli("chain", "--class", "ktf", "--base", base, "--steps", "3", "--m", "1", "--P", "2")
        self.assertEqual(result.returncode, EXIT_OK, result.stderr)
        self.assertIn("dim_mod_2 log: (1, 2, 3, 4)", result.stdout)
        self.assertIn("Algebraically compact: no", result.stdout)

    def test_short_omega_chain_skips_the_comparison(self):
        base = self.write("Z.json", {"free_rank": 1})
        result = run_cli("chain", "--class", "ktf", "--base", base, "--steps", "2")
        self.assertEqual(result.returncode, EXIT_OK, result.stderr)
        self.assertIn("omega comparison skipped: needs at least 3 steps", result.stdout)

    def test_probe_needs_two_prefixes(self):
        path = self.write("probe.json", {"version": 1, "operation": "probe", "inputs": {
            "group": {"free_rank": 1}, "stream": {"family": "shift-recurrence", "p": 2}, "N_max": 1}})
        result = run_cli("probe", "--in", path)
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("$.inputs.N_max", result.stderr)

    def test_schema_error_names_the_path(self):
        path = self.write("bad.json", {"version": 1, "operation": "snf", "inputs": {"matrix": [[1, "a"]]}})
        result = run_cli("snf", "--in", path)
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("Error: $.inputs.matrix[0][1]", result.stderr)

    def test_operation_mismatch(self):
        path = self.write("snf.json", {"version": 1, "operation": "snf", "inputs": {"matrix": [[1]]}})
        result = run_cli("purity", "--in", path)
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("$.operation", result.stderr)

    def test_missing_file(self):
        result = run_cli("snf", "--in", os.path.join(self.tmp.name, "missing.json"))
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("cannot read", result.stderr)

    def test_missing_inputs(self):
        result = run_cli("solve")
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("needs --in", result.stderr)

    def test_verify_round_trip(self):
        ambient = self.write("Z2.json", {"free_rank": 2})
        result = run_cli("purity", "--ambient", ambient, "--gens", "[[2,0]]", "--json")
        certificate = json.loads(result.stdout)["certificate"]

        path = self.write("certificate.json", {"certificate": certificate})
        result = run_cli("verify", "--in", path, "--json")
        self.assertEqual(result.returncode, EXIT_OK, result.stderr)
        self.assertTrue(json.loads(result.stdout)["verified"])

        certificate["n"] = "3"
        path = self.write("tampered.json", {"certificate": certificate})
        result = run_cli("verify", "--in", path)
        self.assertEqual(result.returncode, EXIT_NO)
        self.assertIn("Verified: no", result.stdout)

    def test_bad_log_level(self):
        path = self.write("matrix.json", [[2]])
        result = run_cli("snf", "--in", path, "--log-level", "LOUD")
        self.assertEqual(result.returncode, EXIT_INPUT)
        self.assertIn("unknown log level", result.stderr)


class TestParser(unittest.TestCase):

    def test_chain_flags(self):
        args = create_cli_parser().parse_args(["chain", "--class", "ktf", "--steps", "3", "--P", "5"])
        self.assertEqual((args.operation, args.chain_class, args.steps, args.prime_bound), ("chain", "ktf", 3, 5))

    def test_subcommand_is_required(self):
        with pytest.raises(SystemExit):
            create_cli_parser().parse_args([])


class TestScenarioParsing(unittest.TestCase):

    def test_full_scenario(self):
        scenario = parse_scenario({"version": 1, "operation": "snf", "inputs": {"matrix": [[2, 4]]}}, "snf")
        self.assertEqual(scenario.prefix, "$.inputs")
        self.assertEqual(scenario.path("matrix", 0), "$.inputs.matrix[0]")

    def test_bare_matrix(self):
        scenario = parse_scenario([[1, 2], [3, 4]], "snf")
        self.assertEqual(scenario.get("matrix"), [[1, 2], [3, 4]])
        self.assertEqual(scenario.prefix, "$")

    def test_unknown_field_is_rejected(self):
        with pytest.raises(ScenarioError) as excinfo:
            parse_scenario({"matrix": [[1]], "extra": 1}, "snf")
        self.assertEqual(excinfo.value.path, "$")

    def test_wrong_version(self):
        with pytest.raises(ScenarioError):
            parse_scenario({"version": 2, "operation": "snf", "inputs": {"matrix": [[1]]}}, "snf")

    def test_decimal_rationals_are_rejected(self):
        inputs = {"base": {"summands": [{"atom": "Q"}]}, "left": {"free_rank": 1}, "right": {"free_rank": 1},
                  "f1": [["0.5"]], "f2": [["1"]]}
        with pytest.raises(ScenarioError) as excinfo:
            validate_inputs("amalgamate", inputs)
        self.assertEqual(excinfo.value.path, "$.inputs.f1[0][0]")

    def test_unknown_operation(self):
        with pytest.raises(ScenarioError, match="unknown operation"):
            validate_inputs("factor", {})


if __name__ == '__main__':
    unittest.main(verbosity=2)
