#!/usr/bin/env python3
"""
Unit tests for finite linear systems and equation streams over structured
groups.
"""

import copy
import os
import sys
import unittest
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from alab.certificates import certificate_from_dict, verify_certificate
from alab.errors import InvalidElementError, PreconditionError
from alab.equation_systems import (
    BoundedEvidence,
    Equation,
    FullSolution,
    LinearSystem,
    NonCompactnessEvidence,
    NotFinitelySolvable,
    SystemStream,
    compactness_probe,
    prefix_solvable,
    solve_finite,
)
from alab.fg_groups import FgGroup
from alab.structured_groups import Completion, Loc, Pruefer, Q, StructuredGroup, Z, Zmod


def one_equation(atom, coefficient, constant):
    G = StructuredGroup((atom,))
    return G, LinearSystem(G, (Equation.of({"x": coefficient}, G.element([constant])),))


def tampered(certificate, mutate):
    data = copy.deepcopy(certificate.to_dict())
    mutate(data)
    return certificate_from_dict(data)


class TestSolveFinite(unittest.TestCase):

    def test_integer_equation(self):
        G, system = one_equation(Z(), 2, 4)
        outcome = solve_finite(G, system)
        self.assertTrue(outcome.solvable)
        self.assertEqual(outcome.assignment["x"].components, (2,))

    def test_integer_obstruction(self):
        G, system = one_equation(Z(), 2, 3)
        outcome = solve_finite(G, system)
        self.assertFalse(outcome.solvable)
        certificate = outcome.certificate
        self.assertEqual(certificate.reason, "modulus-obstruction")
        self.assertEqual(certificate.data["modulus"], "2")
        self.assertTrue(verify_certificate(certificate_from_dict(certificate.to_dict())))

    def test_tampered_modulus_is_rejected(self):
        G, system = one_equation(Z(), 2, 3)
        certificate = solve_finite(G, system).certificate
        bad = tampered(certificate, lambda d: d["data"].update(modulus="3"))
        self.assertFalse(verify_certificate(bad))

    def test_rational_equation(self):
        G, system = one_equation(Q(), 2, 3)
        self.assertEqual(solve_finite(G, system).assignment["x"].components, (Fraction(3, 2),))

    def test_cyclic_equation(self):
        G, system = one_equation(Zmod(6), 2, 4)
        outcome = solve_finite(G, system)
        self.assertTrue(outcome.solvable)
        self.assertTrue(system.is_solved_by(outcome.assignment))
        G, system = one_equation(Zmod(6), 2, 3)
        self.assertFalse(solve_finite(G, system).solvable)

    def test_pruefer_equation(self):
        G, system = one_equation(Pruefer(2), 2, "1/2")
        self.assertEqual(solve_finite(G, system).assignment["x"].components, (Fraction(1, 4),))

    def test_two_unknowns_need_division_by_two(self):
        for atom, solvable in ((Z(), False), (Loc(3), True), (Loc(2), False)):
            G = StructuredGroup((atom,))
            system = LinearSystem(G, (
                Equation.of({"x": 1, "y": 1}, G.element([1])),
                Equation.of({"x": 1, "y": -1}, G.zero()),
            ))
            outcome = solve_finite(G, system)
            self.assertEqual(outcome.solvable, solvable, atom.label())
            if solvable:
                self.assertEqual(outcome.assignment["x"].components, (Fraction(1, 2),))
            else:
                self.assertTrue(verify_certificate(outcome.certificate))

    def test_fg_group_is_accepted(self):
        G = StructuredGroup((Z(), Z()))
        system = LinearSystem(G, (Equation.of({"x": 3}, G.element([3, 6])),))
        self.assertEqual(solve_finite(FgGroup(2), system).assignment["x"].components, (1, 2))

    def test_group_mismatch(self):
        G, system = one_equation(Z(), 1, 1)
        with pytest.raises(InvalidElementError):
            solve_finite(StructuredGroup((Q(),)), system)
        with pytest.raises(InvalidElementError):
            LinearSystem(StructuredGroup((Q(),)), system.equations)


class TestStreams(unittest.TestCase):

    def test_unknown_family(self):
        with pytest.raises(PreconditionError, match="unknown stream family"):
            SystemStream("ladder", 2)

    def test_prefix_length(self):
        with pytest.raises(PreconditionError):
            prefix_solvable(FgGroup(1), SystemStream("shift-recurrence", 2), 0)

    def test_shift_recurrence_over_free_group(self):
        G = StructuredGroup((Z(),) * 4)
        evidence = compactness_probe(G, SystemStream("shift-recurrence", 2), 4)
        self.assertIsInstance(evidence, NonCompactnessEvidence)
        self.assertEqual(evidence.certificate.reason, "support-growth")
        self.assertTrue(verify_certificate(certificate_from_dict(evidence.certificate.to_dict())))

    def test_tampered_growth_certificate(self):
        G = StructuredGroup((Z(),) * 4)
        certificate = compactness_probe(G, SystemStream("shift-recurrence", 2), 4).certificate
        data = copy.deepcopy(certificate.to_dict())
        data["data"]["prefix_solutions"][0] = ["12345"] * 4
        self.assertFalse(verify_certificate(certificate_from_dict(data)))

    def test_shift_recurrence_over_divisible_group(self):
        G = StructuredGroup((Q(),) * 3)
        outcome = compactness_probe(G, SystemStream("shift-recurrence", 2), 4)
        self.assertIsInstance(outcome, FullSolution)
        self.assertTrue(G.is_zero(outcome.assignment["x3"]))

    def test_constants_run_out(self):
        outcome = compactness_probe(FgGroup(2), SystemStream("shift-recurrence", 3), 5)
        self.assertIsInstance(outcome, FullSolution)
        self.assertIn("constants vanish after 2", outcome.argument)

    def test_height_ladder_over_completion(self):
        G = StructuredGroup((Completion(3, 8, 4),))
        outcome = compactness_probe(G, SystemStream("height-ladder", 3), 4)
        self.assertIsInstance(outcome, FullSolution)
        self.assertIn("completion", outcome.argument)
        self.assertEqual(outcome.assignment["x"].components, ((1, 3, 9, 27),))

    def test_height_ladder_over_free_group(self):
        G = StructuredGroup((Z(),) * 3)
        evidence = compactness_probe(G, SystemStream("height-ladder", 2), 3)
        self.assertIsInstance(evidence, NonCompactnessEvidence)
        self.assertEqual(evidence.certificate.reason, "height-demand")
        self.assertTrue(verify_certificate(evidence.certificate))

    def test_explicit_stream_gets_bounded_evidence(self):
        s = SystemStream("explicit", equations=({"coefficients": {"x": 2}, "constant": ["4"]},))
        outcome = compactness_probe(FgGroup(1), s, 3)
        self.assertIsInstance(outcome, BoundedEvidence)
        self.assertEqual(outcome.checked_up_to, 3)

    def test_explicit_stream_without_solution(self):
        s = SystemStream("explicit", equations=({"coefficients": {"x": 2}, "constant": ["3"]},))
        outcome = compactness_probe(FgGroup(1), s, 3)
        self.assertIsInstance(outcome, NotFinitelySolvable)
        self.assertEqual(outcome.N, 1)

    def test_probe_needs_two_prefixes(self):
        for n_max in (0, 1):
            with pytest.raises(PreconditionError, match="N_max must be at least 2"):
                compactness_probe(FgGroup(1), SystemStream("shift-recurrence", 2), n_max)


if __name__ == '__main__':
    unittest.main(verbosity=2)
