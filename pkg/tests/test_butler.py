#!/usr/bin/env python3
"""
Unit tests for completely decomposable groups, pure closures inside them,
the pushout over a divisible base and the instability demo.
"""

import os
import random
import sys
import unittest
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from alab.butler import (
    CompletelyDecomposable,
    amalgamation_pushout,
    as_completely_decomposable,
    cd_vector,
    closure_claim_holds,
    closure_generators,
    direct_sum_cd,
    instability_demo,
    purify_in_cd,
)
from alab.certificates import certificate_from_dict, verify_certificate
from alab.characteristics import Characteristic, RankOneGroup, rank_one_from_atom
from alab.errors import DimensionMismatchError, InvalidElementError, PreconditionError
from alab.exact_linalg import rational_rank
from alab.fg_groups import FgGroup
from alab.structured_groups import Loc, Pruefer, Q, StructuredGroup, Z


def random_embedding_rows(rng, r, width):
    while True:
        square = [[Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(r)] for _ in range(r)]
        if rational_rank(square) == r:
            return [[str(c) for c in row] + ["0"] * (width - r) for row in square]


def random_amalgamation(rng):
    """Base Q^r with H1, H2 = Q^r plus up to two extra atoms each."""
    menu = [Z(), Q(), Loc(2), Loc(3), Loc(5)]
    r = rng.randint(0, 2)
    low = 0 if r else 1
    H1 = StructuredGroup((Q(),) * r + tuple(rng.choice(menu) for _ in range(rng.randint(low, 2))))
    H2 = StructuredGroup((Q(),) * r + tuple(rng.choice(menu) for _ in range(rng.randint(low, 2))))
    f1 = random_embedding_rows(rng, r, len(H1))
    f2 = random_embedding_rows(rng, r, len(H2))
    return StructuredGroup((Q(),) * r), H1, H2, f1, f2


class TestCompletelyDecomposable(unittest.TestCase):

    def test_views(self):
        C = as_completely_decomposable(StructuredGroup((Z(), Loc(3), Q())))
        self.assertEqual(C.rank, 3)
        self.assertTrue(C.member((1, "1/2", "1/3")))
        self.assertFalse(C.member((1, "1/3", 0)))
        self.assertEqual(cd_vector([4, -1], FgGroup(2)), (Fraction(4), Fraction(-1)))

    def test_direct_sum_concatenates_summands(self):
        left = CompletelyDecomposable((rank_one_from_atom("Z"),))
        right = CompletelyDecomposable((rank_one_from_atom("Q"), rank_one_from_atom("Loc", 3)))
        total = direct_sum_cd(left, right)
        self.assertEqual(total.rank, 3)
        self.assertEqual(total.summands, left.summands + right.summands)
        self.assertTrue(total.member((1, "1/7", "1/2")))
        self.assertFalse(total.member(("1/2", 0, 0)))

    def test_torsion_has_no_view(self):
        with pytest.raises(PreconditionError, match="torsion"):
            as_completely_decomposable(FgGroup(1, (3,)))
        with pytest.raises(PreconditionError):
            as_completely_decomposable(StructuredGroup((Pruefer(2),)))

    def test_json_round_trip(self):
        C = CompletelyDecomposable((rank_one_from_atom("Z"), rank_one_from_atom("Loc", 5)))
        self.assertEqual(CompletelyDecomposable.from_json(C.to_json()), C)
        self.assertEqual(CompletelyDecomposable.from_json(C.to_json()["summands"]), C)


class TestPurifyInCd(unittest.TestCase):

    def test_lattice_like_ambient(self):
        C = CompletelyDecomposable((
            RankOneGroup(Characteristic.of(0)),
            RankOneGroup(Characteristic.of(0, {2: 1})),
        ))
        witness = purify_in_cd([(2, 1)], C)
        self.assertEqual(witness.rank, 1)
        self.assertIsNotNone(witness.lattice)
        self.assertEqual(len(witness.lattice), 1)
        self.assertTrue(witness.contains((1, "1/2")))
        self.assertFalse(witness.contains((1, 0)))
        self.assertTrue(verify_certificate(certificate_from_dict(witness.certificate.to_dict())))

    def test_divisible_summand_has_no_lattice(self):
        C = as_completely_decomposable(StructuredGroup((Q(), Z())))
        witness = purify_in_cd([(1, 0)], C)
        self.assertIsNone(witness.lattice)
        self.assertTrue(witness.contains(("1/3", 0)))
        self.assertFalse(witness.contains((0, 1)))

    def test_generator_outside_ambient(self):
        C = as_completely_decomposable(FgGroup(2))
        with pytest.raises(InvalidElementError):
            purify_in_cd([("1/2", 0)], C)

    def test_tampered_span_is_rejected(self):
        C = as_completely_decomposable(FgGroup(2))
        data = purify_in_cd([(2, 4)], C).certificate.to_dict()
        data["context"]["cd_closure"]["span"] = [["1", "0"]]
        self.assertFalse(verify_certificate(certificate_from_dict(data)))


class TestPushout(unittest.TestCase):

    def setUp(self):
        self.G = StructuredGroup((Q(),))
        self.H1 = StructuredGroup((Q(), Z()))
        self.H2 = StructuredGroup((Q(), Loc(2)))

    def test_amalgamation_over_q(self):
        result = amalgamation_pushout(self.G, self.H1, self.H2, [["1", "0"]], [["1", "0"]], bound=12, samples=8)
        self.assertTrue(result.ok, result.checks)
        self.assertEqual(result.group.rank, 3)
        self.assertEqual(len(result.certificates), 4)
        for certificate in result.certificates:
            self.assertTrue(verify_certificate(certificate_from_dict(certificate.to_dict())))

    def test_closure_claim_decomposes_samples(self):
        result = amalgamation_pushout(self.G, self.H1, self.H2, [["1", "0"]], [["1", "0"]])
        self.assertTrue(result.checks["closure_claim"])
        E = result.group
        generators = closure_generators(E)
        self.assertEqual(len(generators), E.rank)
        x = ("1/3", 5, "2/7", "5/3")
        self.assertTrue(closure_claim_holds(E, x, generators))

    def test_wrong_decomposition_fails_the_claim(self):
        E = amalgamation_pushout(self.G, self.H1, self.H2, [["1", "0"]], [["1", "0"]]).group
        without_z = [g for g in closure_generators(E) if g[1] == 0]
        self.assertFalse(closure_claim_holds(E, ("1/3", 5, "2/7", "5/3"), without_z))
        self.assertFalse(closure_claim_holds(E, E.ambient.unit_vector(1), without_z))
        self.assertTrue(closure_claim_holds(E, ("1/3", 0, "2/7", "5/3"), without_z))

    def test_base_copies_are_identified(self):
        E = amalgamation_pushout(self.G, self.H1, self.H2, [["2", "0"]], [["1", "0"]]).group
        self.assertEqual(E.embed_left(("2", 0)), E.embed_right((1, 0)))
        self.assertEqual(E.p_height(E.embed_left((0, 4)), 2), 2)

    def test_random_divisible_bases(self):
        rng = random.Random(29)
        for _ in range(100):
            G, H1, H2, f1, f2 = random_amalgamation(rng)
            result = amalgamation_pushout(G, H1, H2, f1, f2, bound=8, samples=4, seed=rng.randrange(1000))
            self.assertTrue(result.ok, f"{H1.label()} {H2.label()} {f1} {f2} {result.checks}")
            self.assertEqual(result.group.rank, len(H1) + len(H2) - len(G))
            for certificate in result.certificates:
                self.assertTrue(verify_certificate(certificate_from_dict(certificate.to_dict())))

    def test_map_onto_reduced_summand_is_rejected(self):
        with pytest.raises(PreconditionError, match="not a pure injective map"):
            amalgamation_pushout(self.G, self.H1, self.H2, [["0", "1"]], [["1", "0"]])

    def test_base_must_be_divisible(self):
        with pytest.raises(PreconditionError, match="not divisible"):
            amalgamation_pushout(StructuredGroup((Z(),)), self.H1, self.H2, [["1", "0"]], [["1", "0"]])

    def test_map_shape(self):
        with pytest.raises(DimensionMismatchError):
            amalgamation_pushout(self.G, self.H1, self.H2, [], [["1", "0"]])


class TestInstability(unittest.TestCase):

    def test_every_pair_is_separated(self):
        report = instability_demo(as_completely_decomposable(FgGroup(1)), 4, seed=1)
        self.assertEqual(len(report.verdicts), 6)
        self.assertEqual(report.not_equal, 6)
        self.assertTrue(all(verify_certificate(v.witness) for v in report.verdicts))

    def test_hundred_characteristics(self):
        report = instability_demo(as_completely_decomposable(FgGroup(1)), 100, seed=5, workers=4)
        self.assertEqual(len(report.verdicts), 4950)
        self.assertEqual(report.not_equal, 4950)
        self.assertEqual(report.inconclusive, 0)
        self.assertTrue(all(verify_certificate(v.witness) for v in report.verdicts))

    def test_workers_give_the_same_verdicts(self):
        G = as_completely_decomposable(FgGroup(1))
        one = instability_demo(G, 3, seed=2, workers=1).to_json()
        two = instability_demo(G, 3, seed=2, workers=2).to_json()
        self.assertEqual(one, two)

    def test_small_families(self):
        G = as_completely_decomposable(FgGroup(1))
        self.assertEqual(instability_demo(G, 1).verdicts, [])
        with pytest.raises(PreconditionError):
            instability_demo(G, 0)


if __name__ == '__main__':
    unittest.main(verbosity=2)
