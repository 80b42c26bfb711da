#!/usr/bin/env python3
"""
Unit tests for heights, characteristics, types and rank-one groups.
"""

import os
import sys
import unittest
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from alab.arith import INFINITY, parse_height
from alab.characteristics import (
    Characteristic,
    RankOneGroup,
    TypeClass,
    characteristic_of,
    distinct_type_family,
    group_type,
    p_height,
    rank_one_from_atom,
    type_equiv,
)
from alab.errors import InvalidElementError, PreconditionError
from alab.fg_groups import FgGroup
from alab.structured_groups import Loc, Q, StructuredGroup, Z, Zmod


class TestCharacteristic(unittest.TestCase):

    def test_default_valued_exceptions_are_dropped(self):
        chi = Characteristic.of(0, {2: 0, 3: 1})
        self.assertEqual(chi.exceptions, ((3, 1),))
        self.assertEqual(chi.value_at(5), 0)

    def test_rejects_non_prime_index(self):
        with pytest.raises(ValueError, match="non-prime"):
            Characteristic.of(0, {4: 1})

    def test_rejects_bad_default(self):
        with pytest.raises(ValueError, match="default"):
            Characteristic(3)

    def test_shift(self):
        chi = Characteristic.of(0, {2: 1, 3: INFINITY})
        self.assertEqual(chi.shift(2).value_at(2), 2)
        self.assertEqual(chi.shift(3).value_at(3), INFINITY)
        self.assertEqual(chi.shift(5, 2).value_at(5), 2)

    def test_json_round_trip(self):
        chi = Characteristic.of(INFINITY, {2: 0, 7: 3})
        self.assertEqual(Characteristic.from_json(chi.to_json()), chi)

    def test_heights_are_non_negative(self):
        self.assertEqual(parse_height(" 3 "), 3)
        self.assertEqual(parse_height("INF"), INFINITY)
        for bad in ("-3", -1, "two", True):
            with pytest.raises(ValueError, match="not a height"):
                parse_height(bad)
        with pytest.raises(ValueError, match="not a height"):
            Characteristic.from_json({"default": "zero", "exceptions": {"2": "-3"}})


class TestTypes(unittest.TestCase):

    def test_finite_differences_are_type_equivalent(self):
        s = Characteristic.of(0, {2: 3, 5: 1})
        t = Characteristic.of(0, {3: 4})
        self.assertTrue(type_equiv(s, t))
        self.assertEqual(TypeClass(s), TypeClass(t))
        self.assertEqual(hash(TypeClass(s)), hash(TypeClass(t)))

    def test_infinite_difference_breaks_equivalence(self):
        s = Characteristic.of(0, {2: INFINITY})
        t = Characteristic.of(0, {2: 5})
        self.assertFalse(type_equiv(s, t))
        self.assertNotEqual(TypeClass(s), TypeClass(t))

    def test_defaults_must_agree(self):
        self.assertFalse(type_equiv(Characteristic.of(0), Characteristic.of(INFINITY)))

    def test_type_class_agrees_with_type_equiv(self):
        samples = [
            Characteristic.of(0),
            Characteristic.of(0, {2: 1}),
            Characteristic.of(0, {2: INFINITY}),
            Characteristic.of(0, {2: INFINITY, 3: 2}),
            Characteristic.of(INFINITY),
            Characteristic.of(INFINITY, {2: 0}),
            Characteristic.of(INFINITY, {2: 4}),
            Characteristic.of(INFINITY, {3: 1}),
        ]
        for s in samples:
            for t in samples:
                self.assertEqual(type_equiv(s, t), TypeClass(s) == TypeClass(t), f"{s.label()} {t.label()}")

    def test_distinct_type_family(self):
        family = distinct_type_family(6, seed=3)
        self.assertEqual(len(family), 6)
        for i, s in enumerate(family):
            for t in family[i + 1:]:
                self.assertFalse(type_equiv(s, t))
        self.assertEqual(family, distinct_type_family(6, seed=3))

    def test_family_size_must_be_positive(self):
        with pytest.raises(PreconditionError):
            distinct_type_family(0)


class TestRankOneGroups(unittest.TestCase):

    def test_membership(self):
        G = RankOneGroup(Characteristic.of(0, {2: 1, 3: INFINITY}))
        self.assertTrue(G.member(Fraction(1, 2)))
        self.assertTrue(G.member(Fraction(5, 54)))
        self.assertFalse(G.member(Fraction(1, 4)))
        self.assertFalse(G.member(Fraction(1, 5)))
        with pytest.raises(InvalidElementError):
            G.require(Fraction(1, 5))

    def test_heights_in_rank_one_group(self):
        G = RankOneGroup(Characteristic.of(0, {2: 1}))
        self.assertEqual(G.p_height(Fraction(1), 2), 1)
        self.assertEqual(G.p_height(Fraction(1, 2), 2), 0)
        self.assertEqual(G.p_height(Fraction(12), 3), 1)
        self.assertEqual(G.p_height(0, 3), INFINITY)

    def test_divide(self):
        G = rank_one_from_atom("Loc", 3)
        self.assertEqual(G.divide(1, 2), Fraction(1, 2))
        self.assertIsNone(G.divide(1, 3))

    def test_atoms(self):
        self.assertEqual(group_type(rank_one_from_atom("Z")), TypeClass(Characteristic.of(0)))
        self.assertEqual(group_type(rank_one_from_atom("Q")), TypeClass(Characteristic.of(INFINITY)))
        self.assertNotEqual(group_type(rank_one_from_atom("Zinv", 2)), group_type(rank_one_from_atom("Z")))
        with pytest.raises(PreconditionError):
            rank_one_from_atom("Pruefer", 2)


class TestHeights(unittest.TestCase):

    def test_fg_heights(self):
        G = FgGroup(1, (4,))
        self.assertEqual(p_height((12, 0), G, 2), 2)
        self.assertEqual(p_height((0, 2), G, 2), 1)
        self.assertEqual(p_height((0, 1), G, 3), INFINITY)
        self.assertEqual(p_height((0, 0), G, 2), INFINITY)

    def test_structured_heights(self):
        G = StructuredGroup((Z(), Loc(3), Q(), Zmod(9)))
        x = G.element([0, "9/2", "1/7", 0])
        self.assertEqual(p_height(x, G, 3), 2)
        self.assertEqual(p_height(x, G, 2), INFINITY)
        y = G.element([8, 0, 0, 3])
        self.assertEqual(p_height(y, G, 2), 3)
        self.assertEqual(p_height(y, G, 3), 0)

    def test_characteristic_of_fg_element(self):
        chi = characteristic_of((12,), FgGroup(1))
        self.assertEqual(chi, Characteristic.of(0, {2: 2, 3: 1}))
        self.assertTrue(type_equiv(chi, characteristic_of((1,), FgGroup(1))))

    def test_characteristic_of_torsion_element(self):
        chi = characteristic_of((2,), FgGroup(0, (4,)))
        self.assertEqual(chi.default, INFINITY)
        self.assertEqual(chi.value_at(2), 1)

    def test_characteristic_of_local_element(self):
        G = StructuredGroup((Loc(5),))
        chi = characteristic_of(G.element(["25/3"]), G)
        self.assertEqual(chi, Characteristic.of(INFINITY, {5: 2}))

    def test_zero_has_no_characteristic(self):
        with pytest.raises(PreconditionError, match="nonzero"):
            characteristic_of((0,), FgGroup(1))

    def test_prime_is_required(self):
        with pytest.raises(ValueError):
            p_height((1,), FgGroup(1), 4)


if __name__ == '__main__':
    unittest.main(verbosity=2)
