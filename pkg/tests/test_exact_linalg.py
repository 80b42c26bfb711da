#!/usr/bin/env python3
"""
Unit tests for exact integer and rational linear algebra.

Smith forms are checked against sympy (determinant and rank) on random
matrices; the solvers are checked by substituting their answers back.
"""

import os
import random
import sys
import unittest
from fractions import Fraction

import pytest
from sympy import Matrix

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from alab.errors import DimensionMismatchError
from alab.exact_linalg import (
    IntMatrix,
    hermite_normal_form,
    lattice_basis,
    lattice_contains,
    rank_mod_p,
    rational_in_span,
    rational_rank,
    rational_rref,
    smith_normal_form,
    solve_integer_system,
    solve_rational_system,
)


def random_matrix(rng, max_dim=4, entry=10):
    rows = rng.randint(1, max_dim)
    cols = rng.randint(1, max_dim)
    return IntMatrix.from_rows([[rng.randint(-entry, entry) for _ in range(cols)] for _ in range(rows)])


class TestIntMatrix(unittest.TestCase):
    """Construction, products and determinants."""

    def test_from_rows_rejects_ragged_rows(self):
        with pytest.raises(DimensionMismatchError, match="row 1 has 1 entries"):
            IntMatrix.from_rows([[1, 2], [3]])

    def test_empty_matrix_needs_columns(self):
        A = IntMatrix.from_rows([], 3)
        self.assertEqual((A.rows, A.cols), (0, 3))

    def test_json_round_trip_uses_decimal_strings(self):
        A = IntMatrix.from_rows([[10**30, -1], [0, 7]])
        self.assertEqual(A.to_json()[0][0], str(10**30))
        self.assertEqual(IntMatrix.from_json(A.to_json()), A)

    def test_determinant_matches_sympy(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(1, 4)
            rows = [[rng.randint(-10, 10) for _ in range(n)] for _ in range(n)]
            self.assertEqual(IntMatrix.from_rows(rows).determinant(), int(Matrix(rows).det()))

    def test_transpose_and_product(self):
        A = IntMatrix.from_rows([[1, 2, 3], [4, 5, 6]])
        self.assertEqual(A.transpose().to_rows(), [[1, 4], [2, 5], [3, 6]])
        self.assertEqual((A @ A.transpose()).to_rows(), [[14, 32], [32, 77]])


class TestSmithNormalForm(unittest.TestCase):
    """Invariant factors and the unimodular transforms."""

    def test_identity(self):
        snf = smith_normal_form(IntMatrix.identity(2))
        self.assertEqual(snf.invariant_factors, (1, 1))

    def test_small_example(self):
        A = IntMatrix.from_rows([[2, 4], [6, 8]])
        snf = smith_normal_form(A)
        self.assertEqual(snf.invariant_factors, (2, 4))
        self.assertTrue(snf.reconstructs(A))

    def test_zero_matrix_has_rank_zero(self):
        snf = smith_normal_form(IntMatrix.zeros(2, 3))
        self.assertEqual(snf.invariant_factors, ())
        self.assertEqual(snf.rank, 0)

    def test_random_matrices_against_oracle(self):
        rng = random.Random(2024)
        for _ in range(1000):
            A = random_matrix(rng)
            snf = smith_normal_form(A)
            factors = snf.invariant_factors
            self.assertTrue(snf.reconstructs(A))
            self.assertEqual(snf.rank, Matrix(A.to_rows()).rank())
            self.assertTrue(all(d > 0 for d in factors))
            for d, e in zip(factors, factors[1:]):
                self.assertEqual(e % d, 0)
            self.assertEqual(abs(snf.U.determinant()), 1)
            self.assertEqual(abs(snf.V.determinant()), 1)
            if A.rows == A.cols and snf.rank == A.rows:
                product = 1
                for d in factors:
                    product *= d
                self.assertEqual(product, abs(int(Matrix(A.to_rows()).det())))


class TestHermiteAndLattices(unittest.TestCase):

    def test_hnf_is_reached_by_unimodular_rows(self):
        rng = random.Random(5)
        for _ in range(100):
            A = random_matrix(rng)
            H, U = hermite_normal_form(A)
            self.assertEqual(U @ A, H)
            self.assertEqual(abs(U.determinant()), 1)

    def test_lattice_membership(self):
        basis = lattice_basis([[2, 0], [0, 3]], 2)
        self.assertTrue(lattice_contains(basis, [4, -3]))
        self.assertFalse(lattice_contains(basis, [1, 0]))

    def test_rank_mod_p(self):
        self.assertEqual(rank_mod_p([[1, 1], [1, 3]], 2), 1)
        self.assertEqual(rank_mod_p([[1, 1], [1, 3]], 3), 2)
        self.assertEqual(rank_mod_p([[-1, 4], [2, 7]], 5), 1)
        self.assertEqual(rank_mod_p([], 2), 0)


class TestSolvers(unittest.TestCase):

    def test_integer_solution_substitutes_back(self):
        A = IntMatrix.from_rows([[2, 1], [0, 3]])
        result = solve_integer_system(A, [4, 6])
        self.assertTrue(result.solvable)
        self.assertEqual(A.apply(result.particular), (4, 6))

    def test_integer_obstruction_verifies(self):
        A = IntMatrix.from_rows([[2, 4]])
        b = [3]
        result = solve_integer_system(A, b)
        self.assertFalse(result.solvable)
        self.assertEqual(result.modulus, 2)
        self.assertTrue(result.verify(A, b))

    def test_right_hand_side_length_is_checked(self):
        with pytest.raises(DimensionMismatchError):
            solve_integer_system(IntMatrix.identity(2), [1])

    def test_rational_system(self):
        A = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]
        self.assertIsNone(solve_rational_system(A, [Fraction(1), Fraction(3)]))
        solution = solve_rational_system(A, [Fraction(1), Fraction(2)])
        self.assertEqual(solution.particular, (Fraction(1), Fraction(0)))
        self.assertEqual(solution.kernel_basis, ((Fraction(-2), Fraction(1)),))

    def test_rational_span(self):
        basis = [(Fraction(1), Fraction(1))]
        self.assertEqual(rational_in_span(basis, [Fraction(3, 2), Fraction(3, 2)]), (Fraction(3, 2),))
        self.assertIsNone(rational_in_span(basis, [Fraction(1), Fraction(0)]))
        self.assertEqual(rational_in_span([], [0, 0]), ())
        self.assertEqual(rational_rank([[1, 2], [2, 4]]), 1)

    def test_rref_gives_fractions(self):
        rows, pivots = rational_rref([[Fraction(2), Fraction(1, 3), Fraction(0)], [4, 1, 1]])
        self.assertEqual(pivots, [0, 1])
        self.assertEqual(rows, [[1, 0, Fraction(-1, 2)], [0, 1, 3]])
        self.assertTrue(all(isinstance(c, Fraction) for row in rows for c in row))
        self.assertEqual(rational_rref([]), ([], []))
        self.assertEqual(rational_rref([[0, 0]]), ([], []))


if __name__ == '__main__':
    unittest.main(verbosity=2)
