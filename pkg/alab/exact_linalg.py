"""
Exact integer linear algebra.

Smith and Hermite normal forms with unimodular transforms, integer and rational
linear-system solving, and a few lattice helpers. The normal forms keep
their transforms and work on Python integers; rank and row reduction over Q
and GF(p) use sympy DomainMatrix.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

from sympy import GF, QQ
from sympy.polys.matrices import DomainMatrix

from .errors import DimensionMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntMatrix:
    """Integer matrix stored row-major in an immutable tuple."""

    rows: int
    cols: int
    entries: Tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatchError(f"negative shape {self.rows}x{self.cols}")
        entries = tuple(int(e) for e in self.entries)
        if len(entries) != self.rows * self.cols:
            raise DimensionMismatchError(
                f"{len(entries)} entries for a {self.rows}x{self.cols} matrix"
            )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: Optional[int] = None) -> "IntMatrix":
        """
        Build a matrix from a list of rows.

        Args:
            rows: Row lists; may be empty
            cols: Column count, required only when rows is empty

        Returns:
            IntMatrix: The matrix
        """
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for i, r in enumerate(rows):
            if len(r) != cols:
                raise DimensionMismatchError(f"row {i} has {len(r)} entries, expected {cols}")
        return cls(len(rows), cols, tuple(int(x) for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def diagonal(cls, values: Sequence[int], rows: int, cols: int) -> "IntMatrix":
        data = [[0] * cols for _ in range(rows)]
        for i, v in enumerate(values):
            data[i][i] = v
        return cls.from_rows(data, cols)

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> Tuple[int, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def column(self, j: int) -> Tuple[int, ...]:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> List[List[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_json(self) -> List[List[str]]:
        """Rows of decimal strings, so entries survive any JSON reader."""
        return [[str(x) for x in self.row(i)] for i in range(self.rows)]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[Union[int, str]]], cols: Optional[int] = None) -> "IntMatrix":
        rows = []
        for r in data:
            row = []
            for x in r:
                if isinstance(x, bool):
                    raise ValueError(f"not an integer: {x!r}")
                row.append(int(x))
            rows.append(row)
        return cls.from_rows(rows, cols)

    def transpose(self) -> "IntMatrix":
        return IntMatrix.from_rows([list(self.column(j)) for j in range(self.cols)], self.rows)

    def is_zero(self) -> bool:
        return not any(self.entries)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatchError(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        data = []
        for i in range(self.rows):
            r = self.row(i)
            data.append([sum(r[k] * other[k, j] for k in range(self.cols)) for j in range(other.cols)])
        return IntMatrix.from_rows(data, other.cols)

    def apply(self, vector: Sequence[int]) -> Tuple[int, ...]:
        """Matrix times column vector."""
        if len(vector) != self.cols:
            raise DimensionMismatchError(f"vector of length {len(vector)} for {self.cols} columns")
        return tuple(sum(a * int(x) for a, x in zip(self.row(i), vector)) for i in range(self.rows))

    def left_apply(self, vector: Sequence[int]) -> Tuple[int, ...]:
        """Row vector times matrix."""
        if len(vector) != self.rows:
            raise DimensionMismatchError(f"vector of length {len(vector)} for {self.rows} rows")
        return tuple(
            sum(int(vector[i]) * self[i, j] for i in range(self.rows)) for j in range(self.cols)
        )

    def determinant(self) -> int:
        """Exact determinant by Bareiss fraction-free elimination."""
        if self.rows != self.cols:
            raise DimensionMismatchError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = self.to_rows()
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if swap is None:
                    return 0
                m[k], m[swap] = m[swap], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def inverse_unimodular(self) -> "IntMatrix":
        """
        Inverse of a unimodular matrix.

        Raises:
            ValueError: If the matrix is not invertible over the integers
        """
        if self.rows != self.cols:
            raise DimensionMismatchError("inverse of a non-square matrix")
        n = self.rows
        aug = [[Fraction(x) for x in self.row(i)] + [Fraction(int(i == j)) for j in range(n)]
               for i in range(n)]
        for c in range(n):
            piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
            if piv is None:
                raise ValueError("matrix is singular")
            aug[c], aug[piv] = aug[piv], aug[c]
            inv = 1 / aug[c][c]
            aug[c] = [x * inv for x in aug[c]]
            for r in range(n):
                if r != c and aug[r][c] != 0:
                    f = aug[r][c]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
        result = []
        for r in range(n):
            row = aug[r][n:]
            if any(x.denominator != 1 for x in row):
                raise ValueError("matrix is not unimodular")
            result.append([int(x) for x in row])
        return IntMatrix.from_rows(result, n)


@dataclass(frozen=True)
class SmithForm:
    """U·A·V = D with U, V unimodular and D diagonal with d1 | d2 | ... ."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    invariant_factors: Tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    def reconstructs(self, A: IntMatrix) -> bool:
        return (self.U @ A) @ self.V == self.D


# Row and column operations keep the transform in step with the working matrix.

def _swap_rows(work, left, i, j):
    if i != j:
        work[i], work[j] = work[j], work[i]
        left[i], left[j] = left[j], left[i]


def _swap_cols(work, right, i, j):
    if i != j:
        for row in work:
            row[i], row[j] = row[j], row[i]
        for row in right:
            row[i], row[j] = row[j], row[i]


def _add_row(work, left, target, source, factor):
    """row[target] += factor * row[source]"""
    if factor:
        work[target] = [a + factor * b for a, b in zip(work[target], work[source])]
        left[target] = [a + factor * b for a, b in zip(left[target], left[source])]


def _add_col(work, right, target, source, factor):
    """col[target] += factor * col[source]"""
    if factor:
        for row in work:
            row[target] += factor * row[source]
        for row in right:
            row[target] += factor * row[source]


def _smallest_entry(work, t):
    best = None
    for i in range(t, len(work)):
        for j in range(t, len(work[i])):
            v = work[i][j]
            if v and (best is None or abs(v) < best[0]):
                best = (abs(v), i, j)
    return None if best is None else best[1:]


def smith_normal_form(A: IntMatrix) -> SmithForm:
    """
    Smith normal form with transforms.

    Pivots are always the entry of least absolute value in the remaining block,
    which keeps intermediate entries small; the postcondition U·A·V = D is exact
    either way.

    Args:
        A: Any integer matrix, including empty and zero matrices

    Returns:
        SmithForm: Transforms, diagonal and the positive invariant factors
    """
    m, n = A.rows, A.cols
    work = A.to_rows()
    left = IntMatrix.identity(m).to_rows()
    right = IntMatrix.identity(n).to_rows()

    t = 0
    while t < min(m, n):
        position = _smallest_entry(work, t)
        if position is None:
            break
        _swap_rows(work, left, t, position[0])
        _swap_cols(work, right, t, position[1])

        while True:
            swapped = False
            for i in range(t + 1, m):
                if work[i][t]:
                    _add_row(work, left, i, t, -(work[i][t] // work[t][t]))
                    if work[i][t]:
                        _swap_rows(work, left, t, i)
                        swapped = True
            for j in range(t + 1, n):
                if work[t][j]:
                    _add_col(work, right, j, t, -(work[t][j] // work[t][t]))
                    if work[t][j]:
                        _swap_cols(work, right, t, j)
                        swapped = True
            if swapped:
                continue
            pivot = work[t][t]
            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if work[i][j] % pivot),
                None,
            )
            if offender is None:
                break
            # Pull the non-divisible row into row t and reduce again.
            _add_row(work, left, t, offender, 1)

        if work[t][t] < 0:
            work[t] = [-x for x in work[t]]
            left[t] = [-x for x in left[t]]
        t += 1

    factors = tuple(work[i][i] for i in range(min(m, n)) if work[i][i] != 0)
    return SmithForm(
        U=IntMatrix.from_rows(left, m),
        D=IntMatrix.from_rows(work, n),
        V=IntMatrix.from_rows(right, n),
        invariant_factors=factors,
    )


def hermite_normal_form(A: IntMatrix) -> Tuple[IntMatrix, IntMatrix]:
    """
    Row-style Hermite normal form.

    Returns:
        Tuple[IntMatrix, IntMatrix]: (H, U) with U unimodular and U·A = H. H is in
        echelon form with positive pivots and the entries above each pivot
        reduced into [0, pivot).
    """
    m, n = A.rows, A.cols
    work = A.to_rows()
    left = IntMatrix.identity(m).to_rows()
    r = 0
    for j in range(n):
        if r == m:
            break
        found = False
        while True:
            nonzero = [i for i in range(r, m) if work[i][j] != 0]
            if not nonzero:
                break
            found = True
            piv = min(nonzero, key=lambda i: (abs(work[i][j]), i))
            _swap_rows(work, left, r, piv)
            clean = True
            for i in range(r + 1, m):
                if work[i][j]:
                    _add_row(work, left, i, r, -(work[i][j] // work[r][j]))
                    if work[i][j]:
                        clean = False
            if clean:
                break
        if not found:
            continue
        if work[r][j] < 0:
            work[r] = [-x for x in work[r]]
            left[r] = [-x for x in left[r]]
        for i in range(r):
            _add_row(work, left, i, r, -(work[i][j] // work[r][j]))
        r += 1
    return IntMatrix.from_rows(work, n), IntMatrix.from_rows(left, m)


@dataclass(frozen=True)
class IntegerSolution:
    """Particular solution plus a canonical (HNF) basis of the integer kernel."""

    particular: Tuple[int, ...]
    kernel_basis: Tuple[Tuple[int, ...], ...]

    solvable = True


@dataclass(frozen=True)
class NoIntegerSolution:
    """
    Obstruction from the Smith decomposition.

    The multiplier u is a row of U: u·A is divisible by `modulus` entrywise while
    u·b is not (modulus 0 means u·A = 0 and u·b != 0).
    """

    row: int
    modulus: int
    value: int
    multiplier: Tuple[int, ...]

    solvable = False

    def verify(self, A: IntMatrix, b: Sequence[int]) -> bool:
        combo = A.left_apply(self.multiplier)
        target = sum(u * int(x) for u, x in zip(self.multiplier, b))
        if self.modulus == 0:
            return not any(combo) and target != 0
        return all(c % self.modulus == 0 for c in combo) and target % self.modulus != 0


SolveResult = Union[IntegerSolution, NoIntegerSolution]


def solve_integer_system(A: IntMatrix, b: Sequence[int]) -> SolveResult:
    """
    Solve A·x = b over the integers.

    Args:
        A: Coefficient matrix
        b: Right-hand side with one entry per row of A

    Returns:
        IntegerSolution or NoIntegerSolution carrying the modulus obstruction

    Raises:
        DimensionMismatchError: If len(b) differs from the row count
    """
    if len(b) != A.rows:
        raise DimensionMismatchError(f"right-hand side has {len(b)} entries, matrix has {A.rows} rows")
    snf = smith_normal_form(A)
    c = snf.U.apply(b)
    k = snf.rank
    y = [0] * A.cols
    for i in range(k):
        d = snf.invariant_factors[i]
        if c[i] % d:
            return NoIntegerSolution(row=i, modulus=d, value=c[i], multiplier=snf.U.row(i))
        y[i] = c[i] // d
    for i in range(k, A.rows):
        if c[i] != 0:
            return NoIntegerSolution(row=i, modulus=0, value=c[i], multiplier=snf.U.row(i))
    particular = snf.V.apply(y)
    kernel = [snf.V.column(j) for j in range(k, A.cols)]
    basis = lattice_basis(kernel, A.cols)
    return IntegerSolution(particular=particular, kernel_basis=tuple(basis))


def lattice_basis(vectors: Sequence[Sequence[int]], ncols: int) -> List[Tuple[int, ...]]:
    """Canonical basis (nonzero HNF rows) of the lattice spanned by the vectors."""
    if not vectors:
        return []
    H, _ = hermite_normal_form(IntMatrix.from_rows(vectors, ncols))
    return [H.row(i) for i in range(H.rows) if any(H.row(i))]


def _pivot(row: Sequence[int]) -> int:
    return next(j for j, x in enumerate(row) if x)


def lattice_contains(basis: Sequence[Sequence[int]], vector: Sequence[int]) -> bool:
    """Membership of an integer vector in the lattice of an HNF basis."""
    rest = list(vector)
    for row in basis:
        j = _pivot(row)
        if rest[j] % row[j]:
            return False
        q = rest[j] // row[j]
        if q:
            rest = [a - q * b for a, b in zip(rest, row)]
    return not any(rest)


def lattice_reduce(basis: Sequence[Sequence[int]], vector: Sequence[int]) -> Tuple[int, ...]:
    """Canonical coset representative: pivot coordinates reduced into [0, pivot)."""
    rest = list(vector)
    for row in basis:
        j = _pivot(row)
        q = rest[j] // row[j]
        if q:
            rest = [a - q * b for a, b in zip(rest, row)]
    return tuple(rest)


def _domain_matrix(rows: Sequence[Sequence[Any]], ncols: int, K: Any, convert: Callable[[Any], Any]) -> DomainMatrix:
    return DomainMatrix([[convert(x) for x in row] for row in rows], (len(rows), ncols), K)


def rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    """Rank over the field with p elements."""
    ncols = len(rows[0]) if rows else 0
    if not ncols:
        return 0
    K = GF(p)
    return _domain_matrix(rows, ncols, K, lambda x: K(int(x) % p)).rank()


def _to_qq(x: Any) -> Any:
    x = Fraction(x)
    return QQ(x.numerator, x.denominator)


def _from_qq(e: Any) -> Fraction:
    return Fraction(int(QQ.numer(e)), int(QQ.denom(e)))


def rational_rref(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """
    Reduced row echelon form over the rationals.

    Returns:
        Tuple: (nonzero RREF rows, pivot columns)
    """
    ncols = len(rows[0]) if rows else 0
    if not ncols:
        return [], []
    reduced, pivots = _domain_matrix(rows, ncols, QQ, _to_qq).rref()
    entries = reduced.to_list()
    return [[_from_qq(e) for e in entries[i]] for i in range(len(pivots))], list(pivots)


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rational_rref(rows)[1])


@dataclass(frozen=True)
class RationalSolution:
    particular: Tuple[Fraction, ...]
    kernel_basis: Tuple[Tuple[Fraction, ...], ...]


def solve_rational_system(
    A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], ncols: Optional[int] = None
) -> Optional[RationalSolution]:
    """
    Solve A·x = b over the rationals.

    Free variables are set to zero in the particular solution; the kernel basis
    is the standard RREF basis.

    Returns:
        RationalSolution, or None when the system is inconsistent
    """
    if len(b) != len(A):
        raise DimensionMismatchError(f"right-hand side has {len(b)} entries, matrix has {len(A)} rows")
    if ncols is None:
        ncols = len(A[0]) if A else 0
    if any(len(row) != ncols for row in A):
        raise DimensionMismatchError(f"matrix rows must have {ncols} entries")
    augmented = [list(row) + [v] for row, v in zip(A, b)]
    if augmented:
        reduced, pivots = rational_rref(augmented)
    else:
        reduced, pivots = [], []
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, c in zip(reduced, pivots):
        x[c] = row[ncols]
    free = [c for c in range(ncols) if c not in pivots]
    kernel = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, c in zip(reduced, pivots):
            v[c] = -row[f]
        kernel.append(tuple(v))
    return RationalSolution(particular=tuple(x), kernel_basis=tuple(kernel))


def rational_in_span(basis: Sequence[Sequence[Fraction]], vector: Sequence[Fraction]) -> Optional[Tuple[Fraction, ...]]:
    """Coefficients c with Σ c_i basis_i = vector, or None when outside the span."""
    if not basis:
        return () if not any(Fraction(x) for x in vector) else None
    columns = [[Fraction(basis[j][i]) for j in range(len(basis))] for i in range(len(vector))]
    solution = solve_rational_system(columns, list(vector), len(basis))
    if solution is None:
        return None
    return solution.particular
