"""
Finitely generated abelian groups.

A group is stored in invariant-factor form Z^r + Z/d1 + ... + Z/dt with
d1 | d2 | ... | dt. Element coordinates list the free part first, then the
torsion part with each coordinate reduced into [0, d_i). Subgroups are
generator lists; membership, equality and quotients go through the Hermite
form of the subgroup lattice (generators plus the torsion relations).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from .arith import INFINITY, Height, lcm, lcm_all, prime_factors, require_prime, valuation
from .certificates import NonPurityWitness, PurityCertificate
from .errors import InvalidElementError, PreconditionError
from .exact_linalg import (
    IntMatrix,
    lattice_basis,
    lattice_contains,
    smith_normal_form,
)

logger = logging.getLogger(__name__)

Vector = Tuple[int, ...]


@dataclass(frozen=True)
class Presentation:
    """Change of basis recorded when a group is built from relations."""

    relations: IntMatrix
    basis_change: IntMatrix
    inverse: IntMatrix
    free_positions: Tuple[int, ...]
    torsion_positions: Tuple[int, ...]

    def to_canonical(self, x: Sequence[int]) -> Vector:
        """Original coordinates to canonical ones (torsion not yet reduced)."""
        y = self.basis_change.left_apply(x)
        return tuple(y[i] for i in self.free_positions) + tuple(y[i] for i in self.torsion_positions)

    def from_canonical(self, coords: Sequence[int]) -> Vector:
        """A lift of canonical coordinates back to the original generators."""
        y = [0] * self.relations.cols
        positions = self.free_positions + self.torsion_positions
        for pos, value in zip(positions, coords):
            y[pos] = int(value)
        return self.inverse.left_apply(y)


@dataclass(frozen=True)
class FgGroup:
    """Z^free_rank + Z/d1 + ... with the divisibility chain on the d_i."""

    free_rank: int
    invariant_factors: Tuple[int, ...] = ()
    presentation: Optional[Presentation] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        factors = tuple(int(d) for d in self.invariant_factors)
        object.__setattr__(self, "invariant_factors", factors)
        if self.free_rank < 0:
            raise ValueError(f"free rank must be non-negative, got {self.free_rank}")
        for d in factors:
            if d < 2:
                raise ValueError(f"invariant factors must be at least 2, got {d}")
        for a, b in zip(factors, factors[1:]):
            if b % a:
                raise ValueError(f"invariant factors must form a divisibility chain: {a} does not divide {b}")

    @property
    def dimension(self) -> int:
        return self.free_rank + len(self.invariant_factors)

    @property
    def is_torsion_free(self) -> bool:
        return not self.invariant_factors

    @property
    def is_trivial(self) -> bool:
        return self.dimension == 0

    def modulus(self, j: int) -> int:
        """0 for a free coordinate, d_i for a torsion one."""
        return 0 if j < self.free_rank else self.invariant_factors[j - self.free_rank]

    def normalize(self, x: Sequence[int]) -> Vector:
        """
        Validate coordinates and reduce the torsion ones.

        Raises:
            InvalidElementError: On a length mismatch or non-integer entry
        """
        if len(x) != self.dimension:
            raise InvalidElementError(
                f"element has {len(x)} coordinates, group {self.label()} needs {self.dimension}"
            )
        out = []
        for j, value in enumerate(x):
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidElementError(f"coordinate {j} is not an integer: {value!r}")
            d = self.modulus(j)
            out.append(value % d if d else value)
        return tuple(out)

    def zero(self) -> Vector:
        return (0,) * self.dimension

    def is_zero(self, x: Sequence[int]) -> bool:
        return not any(self.normalize(x))

    def add(self, x: Sequence[int], y: Sequence[int]) -> Vector:
        return self.normalize([a + b for a, b in zip(self.normalize(x), self.normalize(y))])

    def negate(self, x: Sequence[int]) -> Vector:
        return self.normalize([-a for a in self.normalize(x)])

    def scale(self, k: int, x: Sequence[int]) -> Vector:
        return self.normalize([k * a for a in self.normalize(x)])

    def relation_rows(self) -> List[Vector]:
        rows = []
        for t, d in enumerate(self.invariant_factors):
            row = [0] * self.dimension
            row[self.free_rank + t] = d
            rows.append(tuple(row))
        return rows

    def label(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.invariant_factors)
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> Dict:
        return {"free_rank": self.free_rank, "torsion": list(self.invariant_factors)}

    @classmethod
    def from_json(cls, data: Dict) -> "FgGroup":
        return cls(int(data.get("free_rank", 0)), tuple(int(d) for d in data.get("torsion", [])))


def from_relations(A: IntMatrix) -> FgGroup:
    """
    Cokernel of a relation matrix in canonical form.

    Rows of A are relations among A.cols generators. With U*A*V = D the new
    coordinates are y = x*V; positions with d_i = 1 disappear, d_i >= 2 give
    torsion, and the remaining columns are free.

    Args:
        A: Relation matrix, possibly empty

    Returns:
        FgGroup: Canonical group carrying the change of basis
    """
    snf = smith_normal_form(A)
    k = snf.rank
    torsion_positions = tuple(i for i in range(k) if snf.invariant_factors[i] > 1)
    free_positions = tuple(range(k, A.cols))
    presentation = Presentation(
        relations=A,
        basis_change=snf.V,
        inverse=snf.V.inverse_unimodular(),
        free_positions=free_positions,
        torsion_positions=torsion_positions,
    )
    group = FgGroup(
        free_rank=len(free_positions),
        invariant_factors=tuple(snf.invariant_factors[i] for i in torsion_positions),
        presentation=presentation,
    )
    logger.debug(f"Cokernel of {A.rows}x{A.cols} relations is {group.label()}")
    return group


def to_canonical(G: FgGroup, x: Sequence[int]) -> Vector:
    """Canonical coordinates of an element given in the original generators."""
    if G.presentation is None:
        return G.normalize(x)
    if len(x) != G.presentation.relations.cols:
        raise InvalidElementError(
            f"element has {len(x)} coordinates, presentation has {G.presentation.relations.cols} generators"
        )
    return G.normalize(G.presentation.to_canonical(x))


def element_order(G: FgGroup, x: Sequence[int]) -> Height:
    """Least n >= 1 with n*x = 0, or INFINITY."""
    x = G.normalize(x)
    if any(x[: G.free_rank]):
        return INFINITY
    return lcm_all(d // gcd(c, d) for c, d in zip(x[G.free_rank:], G.invariant_factors))


def ranks(G: FgGroup) -> Tuple[int, Dict[int, int]]:
    """rk_0 and rk_p for every prime p dividing some invariant factor."""
    rkp: Dict[int, int] = {}
    for d in G.invariant_factors:
        for p in prime_factors(d):
            rkp[p] = rkp.get(p, 0) + 1
    return G.free_rank, dict(sorted(rkp.items()))


def dim_mod_p(G: FgGroup, p: int) -> int:
    """Dimension of G/pG over the field with p elements."""
    require_prime(p)
    return G.free_rank + sum(1 for d in G.invariant_factors if d % p == 0)


@dataclass(frozen=True)
class FgSubgroup:
    """Subgroup of an FgGroup given by generators in canonical coordinates."""

    ambient: FgGroup
    generators: Tuple[Vector, ...] = ()

    def __post_init__(self):
        gens = tuple(self.ambient.normalize(list(g)) for g in self.generators)
        object.__setattr__(self, "generators", gens)

    @cached_property
    def lattice(self) -> Tuple[Vector, ...]:
        """HNF basis of generators plus torsion relations, a lattice in Z^dimension."""
        rows = list(self.generators) + self.ambient.relation_rows()
        return tuple(lattice_basis(rows, self.ambient.dimension))

    def contains(self, x: Sequence[int]) -> bool:
        return lattice_contains(self.lattice, self.ambient.normalize(x))

    def to_json(self) -> Dict:
        data = self.ambient.to_json()
        data["generators"] = [[str(c) for c in g] for g in self.generators]
        return data

    @classmethod
    def from_json(cls, data: Dict) -> "FgSubgroup":
        ambient = FgGroup.from_json(data)
        gens = [tuple(int(c) for c in g) for g in data.get("generators", [])]
        return cls(ambient, tuple(gens))


def generated_subgroup(elements: Sequence[Sequence[int]], G: FgGroup) -> FgSubgroup:
    """The subgroup <A>; in groups closed under intersections this is the closure of A."""
    return FgSubgroup(G, tuple(tuple(e) for e in elements))


def contains(H: FgSubgroup, x: Sequence[int]) -> bool:
    return H.contains(x)


def subgroup_equal(H1: FgSubgroup, H2: FgSubgroup) -> bool:
    return H1.ambient == H2.ambient and H1.lattice == H2.lattice


def quotient(H: FgSubgroup) -> FgGroup:
    """G/H in canonical form; its presentation maps G's coordinates to the quotient's."""
    n = H.ambient.dimension
    return from_relations(IntMatrix.from_rows(list(H.lattice), n))


def _prime_power_checks(H: FgSubgroup) -> Tuple[List[int], FgGroup]:
    Q = quotient(H)
    if not Q.invariant_factors:
        return [], Q
    exponent = Q.invariant_factors[-1]
    checks = []
    for p in prime_factors(exponent):
        for k in range(1, valuation(exponent, p) + 1):
            checks.append(p ** k)
    return checks, Q


def is_pure(H: FgSubgroup):
    """
    Decide nG ∩ H = nH for every n.

    Only prime powers p^k with p^k dividing the exponent of the torsion of G/H
    need checking. For each such n, nG ∩ H is spanned by the relations and the
    vectors lcm(n, d_i) f_i, where d_i are the Smith factors of the subgroup
    lattice and f_i the matching rows of V^-1; each is tested against nH.

    Args:
        H: Subgroup to test

    Returns:
        PurityCertificate or NonPurityWitness
    """
    G = H.ambient
    n_dim = G.dimension
    checks, Q = _prime_power_checks(H)
    context = {"subgroup": H.to_json()}
    basis = list(H.lattice)
    if basis and checks:
        snf = smith_normal_form(IntMatrix.from_rows(basis, n_dim))
        V_inv = snf.V.inverse_unimodular()
        relations = G.relation_rows()
        for n in checks:
            target = lattice_basis([tuple(n * c for c in row) for row in basis] + relations, n_dim)
            for i, d in enumerate(snf.invariant_factors):
                m = lcm(n, d)
                f = V_inv.row(i)
                if not lattice_contains(target, tuple(m * c for c in f)):
                    witness = NonPurityWitness(
                        n=n,
                        h=G.normalize([m * c for c in f]),
                        divisor=G.normalize([(m // n) * c for c in f]),
                        context=context,
                    )
                    logger.info(f"Subgroup is not pure: n={n}, h={witness.h}")
                    return witness
    logger.debug(f"Subgroup is pure; checked n in {checks}")
    return PurityCertificate(method="fg-prime-powers", exact=True, checked=tuple(checks), context=context)


def verify_purity_evidence(certificate) -> bool:
    """Check a purity certificate or non-purity witness about an FgSubgroup."""
    H = FgSubgroup.from_json(certificate.context["subgroup"])
    G = H.ambient
    if isinstance(certificate, PurityCertificate):
        fresh = is_pure(H)
        return (
            isinstance(fresh, PurityCertificate)
            and fresh.method == certificate.method
            and fresh.checked == certificate.checked
            and certificate.exact
        )
    n, h, divisor = certificate.n, certificate.h, certificate.divisor
    if n < 2 or h is None or divisor is None:
        return False
    h = G.normalize(list(h))
    if not H.contains(h) or G.scale(n, list(divisor)) != h:
        return False
    basis = list(H.lattice)
    target = lattice_basis([tuple(n * c for c in row) for row in basis] + G.relation_rows(), G.dimension)
    return not lattice_contains(target, h)


@dataclass(frozen=True)
class ClosureStage:
    """One step of the alternating closure: 'given', 'sums' or 'divisors'."""

    index: int
    step: str
    generators: Tuple[Vector, ...]


def closure_stages(elements: Sequence[Sequence[int]], G: FgGroup) -> List[ClosureStage]:
    """
    Trace of the alternating pure-closure construction in a torsion-free group.

    Odd steps close under sums and negatives (an HNF basis), even steps adjoin
    elements h with n*h in the current subgroup. The construction stops once an
    even step has nothing left to adjoin.

    Raises:
        PreconditionError: If G has torsion
    """
    if not G.is_torsion_free:
        raise PreconditionError(
            f"pure closure by stages needs a torsion-free ambient, got {G.label()}; use purify"
        )
    n_dim = G.dimension
    gens = [G.normalize(list(e)) for e in elements]
    stages = [ClosureStage(0, "given", tuple(gens))]
    while True:
        basis = lattice_basis(gens, n_dim)
        stages.append(ClosureStage(len(stages), "sums", tuple(basis)))
        if not basis:
            break
        snf = smith_normal_form(IntMatrix.from_rows(basis, n_dim))
        V_inv = snf.V.inverse_unimodular()
        divisors = [V_inv.row(i) for i, d in enumerate(snf.invariant_factors) if d > 1]
        if not divisors:
            break
        gens = basis + divisors
        stages.append(ClosureStage(len(stages), "divisors", tuple(gens)))
    logger.debug(f"Closure construction took {len(stages)} stages")
    return stages


def pure_closure(elements: Sequence[Sequence[int]], G: FgGroup) -> FgSubgroup:
    """
    Smallest pure subgroup of a torsion-free G containing the elements.

    Raises:
        PreconditionError: If G has torsion
    """
    stages = closure_stages(elements, G)
    return FgSubgroup(G, stages[-1].generators)


def purify(H: FgSubgroup, max_rounds: int = 10_000) -> Tuple[FgSubgroup, List[NonPurityWitness]]:
    """
    A pure subgroup containing H, for any ambient.

    Repeatedly adjoins the divisor of a non-purity witness. Each round strictly
    enlarges the subgroup, so this stops in a finitely generated ambient. With
    torsion the result is a pure subgroup containing H, not necessarily a
    unique smallest one.

    Returns:
        Tuple: (pure subgroup, the witnesses whose divisors were adjoined)
    """
    current = H
    used = []
    for _ in range(max_rounds):
        verdict = is_pure(current)
        if verdict.is_pure:
            return current, used
        used.append(verdict)
        current = FgSubgroup(current.ambient, current.generators + (tuple(verdict.divisor),))
    raise RuntimeError(f"purification did not settle within {max_rounds} rounds")


def divisible_hull(G: FgGroup):
    """
    Divisible hull Q^free_rank + (Prüfer copies) with the embedding of G.

    Returns:
        Tuple[StructuredGroup, Embedding]
    """
    from .structured_groups import structured_divisible_hull, to_structured

    return structured_divisible_hull(to_structured(G))


@dataclass(frozen=True)
class DirectSum:
    """G + H with its two coordinate inclusions."""

    group: FgGroup
    left: FgGroup
    right: FgGroup

    def embed_left(self, x: Sequence[int]) -> Vector:
        return to_canonical(self.group, list(self.left.normalize(x)) + [0] * self.right.dimension)

    def embed_right(self, y: Sequence[int]) -> Vector:
        return to_canonical(self.group, [0] * self.left.dimension + list(self.right.normalize(y)))


def direct_sum(G: FgGroup, H: FgGroup) -> DirectSum:
    """Joint embedding of G and H into their direct sum, in canonical form."""
    n = G.dimension + H.dimension
    relations = []
    for row in G.relation_rows():
        relations.append(list(row) + [0] * H.dimension)
    for row in H.relation_rows():
        relations.append([0] * G.dimension + list(row))
    return DirectSum(group=from_relations(IntMatrix.from_rows(relations, n)), left=G, right=H)
