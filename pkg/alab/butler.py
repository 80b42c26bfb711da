"""
Completely decomposable groups, witnessed Butler groups, the pushout over a
divisible base and the instability demo.

A completely decomposable group is a finite direct sum of rank-one groups;
elements are tuples of rationals, one per summand. A Butler group is only
ever produced together with its witness: a pure subgroup of such a sum.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from utils.worker_pool import WorkerPoolSession

from .arith import INFINITY, Height, format_rational, lcm_all, parse_rational
from .certificates import PurityCertificate
from .characteristics import Characteristic, RankOneGroup, distinct_type_family, rank_one_from_atom
from .errors import DimensionMismatchError, InvalidElementError, PreconditionError
from .exact_linalg import lattice_basis, rational_in_span, rational_rank, rational_rref
from .fg_groups import FgGroup, pure_closure
from .structured_groups import GroupElement, StructuredGroup, is_divisible_group

logger = logging.getLogger(__name__)

RationalVector = Tuple[Fraction, ...]


def _encode_vector(v: Sequence[Fraction]) -> List[str]:
    return [format_rational(x) for x in v]


def _decode_vector(data: Sequence[Any]) -> RationalVector:
    return tuple(parse_rational(x) for x in data)


@dataclass(frozen=True)
class CompletelyDecomposable:
    """G_chi1 + ... + G_chin."""

    summands: Tuple[RankOneGroup, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))

    @property
    def rank(self) -> int:
        return len(self.summands)

    def coerce(self, x: Any) -> RationalVector:
        """
        Raises:
            InvalidElementError: If x has the wrong length or leaves a summand
        """
        if isinstance(x, GroupElement):
            x = x.components
        if len(x) != self.rank:
            raise InvalidElementError(f"vector has {len(x)} coordinates, group has rank {self.rank}")
        try:
            v = tuple(parse_rational(c) for c in x)
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidElementError(f"not a rational vector: {x!r}") from e
        for i, (G, c) in enumerate(zip(self.summands, v)):
            if not G.member(c):
                raise InvalidElementError(f"coordinate {i} = {format_rational(c)} is not in {G.label()}")
        return v

    def member(self, x: Any) -> bool:
        try:
            self.coerce(x)
        except InvalidElementError:
            return False
        return True

    def zero(self) -> RationalVector:
        return (Fraction(0),) * self.rank

    def unit_vector(self, i: int) -> RationalVector:
        return tuple(Fraction(1 if j == i else 0) for j in range(self.rank))

    def is_zero(self, x: Any) -> bool:
        return not any(self.coerce(x))

    def is_divisible_coordinate(self, i: int) -> bool:
        return self.summands[i].chi == Characteristic.of(INFINITY)

    def p_height(self, x: Any, p: int) -> Height:
        v = self.coerce(x)
        return min((G.p_height(c, p) for G, c in zip(self.summands, v) if c != 0), default=INFINITY)

    def relevant_primes(self, x: Any) -> List[int]:
        v = self.coerce(x)
        primes = set()
        for G, c in zip(self.summands, v):
            if c != 0:
                primes.update(G.relevant_primes(c))
        return sorted(primes)

    def height_default(self, x: Any) -> Height:
        v = self.coerce(x)
        return min((G.chi.default for G, c in zip(self.summands, v) if c != 0), default=INFINITY)

    def divide(self, x: Any, n: int) -> Optional[RationalVector]:
        y = tuple(c / n for c in self.coerce(x))
        return y if self.member(y) else None

    @property
    def is_lattice_like(self) -> bool:
        """Every summand is isomorphic to Z: default 0 and only finite exceptions."""
        return all(G.chi.default == 0 and INFINITY not in G.chi.as_dict().values() for G in self.summands)

    def scales(self) -> Tuple[int, ...]:
        """s_i with s_i * G_chi_i = Z, for lattice-like groups."""
        out = []
        for G in self.summands:
            s = 1
            for p, h in G.chi.exceptions:
                s *= p ** h
            out.append(s)
        return tuple(out)

    def label(self) -> str:
        return " + ".join(G.label() for G in self.summands) if self.summands else "0"

    def to_json(self) -> Dict[str, Any]:
        return {"summands": [G.chi.to_json() for G in self.summands]}

    @classmethod
    def from_json(cls, data: Any) -> "CompletelyDecomposable":
        items = data["summands"] if isinstance(data, Mapping) else data
        return cls(tuple(RankOneGroup(Characteristic.from_json(item)) for item in items))


def as_completely_decomposable(H: Any) -> CompletelyDecomposable:
    """
    View a torsion-free group as a completely decomposable one.

    Raises:
        PreconditionError: For groups with torsion or completion atoms
    """
    if isinstance(H, CompletelyDecomposable):
        return H
    if isinstance(H, RankOneGroup):
        return CompletelyDecomposable((H,))
    if isinstance(H, FgGroup):
        if not H.is_torsion_free:
            raise PreconditionError(f"{H.label()} has torsion")
        return CompletelyDecomposable(tuple(rank_one_from_atom("Z") for _ in range(H.free_rank)))
    if isinstance(H, StructuredGroup):
        summands = []
        for atom in H.summands:
            if atom.kind not in ("Z", "Q", "Loc"):
                raise PreconditionError(f"atom {atom.label()} is not a rank-one torsion-free group")
            summands.append(rank_one_from_atom(atom.kind, atom.p))
        return CompletelyDecomposable(tuple(summands))
    raise PreconditionError(f"cannot view {type(H).__name__} as a completely decomposable group")


def cd_vector(x: Any, H: Any) -> RationalVector:
    """Coordinates of x as a vector of the completely decomposable view of H."""
    C = as_completely_decomposable(H)
    if isinstance(H, FgGroup):
        x = H.normalize(x)
    if isinstance(H, RankOneGroup) and not isinstance(x, (list, tuple)):
        x = (x,)
    return C.coerce(x)


def direct_sum_cd(*groups: CompletelyDecomposable) -> CompletelyDecomposable:
    return CompletelyDecomposable(tuple(G for C in groups for G in C.summands))


@dataclass(frozen=True)
class ButlerWitness:
    """
    A finite-rank pure subgroup of a completely decomposable group.

    `span` is the reduced echelon basis of the rational span; the subgroup is
    span ∩ ambient. `lattice` is an explicit basis when every summand is
    isomorphic to Z, otherwise None.
    """

    ambient: CompletelyDecomposable
    generators: Tuple[RationalVector, ...]
    span: Tuple[RationalVector, ...]
    lattice: Optional[Tuple[RationalVector, ...]]
    certificate: PurityCertificate

    @property
    def rank(self) -> int:
        return len(self.span)

    def contains(self, x: Any) -> bool:
        if not self.ambient.member(x):
            return False
        return rational_in_span(self.span, self.ambient.coerce(x)) is not None


def _span_rows(vectors: Sequence[RationalVector]) -> Tuple[RationalVector, ...]:
    rows, _ = rational_rref(vectors)
    return tuple(tuple(r) for r in rows)


def _closure_context(C: CompletelyDecomposable, gens: Sequence[RationalVector], span) -> Dict[str, Any]:
    return {
        "cd_closure": {
            "ambient": C.to_json(),
            "generators": [_encode_vector(g) for g in gens],
            "span": [_encode_vector(r) for r in span],
        }
    }


def _lattice_closure(C: CompletelyDecomposable, gens: Sequence[RationalVector]) -> Tuple[RationalVector, ...]:
    scales = C.scales()
    scaled = [tuple(int(c * s) for c, s in zip(g, scales)) for g in gens]
    closure = pure_closure(scaled, FgGroup(free_rank=C.rank))
    basis = lattice_basis(list(closure.generators), C.rank)
    return tuple(tuple(Fraction(c, s) for c, s in zip(row, scales)) for row in basis)


def purify_in_cd(gens: Sequence[Sequence[Any]], C: CompletelyDecomposable) -> ButlerWitness:
    """
    Pure closure of the generators inside C.

    The closure is the rational span intersected with C coordinatewise, which
    is pure: if n*y lies in it and y is in C, y lies in the span too.

    Raises:
        InvalidElementError: If a generator is not in C
    """
    vectors = tuple(C.coerce(g) for g in gens)
    span = _span_rows(vectors)
    lattice = _lattice_closure(C, vectors) if C.is_lattice_like else None
    certificate = PurityCertificate(
        method="span-valuation", exact=True, checked=(), context=_closure_context(C, vectors, span)
    )
    logger.debug(f"Closure of {len(vectors)} generators in {C.label()} has rank {len(span)}")
    return ButlerWitness(C, vectors, span, lattice, certificate)


def verify_cd_purity(certificate) -> bool:
    if not isinstance(certificate, PurityCertificate) or certificate.method != "span-valuation":
        return False
    data = certificate.context["cd_closure"]
    C = CompletelyDecomposable.from_json(data["ambient"])
    gens = [_decode_vector(g) for g in data["generators"]]
    if not all(C.member(g) for g in gens):
        return False
    span = tuple(_decode_vector(r) for r in data["span"])
    return certificate.exact and _span_rows(gens) == span


@dataclass(frozen=True)
class PushoutGroup:
    """
    (H1 + H2) / G* with G* = {(f1 g, -f2 g)}.

    Elements are vectors over H1 + H2; `reduce` picks the coset representative
    whose pivot coordinates (with respect to the echelon basis of G*) vanish.
    """

    left: CompletelyDecomposable
    right: CompletelyDecomposable
    f1: Tuple[RationalVector, ...]
    f2: Tuple[RationalVector, ...]
    relations: Tuple[RationalVector, ...]
    pivots: Tuple[int, ...]

    @property
    def ambient(self) -> CompletelyDecomposable:
        return direct_sum_cd(self.left, self.right)

    @property
    def base_rank(self) -> int:
        return len(self.f1)

    @property
    def rank(self) -> int:
        return self.left.rank + self.right.rank - len(self.relations)

    def reduce(self, x: Any) -> RationalVector:
        v = list(self.ambient.coerce(x))
        for row, c in zip(self.relations, self.pivots):
            if v[c]:
                f = v[c]
                v = [a - f * b for a, b in zip(v, row)]
        return tuple(v)

    def add(self, x: Any, y: Any) -> RationalVector:
        return self.reduce(tuple(a + b for a, b in zip(self.ambient.coerce(x), self.ambient.coerce(y))))

    def scale(self, k: int, x: Any) -> RationalVector:
        return self.reduce(tuple(k * a for a in self.ambient.coerce(x)))

    def is_zero(self, x: Any) -> bool:
        return not any(self.reduce(x))

    def embed_left(self, h: Any) -> RationalVector:
        return self.reduce(tuple(self.left.coerce(h)) + self.right.zero())

    def embed_right(self, h: Any) -> RationalVector:
        return self.reduce(self.left.zero() + tuple(self.right.coerce(h)))

    def p_height(self, x: Any, p: int) -> Height:
        """G* only touches Q coordinates, so the other coordinates decide."""
        v = self.ambient.coerce(x)
        C = self.ambient
        return min(
            (C.summands[i].p_height(c, p) for i, c in enumerate(v) if c != 0 and not C.is_divisible_coordinate(i)),
            default=INFINITY,
        )

    def divide(self, x: Any, n: int) -> Optional[RationalVector]:
        y = tuple(c / n for c in self.ambient.coerce(x))
        if not self.ambient.member(y):
            return None
        return self.reduce(y)

    def to_json(self) -> Dict[str, Any]:
        return {
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "f1": [_encode_vector(r) for r in self.f1],
            "f2": [_encode_vector(r) for r in self.f2],
        }


def _pushout_group(C1, C2, f1, f2) -> PushoutGroup:
    rows = [tuple(a) + tuple(-b for b in c) for a, c in zip(f1, f2)]
    reduced, pivots = rational_rref(rows)
    return PushoutGroup(C1, C2, tuple(f1), tuple(f2), tuple(tuple(r) for r in reduced), tuple(pivots))


def pushout_from_json(data: Mapping[str, Any]) -> PushoutGroup:
    return _pushout_group(
        CompletelyDecomposable.from_json(data["left"]),
        CompletelyDecomposable.from_json(data["right"]),
        [_decode_vector(r) for r in data["f1"]],
        [_decode_vector(r) for r in data["f2"]],
    )


def _sample_elements(C: CompletelyDecomposable, rng: random.Random, count: int) -> List[RationalVector]:
    samples = [C.unit_vector(i) for i in range(C.rank)]
    for _ in range(count):
        v = []
        for G in C.summands:
            num = rng.randint(-9, 9)
            if G.chi.default == INFINITY and not G.chi.exceptions:
                v.append(Fraction(num, rng.randint(1, 6)))
                continue
            dividers = [p for p, h in G.chi.exceptions if h != 0] or ([] if G.chi.default == 0 else [7])
            if dividers and rng.random() < 0.5:
                p = rng.choice(dividers)
                k = min(2, G.chi.value_at(p))
                v.append(Fraction(num, p ** int(k)))
            else:
                v.append(Fraction(num))
        samples.append(tuple(v))
    return [s for s in samples if C.member(s)]


def _side(E: PushoutGroup, side: str) -> Tuple[CompletelyDecomposable, Any, Tuple[RationalVector, ...]]:
    if side == "left":
        return E.left, E.embed_left, E.f1
    return E.right, E.embed_right, E.f2


def _side_supported_on_divisible(E: PushoutGroup, side: str) -> bool:
    C, _, f = _side(E, side)
    if f and rational_rank(f) != len(f):
        return False
    return all(c == 0 or C.is_divisible_coordinate(i) for row in f for i, c in enumerate(row))


def _side_injective(E: PushoutGroup, side: str) -> bool:
    C, embed, _ = _side(E, side)
    offset = 0 if side == "left" else E.left.rank
    units = [tuple(Fraction(1 if j == offset + i else 0) for j in range(E.ambient.rank)) for i in range(C.rank)]
    return rational_rank(list(E.relations) + units) == len(E.relations) + C.rank


def _bounded_side_check(E: PushoutGroup, side: str, bound: int, seed: int, samples: int) -> bool:
    C, embed, _ = _side(E, side)
    rng = random.Random(seed)
    for h in _sample_elements(C, rng, samples):
        image = embed(h)
        for n in range(2, bound + 1):
            if E.divide(image, n) is not None and C.divide(h, n) is None:
                logger.info(f"Pushout {side} embedding fails purity at n={n}")
                return False
    return True


def verify_pushout_purity(certificate) -> bool:
    if not isinstance(certificate, PurityCertificate):
        return False
    data = certificate.context["pushout"]
    E = pushout_from_json(data)
    side = certificate.context.get("side")
    if side not in ("left", "right"):
        return False
    if certificate.method == "height-preservation":
        return certificate.exact and _side_supported_on_divisible(E, side) and _side_injective(E, side)
    if certificate.method == "bounded-sample":
        bound = int(certificate.bound or 0)
        if bound < 2 or certificate.checked != tuple(range(2, bound + 1)):
            return False
        seed = int(certificate.context.get("seed", 0))
        samples = int(certificate.context.get("samples", 0))
        return _bounded_side_check(E, side, bound, seed, samples)
    return False


@dataclass
class PushoutResult:
    group: PushoutGroup
    checks: Dict[str, bool]
    certificates: List[PurityCertificate] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _parse_map(rows: Sequence[Sequence[Any]], r: int, C: CompletelyDecomposable, name: str) -> Tuple[RationalVector, ...]:
    if len(rows) != r:
        raise DimensionMismatchError(f"{name} has {len(rows)} rows, base has rank {r}")
    parsed = []
    for row in rows:
        if len(row) != C.rank:
            raise DimensionMismatchError(f"{name} row has {len(row)} entries, target has rank {C.rank}")
        parsed.append(tuple(parse_rational(c) for c in row))
    return tuple(parsed)


def closure_generators(E: PushoutGroup) -> List[RationalVector]:
    """Unit vectors at the non-pivot coordinates; with G* they span the ambient over Q."""
    pivots = set(E.pivots)
    return [E.ambient.unit_vector(i) for i in range(E.ambient.rank) if i not in pivots]


def closure_claim_holds(E: PushoutGroup, x: Any, generators: Sequence[Sequence[Any]]) -> bool:
    """
    Decompose x as g* + y with g* in G* and y in the pure closure of the generators.

    Solves m*x = sum(k_i e_i) + g0 with integers m, k_i and g0 in G*, then
    divides g0 by m inside G* (a Q-span, since the base is divisible) and
    checks that y = x - g0/m lies in the ambient with m*y = sum(k_i e_i).
    """
    C = E.ambient
    x = C.coerce(x)
    gens = [C.coerce(e) for e in generators]
    coeffs = rational_in_span(gens + list(E.relations), x)
    if coeffs is None:
        return False
    q = coeffs[:len(gens)]
    m = lcm_all(c.denominator for c in q)
    k = [int(m * c) for c in q]
    combo = [sum((ki * e[j] for ki, e in zip(k, gens)), Fraction(0)) for j in range(C.rank)]
    g0 = tuple(m * a - b for a, b in zip(x, combo))
    if rational_in_span(E.relations, g0) is None:
        return False
    y = tuple(a - b / m for a, b in zip(x, g0))
    return C.member(y) and all(m * a == b for a, b in zip(y, combo))


def amalgamation_pushout(
    G: StructuredGroup,
    H1: Any,
    H2: Any,
    f1: Sequence[Sequence[Any]],
    f2: Sequence[Sequence[Any]],
    bound: int = 50,
    samples: int = 20,
    seed: int = 0,
) -> PushoutResult:
    """
    Amalgamate H1 and H2 over a divisible torsion-free base G = Q^r.

    f1 and f2 give the images of the standard basis of G as rows. The images
    of a divisible group are divisible, hence pure, which forces them onto the
    Q summands of H1 and H2.

    Args:
        G: Base, a sum of Q atoms (empty for the trivial base)
        H1, H2: Torsion-free targets (completely decomposable views are used)
        f1, f2: r rows of rationals
        bound: Largest n for the bounded purity record
        samples: Random sample size for the sampled checks
        seed: Seed for the sampled checks

    Raises:
        PreconditionError: If G is not divisible or the maps are not pure
            injective embeddings
    """
    verdict = is_divisible_group(G, 2) if G.summands else None
    if verdict is not None and not verdict.divisible:
        raise PreconditionError(f"base {G.label()} is not divisible")
    if any(a.kind != "Q" for a in G.summands):
        raise PreconditionError(f"base {G.label()} has torsion; only Q^r bases are supported")
    r = len(G.summands)
    C1 = as_completely_decomposable(H1)
    C2 = as_completely_decomposable(H2)
    E = _pushout_group(C1, C2, _parse_map(f1, r, C1, "f1"), _parse_map(f2, r, C2, "f2"))
    for side in ("left", "right"):
        if not _side_supported_on_divisible(E, side):
            raise PreconditionError(f"{side} embedding of the base is not a pure injective map into the Q summands")

    rng = random.Random(seed)
    ambient_samples = _sample_elements(E.ambient, rng, samples)
    generators = closure_generators(E)
    checks = {
        "injective_left": _side_injective(E, "left"),
        "injective_right": _side_injective(E, "right"),
        "base_agreement": all(E.embed_left(a) == E.embed_right(b) for a, b in zip(E.f1, E.f2)),
        "rank": E.rank == C1.rank + C2.rank - r,
        "torsion_free": all(
            E.is_zero(x) or not E.is_zero(E.scale(m, x)) for x in ambient_samples for m in range(2, 51)
        ),
        "heights": all(
            E.p_height(E.embed_left(h), p) == C1.p_height(h, p)
            for h in _sample_elements(C1, rng, samples)
            for p in sorted(set(C1.relevant_primes(h)) | {2, 3})
        ),
        "closure_claim": all(closure_claim_holds(E, x, generators) for x in ambient_samples),
    }
    context = {"pushout": E.to_json()}
    certificates = []
    for side in ("left", "right"):
        certificates.append(
            PurityCertificate("height-preservation", True, (), context={**context, "side": side})
        )
        if _bounded_side_check(E, side, bound, seed, samples):
            certificates.append(
                PurityCertificate(
                    "bounded-sample",
                    False,
                    tuple(range(2, bound + 1)),
                    context={**context, "side": side, "seed": seed, "samples": samples},
                    bound=bound,
                )
            )
        else:
            checks[f"purity_{side}"] = False
    logger.info(f"Pushout over {G.label()} has rank {E.rank}; checks {checks}")
    return PushoutResult(E, checks, certificates)


@dataclass(frozen=True)
class PairVerdict:
    i: int
    j: int
    verdict: str
    witness: Any = None


@dataclass
class InstabilityReport:
    base: CompletelyDecomposable
    family: List[Characteristic]
    verdicts: List[PairVerdict]

    @property
    def not_equal(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict == "not-equal")

    @property
    def inconclusive(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict == "inconclusive")

    @property
    def equal(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict == "equal")

    def to_json(self) -> Dict[str, Any]:
        return {
            "base": self.base.to_json(),
            "family": [chi.to_json() for chi in self.family],
            "pairs": len(self.verdicts),
            "not_equal": self.not_equal,
            "equal": self.equal,
            "inconclusive": self.inconclusive,
            "verdicts": [
                {
                    "pair": [v.i, v.j],
                    "verdict": v.verdict,
                    "witness": None if v.witness is None else v.witness.to_dict(),
                }
                for v in self.verdicts
            ],
        }


def instability_demo(G: CompletelyDecomposable, n: int, seed: int = 0, workers: int = 1) -> InstabilityReport:
    """
    Compare the Galois types over G of the elements 1 in G_chi_i, pairwise.

    H = G + G_chi_0 + ... + G_chi_{n-1} with pairwise type-inequivalent chi_i.
    Each G_chi_i is a pure summand, so heights of a_i inside H are those of
    1 in G_chi_i and every pair should come out not-equal.
    """
    from .galois_types import gtype_eq_tf

    if n < 1:
        raise PreconditionError(f"family size must be at least 1, got {n}")
    family = distinct_type_family(n, seed) if n > 1 else []
    H = direct_sum_cd(G, CompletelyDecomposable(tuple(RankOneGroup(chi) for chi in family)))
    base = [H.unit_vector(i) for i in range(G.rank)]
    points = [H.unit_vector(G.rank + i) for i in range(len(family))]
    pairs = [(i, j) for i in range(len(points)) for j in range(i + 1, len(points))]

    def compare(pair):
        i, j = pair
        result = gtype_eq_tf(points[i], points[j], base, H)
        return PairVerdict(i, j, result.verdict, result.witness)

    with WorkerPoolSession(workers=workers) as pool:
        verdicts = pool.map_ordered(compare, pairs)
    report = InstabilityReport(G, family, verdicts)
    logger.info(
        f"Instability demo: {len(pairs)} pairs, {report.not_equal} not-equal, {report.inconclusive} inconclusive"
    )
    return report
