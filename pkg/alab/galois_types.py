"""
Galois types over a base subgroup.

For groups with torsion the type of a over G is captured by the least n with
n*a in G (and the element n*a). For torsion-free groups the type of a over a
pure G is decided by comparing the pure closures of G + a and G + b: the only
candidate map is the rational-linear one fixing G and sending a to b, and it
is an isomorphism of closures exactly when it is one locally at every prime.
Only finitely many primes can make a difference; the rest behave like one
generic prime.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .arith import (
    INFINITY,
    Height,
    format_height,
    format_rational,
    frac_valuation,
    is_prime,
    lcm_all,
    parse_rational,
    prime_factors,
    valuation,
)
from .butler import CompletelyDecomposable, as_completely_decomposable, cd_vector, purify_in_cd
from .certificates import ClosureIsoCertificate, TypeInequalityWitness
from .errors import InvalidElementError, NotPureError, PreconditionError
from .exact_linalg import IntMatrix, rational_in_span, rational_rref, smith_normal_form
from .fg_groups import FgGroup, FgSubgroup, element_order, is_pure, quotient, to_canonical

logger = logging.getLogger(__name__)

RationalVector = Tuple[Fraction, ...]


@dataclass(frozen=True)
class GaloisTypeAb:
    """
    Type of a over G in a group with torsion.

    kind "free": <a> ∩ G = 0 and n is the order of a (INFINITY when a has
    infinite order). kind "torsioned": n is the least positive integer with
    n*a in G and gstar = n*a != 0.
    """

    kind: str
    n: Height
    gstar: Optional[Tuple[int, ...]] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": format_height(self.n),
            "gstar": None if self.gstar is None else [str(c) for c in self.gstar],
        }

    def label(self) -> str:
        if self.kind == "free":
            return f"Free(order={format_height(self.n)})"
        return f"Torsioned({self.n}, {list(self.gstar)})"


def gtype_ab(a: Sequence[int], G: FgSubgroup, H: Optional[FgGroup] = None) -> GaloisTypeAb:
    """
    Galois type of a over G inside H = G.ambient.

    Args:
        a: Element in canonical coordinates of H
        G: Base subgroup
        H: Optional ambient, checked against G.ambient

    Raises:
        InvalidElementError: If a is not an element of H
        PreconditionError: If H is not the ambient of G
    """
    if H is not None and H != G.ambient:
        raise PreconditionError(f"base lives in {G.ambient.label()}, not in {H.label()}")
    H = G.ambient
    a = H.normalize(a)
    Q = quotient(G)
    n = element_order(Q, to_canonical(Q, a))
    if n == INFINITY:
        return GaloisTypeAb("free", INFINITY)
    na = H.scale(n, a)
    if H.is_zero(na):
        return GaloisTypeAb("free", n)
    return GaloisTypeAb("torsioned", n, na)


def gtype_ab_equal(a: Sequence[int], b: Sequence[int], G: FgSubgroup) -> bool:
    return gtype_ab(a, G) == gtype_ab(b, G)


def _closure_map_exists(as_: Sequence[Sequence[int]], bs: Sequence[Sequence[int]], G: FgSubgroup, multipliers) -> bool:
    H = G.ambient
    for m in multipliers:
        sa = H.normalize([sum(k * x[j] for k, x in zip(m, as_)) for j in range(H.dimension)])
        sb = H.normalize([sum(k * x[j] for k, x in zip(m, bs)) for j in range(H.dimension)])
        in_a, in_b = G.contains(sa), G.contains(sb)
        if in_a != in_b or (in_a and sa != sb):
            return False
    return True


def gtype_ab_brute_force(a: Sequence[int], b: Sequence[int], G: FgSubgroup, bound: int = 360) -> bool:
    """
    Search for an isomorphism <G, a> -> <G, b> fixing G with a -> b.

    Such a map exists iff for every m: m*a in G exactly when m*b in G, and then
    m*a = m*b. When a and b have finite order the pattern repeats with period
    lcm(ord a, ord b), so the search is exhaustive; otherwise m runs to bound.
    """
    H = G.ambient
    oa, ob = element_order(H, a), element_order(H, b)
    top = lcm_all([int(oa), int(ob)]) if oa != INFINITY and ob != INFINITY else bound
    return _closure_map_exists([a], [b], G, ((m,) for m in range(1, top + 1)))


def gtype_ab_tuple_brute_force(
    as_: Sequence[Sequence[int]], bs: Sequence[Sequence[int]], G: FgSubgroup, box: int = 4
) -> bool:
    """Tuple version of the closure-map search over coefficient vectors in [-box, box]^k."""
    if len(as_) != len(bs):
        raise PreconditionError(f"tuples have lengths {len(as_)} and {len(bs)}")
    multipliers = (m for m in product(range(-box, box + 1), repeat=len(as_)) if any(m))
    return _closure_map_exists(as_, bs, G, multipliers)


def _combine(coeffs: Sequence[Fraction], rows: Sequence[Sequence[Fraction]], width: int) -> RationalVector:
    out = [Fraction(0)] * width
    for c, row in zip(coeffs, rows):
        if c:
            out = [x + c * y for x, y in zip(out, row)]
    return tuple(out)


@dataclass(frozen=True)
class ClosureIso:
    """
    The map cl(G + a) -> cl(G + b) fixing G with a -> b.

    mode "rational" writes x in the echelon basis of QG plus a; mode
    "division" writes n*x as an integer combination of the base generators
    and a, maps that, and divides by n (divisors in torsion-free groups are
    unique).
    """

    ambient: CompletelyDecomposable
    base: Tuple[RationalVector, ...]
    generators: Tuple[RationalVector, ...]
    source: RationalVector
    target: RationalVector
    mode: str = "rational"

    def apply(self, x: Any) -> RationalVector:
        """
        Raises:
            InvalidElementError: If x is outside the closure
        """
        C = self.ambient
        x = C.coerce(x)
        if self.mode == "rational":
            coeffs = rational_in_span(list(self.base) + [self.source], x)
            if coeffs is None:
                raise InvalidElementError("element is outside the closure")
            return _combine(coeffs, list(self.base) + [self.target], C.rank)
        rows_a = list(self.generators) + [self.source]
        coeffs = rational_in_span(rows_a, x)
        if coeffs is None:
            raise InvalidElementError("element is outside the closure")
        n = lcm_all(c.denominator for c in coeffs)
        image = _combine([n * c for c in coeffs], list(self.generators) + [self.target], C.rank)
        quotient_image = C.divide(image, n)
        if quotient_image is None:
            raise InvalidElementError(f"image is not divisible by {n}; the map is not an isomorphism")
        return quotient_image

    def with_mode(self, mode: str) -> "ClosureIso":
        return ClosureIso(self.ambient, self.base, self.generators, self.source, self.target, mode)

    def spanning_set(self) -> List[RationalVector]:
        """Base generators, a, and a basis of the closure lattice when one exists."""
        items = list(self.generators) + [self.source]
        witness = purify_in_cd(items, self.ambient)
        if witness.lattice is not None:
            items.extend(witness.lattice)
        else:
            for row in witness.span:
                m = lcm_all(c.denominator for c in row)
                items.append(tuple(m * c for c in row))
        return items


def pseudo_universality_check(f: ClosureIso, g: ClosureIso, spanning: Optional[Sequence[Any]] = None) -> bool:
    """
    True iff f and g agree on a spanning set of the closure.

    Both maps must fix the base and agree on a; in a torsion-free ambient the
    answer is then always True.

    Raises:
        PreconditionError: If the maps disagree on the generators
    """
    if f.ambient != g.ambient:
        raise PreconditionError("maps live on different ambients")
    for v in f.generators:
        if f.apply(v) != v or g.apply(v) != v:
            raise PreconditionError("maps do not fix the base")
    if f.apply(f.source) != g.apply(f.source):
        raise PreconditionError("maps disagree on the generator")
    items = list(spanning) if spanning is not None else f.spanning_set()
    return all(f.apply(x) == g.apply(x) for x in items)


@dataclass
class TypeEqualityResult:
    verdict: str
    witness: Optional[TypeInequalityWitness] = None
    iso: Optional[ClosureIso] = None
    certificate: Optional[ClosureIsoCertificate] = None
    primes: Tuple[int, ...] = field(default_factory=tuple)

    def to_json(self) -> Dict[str, Any]:
        evidence = self.witness or self.certificate
        return {"verdict": self.verdict, "witness": None if evidence is None else evidence.to_dict()}


def _encode(v: Sequence[Fraction]) -> List[str]:
    return [format_rational(c) for c in v]


def _decode(v: Sequence[Any]) -> RationalVector:
    return tuple(parse_rational(c) for c in v)


def _vector_primes(rows: Sequence[Sequence[Fraction]]) -> set:
    primes = set()
    for row in rows:
        for c in row:
            if c:
                primes.update(prime_factors(c.numerator))
                primes.update(prime_factors(c.denominator))
    return primes


def _integerize(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[int]], int]:
    c = lcm_all(x.denominator for row in rows for x in row)
    return [[int(x * c) for x in row] for row in rows], c


def _check_primes(C: CompletelyDecomposable, M_a, M_b) -> List[int]:
    """Primes where the local comparison can differ, plus one generic prime."""
    primes = set()
    for G in C.summands:
        primes.update(G.chi.primes)
    primes |= _vector_primes(M_a) | _vector_primes(M_b)
    zero_default = [i for i, G in enumerate(C.summands) if G.chi.default == 0]
    if zero_default:
        for M in (M_a, M_b):
            rows, _ = _integerize([[row[i] for i in zero_default] for row in M])
            for d in smith_normal_form(IntMatrix.from_rows(rows, len(zero_default))).invariant_factors:
                primes.update(prime_factors(d))
    spare = 2
    while spare in primes or not is_prime(spare):
        spare += 1
    return sorted(primes | {spare})


def _local_matrix(M, C: CompletelyDecomposable, p: int) -> List[List[Fraction]]:
    cols = [(i, C.summands[i].chi.value_at(p)) for i in range(C.rank)]
    cols = [(i, h) for i, h in cols if h != INFINITY]
    return [[row[i] * p ** h for i, h in cols] for row in M]


def _local_module(N: List[List[Fraction]], p: int, size: int) -> Tuple[List[RationalVector], List[RationalVector]]:
    """
    Generators of {z : z*N has p-integral entries}: a Z_(p)-lattice part and a
    rational kernel part.
    """
    identity = [tuple(Fraction(1 if i == j else 0) for j in range(size)) for i in range(size)]
    if not N or not N[0]:
        return [], identity
    rows, c = _integerize(N)
    snf = smith_normal_form(IntMatrix.from_rows(rows, len(rows[0])))
    r = snf.rank
    lattice = []
    for i, d in enumerate(snf.invariant_factors):
        e = valuation(c, p) - valuation(d, p)
        lattice.append(tuple(Fraction(x) * Fraction(p) ** e for x in snf.U.row(i)))
    kernel = [tuple(Fraction(x) for x in snf.U.row(i)) for i in range(r, size)]
    return lattice, kernel


def _times(z: Sequence[Fraction], N: Sequence[Sequence[Fraction]]) -> List[Fraction]:
    if not N:
        return []
    return [sum((zi * row[j] for zi, row in zip(z, N)), Fraction(0)) for j in range(len(N[0]))]


def _p_integral(values: Sequence[Fraction], p: int) -> bool:
    return all(v == 0 or frac_valuation(v, p) >= 0 for v in values)


def _local_escape(N_from, N_to, p: int, size: int) -> Optional[RationalVector]:
    """Some z with z*N_from p-integral and z*N_to not, or None."""
    lattice, kernel = _local_module(N_from, p, size)
    for z in lattice:
        if not _p_integral(_times(z, N_to), p):
            return z
    for k in kernel:
        image = _times(k, N_to)
        if any(image):
            v = min(frac_valuation(x, p) for x in image if x)
            return tuple(x * Fraction(p) ** (-(v + 1)) for x in k) if v >= 0 else k
    return None


def _globalize(z: RationalVector, M, C: CompletelyDecomposable, p: int) -> RationalVector:
    """Scale z by an integer prime to p so that z*M lands in C at every other prime."""
    w = _times(z, M)
    s = 1
    for i, x in enumerate(w):
        if not x:
            continue
        chi = C.summands[i].chi
        for q in prime_factors(x.denominator):
            if q == p:
                continue
            h = chi.value_at(q)
            if h == INFINITY:
                continue
            need = -frac_valuation(x, q) - h
            if need > 0 and valuation(s, q) < need:
                s *= q ** (need - valuation(s, q))
    return tuple(s * c for c in z)


def _probes(v: RationalVector, gens: Sequence[RationalVector]) -> List[RationalVector]:
    return [v] + [tuple(x + y for x, y in zip(v, g)) for g in gens]


def _height_mismatch(C, a, b, gens, primes, context) -> Optional[TypeInequalityWitness]:
    for t, (pa, pb) in enumerate(zip(_probes(a, gens), _probes(b, gens))):
        for p in primes:
            ha, hb = C.p_height(pa, p), C.p_height(pb, p)
            if ha != hb:
                return TypeInequalityWitness(
                    reason="height",
                    context=context,
                    prime=p,
                    probe=t,
                    height_a=format_height(ha),
                    height_b=format_height(hb),
                )
    return None


def gtype_eq_tf(a: Any, b: Any, base: Sequence[Any], H: Any, rank_bound: int = 8) -> TypeEqualityResult:
    """
    Decide whether a and b have the same Galois type over the pure closure of
    `base` in the torsion-free group H.

    Heights of the probes a + g against b + g are compared first; a mismatch
    is returned as a height witness. Otherwise, up to the rank bound, the
    closures are compared prime by prime and the verdict is either the
    closure isomorphism or an element of cl(G + a) whose image leaves H.

    Args:
        a, b: Elements of H
        base: Generators of the base; for an FgGroup ambient they must span a
            pure subgroup, otherwise their pure closure is used
        H: FgGroup (torsion-free), StructuredGroup of Z, Q and Loc atoms,
            RankOneGroup or CompletelyDecomposable
        rank_bound: Largest closure rank handled before answering inconclusive

    Raises:
        NotPureError: If base is not pure in an FgGroup ambient
        PreconditionError: If H has torsion
    """
    C = as_completely_decomposable(H)
    if isinstance(H, FgGroup):
        verdict = is_pure(FgSubgroup(H, tuple(tuple(g) for g in base)))
        if not verdict.is_pure:
            raise NotPureError(f"base is not pure in {H.label()}", verdict)
    av, bv = cd_vector(a, H), cd_vector(b, H)
    gens = [cd_vector(g, H) for g in base]
    context = {
        "ambient": C.to_json(),
        "base": [_encode(g) for g in gens],
        "a": _encode(av),
        "b": _encode(bv),
        "rank_bound": rank_bound,
    }
    return _decide(C, av, bv, gens, rank_bound, context)


def _decide(C, av, bv, gens, rank_bound, context) -> TypeEqualityResult:
    rows, _ = rational_rref(gens)
    V = tuple(tuple(r) for r in rows)
    iso = ClosureIso(C, V, tuple(gens), av, bv)
    if av == bv:
        return TypeEqualityResult("equal", iso=iso, certificate=ClosureIsoCertificate((), context))

    in_a = rational_in_span(V, av) is not None
    in_b = rational_in_span(V, bv) is not None
    if in_a or in_b:
        direction = "both" if in_a and in_b else ("a" if in_a else "b")
        witness = TypeInequalityWitness(reason="span", context=context, direction=direction)
        logger.debug(f"Type comparison settled by span membership ({direction})")
        return TypeEqualityResult("not-equal", witness=witness)

    M_a, M_b = list(V) + [av], list(V) + [bv]
    primes = _check_primes(C, M_a, M_b)
    witness = _height_mismatch(C, av, bv, gens, primes, context)
    if witness is not None:
        logger.debug(f"Heights differ at p={witness.prime} on probe {witness.probe}")
        return TypeEqualityResult("not-equal", witness=witness, primes=tuple(primes))

    size = len(M_a)
    if size > rank_bound:
        logger.info(f"Closure rank {size} exceeds bound {rank_bound}; inconclusive")
        return TypeEqualityResult("inconclusive", primes=tuple(primes))

    for p in primes:
        N_a, N_b = _local_matrix(M_a, C, p), _local_matrix(M_b, C, p)
        for direction, (N_from, N_to, M_from) in (("a->b", (N_a, N_b, M_a)), ("b->a", (N_b, N_a, M_b))):
            z = _local_escape(N_from, N_to, p, size)
            if z is None:
                continue
            coefficients = _globalize(z, M_from, C, p)
            witness = TypeInequalityWitness(
                reason="element",
                context=context,
                prime=p,
                coefficients=tuple(format_rational(c) for c in coefficients),
                direction=direction,
            )
            logger.debug(f"Closures differ locally at p={p} ({direction})")
            return TypeEqualityResult("not-equal", witness=witness, primes=tuple(primes))

    certificate = ClosureIsoCertificate(tuple(primes), context)
    return TypeEqualityResult("equal", iso=iso, certificate=certificate, primes=tuple(primes))


def _from_context(context: Dict[str, Any]):
    C = CompletelyDecomposable.from_json(context["ambient"])
    gens = [C.coerce(_decode(g)) for g in context["base"]]
    av, bv = C.coerce(_decode(context["a"])), C.coerce(_decode(context["b"]))
    return C, av, bv, gens


def verify_type_evidence(certificate) -> bool:
    """Re-check a TypeInequalityWitness or ClosureIsoCertificate from its context."""
    context = certificate.context
    C, av, bv, gens = _from_context(context)
    if isinstance(certificate, ClosureIsoCertificate):
        fresh = _decide(C, av, bv, gens, int(context.get("rank_bound", 8)), context)
        return fresh.verdict == "equal" and fresh.certificate.primes == certificate.primes
    rows, _ = rational_rref(gens)
    V = [tuple(r) for r in rows]
    in_a = rational_in_span(V, av) is not None
    in_b = rational_in_span(V, bv) is not None
    if certificate.reason == "span":
        expected = "both" if in_a and in_b else ("a" if in_a else ("b" if in_b else None))
        return expected is not None and certificate.direction == expected and av != bv
    if in_a or in_b:
        return False
    if certificate.reason == "height":
        probes_a, probes_b = _probes(av, gens), _probes(bv, gens)
        t, p = certificate.probe, certificate.prime
        if t is None or p is None or not 0 <= t < len(probes_a) or not is_prime(p):
            return False
        ha, hb = C.p_height(probes_a[t], p), C.p_height(probes_b[t], p)
        return ha != hb and format_height(ha) == certificate.height_a and format_height(hb) == certificate.height_b
    if certificate.reason == "element":
        z = _decode(certificate.coefficients or ())
        if len(z) != len(V) + 1:
            return False
        M_a, M_b = V + [av], V + [bv]
        if certificate.direction == "a->b":
            source, target = _times(z, M_a), _times(z, M_b)
        elif certificate.direction == "b->a":
            source, target = _times(z, M_b), _times(z, M_a)
        else:
            return False
        return C.member(source) and not C.member(target)
    return False
