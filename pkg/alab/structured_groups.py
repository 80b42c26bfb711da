"""
Finite direct sums of standard atoms.

Atoms are Z, Z/n, Q, the Prüfer group Z(p^inf), the localization Z_(p) and a
finite-precision stand-in for the p-adic completion of a direct sum of Z_(p)
copies: w coordinates kept modulo p^K. Elements are tuples of per-atom
components:

    Z           int
    Zmod(n)     int in [0, n)
    Q           Fraction
    Pruefer(p)  Fraction in [0, 1) with a p-power denominator
    Loc(p)      Fraction with denominator prime to p
    Completion  tuple of w ints in [0, p^K)
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .arith import (
    INFINITY,
    Height,
    format_rational,
    frac_valuation,
    lcm_all,
    parse_rational,
    prime_factors,
    require_prime,
    smallest_prime_factor,
    valuation,
)
from .certificates import InjectivityCertificate, NonPurityWitness, PurityCertificate
from .characteristics import rank_one_from_atom
from .errors import InvalidElementError, PreconditionError
from .fg_groups import FgGroup

logger = logging.getLogger(__name__)

ATOM_KINDS = ("Z", "Zmod", "Q", "Pruefer", "Loc", "Completion")
TORSION_FREE_KINDS = ("Z", "Q", "Loc", "Completion")
RANK_ONE_KINDS = ("Z", "Q", "Loc")

Component = Union[int, Fraction, Tuple[int, ...]]


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool):
        raise InvalidElementError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, Fraction):
        if value.denominator != 1:
            raise InvalidElementError(f"{what} must be an integer, got {format_rational(value)}")
        return value.numerator
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise InvalidElementError(f"{what} must be an integer, got {value!r}") from e


def _as_fraction(value: Any, what: str) -> Fraction:
    try:
        return parse_rational(value)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidElementError(f"{what} must be a rational, got {value!r}") from e


@dataclass(frozen=True)
class Atom:
    """One summand kind with its parameters."""

    kind: str
    n: Optional[int] = None
    p: Optional[int] = None
    K: Optional[int] = None
    w: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ATOM_KINDS:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.kind == "Zmod":
            if self.n is None or self.n < 2:
                raise ValueError(f"Zmod needs n >= 2, got {self.n}")
        if self.kind in ("Pruefer", "Loc", "Completion"):
            if self.p is None:
                raise ValueError(f"{self.kind} needs a prime p")
            require_prime(self.p)
        if self.kind == "Completion":
            if self.K is None or self.K < 1:
                raise ValueError(f"Completion needs precision K >= 1, got {self.K}")
            if self.w is None or self.w < 1:
                raise ValueError(f"Completion needs width w >= 1, got {self.w}")

    @property
    def is_torsion_free(self) -> bool:
        return self.kind in TORSION_FREE_KINDS

    @property
    def is_divisible(self) -> bool:
        return self.kind in ("Q", "Pruefer")

    @property
    def modulus(self) -> int:
        """p^K for the completion proxy."""
        return self.p ** self.K

    def label(self) -> str:
        if self.kind == "Zmod":
            return f"Z/{self.n}"
        if self.kind == "Pruefer":
            return f"Z({self.p}^inf)"
        if self.kind == "Loc":
            return f"Z_({self.p})"
        if self.kind == "Completion":
            return f"C({self.p},K={self.K},w={self.w})"
        return self.kind

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"atom": self.kind}
        for key in ("n", "p", "K", "w"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Atom":
        return cls(
            kind=data["atom"],
            n=data.get("n"),
            p=data.get("p"),
            K=data.get("K"),
            w=data.get("w"),
        )

    # Component arithmetic

    def zero(self) -> Component:
        if self.kind in ("Z", "Zmod"):
            return 0
        if self.kind == "Completion":
            return (0,) * self.w
        return Fraction(0)

    def normalize(self, c: Any) -> Component:
        """
        Validate a component and bring it to canonical form.

        Raises:
            InvalidElementError: If c is not an element of this atom
        """
        kind = self.kind
        if kind == "Z":
            return _as_int(c, "Z component")
        if kind == "Zmod":
            return _as_int(c, "Z/n component") % self.n
        if kind == "Q":
            return _as_fraction(c, "Q component")
        if kind == "Pruefer":
            q = _as_fraction(c, "Prüfer component")
            if q.denominator != self.p ** valuation(q.denominator, self.p):
                raise InvalidElementError(f"{format_rational(q)} has a denominator that is not a power of {self.p}")
            return q % 1
        if kind == "Loc":
            q = _as_fraction(c, "Z_(p) component")
            if q.denominator % self.p == 0:
                raise InvalidElementError(f"{format_rational(q)} is not in Z_({self.p})")
            return q
        if isinstance(c, (str, bytes)) or not isinstance(c, Sequence) or len(c) != self.w:
            raise InvalidElementError(f"completion component needs {self.w} coordinates, got {c!r}")
        return tuple(_as_int(x, "completion coordinate") % self.modulus for x in c)

    def is_zero(self, c: Component) -> bool:
        if self.kind == "Completion":
            return not any(c)
        return c == 0

    def add(self, a: Component, b: Component) -> Component:
        if self.kind == "Completion":
            return tuple((x + y) % self.modulus for x, y in zip(a, b))
        return self.normalize(a + b)

    def negate(self, a: Component) -> Component:
        if self.kind == "Completion":
            return tuple((-x) % self.modulus for x in a)
        return self.normalize(-a)

    def scale(self, k: int, a: Component) -> Component:
        if self.kind == "Completion":
            return tuple((k * x) % self.modulus for x in a)
        return self.normalize(k * a)

    def divide(self, c: Component, n: int) -> Optional[Component]:
        """Canonical x with n*x = c, or None when no x exists."""
        if n < 1:
            raise PreconditionError(f"divisor must be positive, got {n}")
        kind = self.kind
        if kind == "Z":
            return c // n if c % n == 0 else None
        if kind == "Zmod":
            g = gcd(n, self.n)
            if c % g:
                return None
            m = self.n // g
            return (c // g) * pow(n // g, -1, m) % m if m > 1 else 0
        if kind == "Q":
            return c / n
        if kind == "Loc":
            x = c / n
            return x if x.denominator % self.p else None
        if kind == "Pruefer":
            if c == 0:
                return Fraction(0)
            s = valuation(n, self.p)
            u = n // self.p ** s
            scale = c.denominator * self.p ** s
            return Fraction(c.numerator * pow(u, -1, scale), scale) % 1
        s = valuation(n, self.p)
        u = n // self.p ** s
        out = []
        for x in c:
            if s >= self.K:
                if x % self.modulus:
                    return None
                out.append(0)
                continue
            if x % self.p ** s:
                return None
            rest = self.p ** (self.K - s)
            out.append((x // self.p ** s) * pow(u, -1, rest) % rest)
        return tuple(out)

    def p_height(self, c: Component, q: int) -> Height:
        if self.is_zero(c) or self.is_divisible:
            return INFINITY
        kind = self.kind
        if kind == "Z":
            return valuation(c, q)
        if kind == "Zmod":
            return INFINITY if valuation(c, q) >= valuation(self.n, q) else valuation(c, q)
        if q != self.p:
            return INFINITY
        if kind == "Loc":
            return frac_valuation(c, q)
        # Completion: zero modulo p^K reads as infinitely divisible at this precision.
        return min(valuation(x, q) for x in c if x)

    def relevant_primes(self, c: Component) -> List[int]:
        if self.is_zero(c):
            return []
        if self.kind == "Z":
            return prime_factors(c)
        if self.kind == "Zmod":
            return sorted(set(prime_factors(c)) | set(prime_factors(self.n)))
        if self.kind in ("Loc", "Completion"):
            return [self.p]
        return []

    def height_default(self, c: Component) -> Height:
        return 0 if self.kind == "Z" and c != 0 else INFINITY

    def dim_mod_p(self, p: int) -> int:
        """Dimension of A/pA over the field with p elements."""
        if self.kind == "Z":
            return 1
        if self.kind == "Zmod":
            return 1 if self.n % p == 0 else 0
        if self.kind == "Loc":
            return 1 if self.p == p else 0
        if self.kind == "Completion":
            return self.w if self.p == p else 0
        return 0

    def mod_p_vector(self, c: Component, p: int) -> List[int]:
        """Image of c in A/pA in the standard basis."""
        if self.dim_mod_p(p) == 0:
            return []
        if self.kind in ("Z", "Zmod"):
            return [c % p]
        if self.kind == "Loc":
            return [c.numerator * pow(c.denominator, -1, p) % p]
        return [x % p for x in c]

    def coordinate_count(self) -> int:
        return self.w if self.kind == "Completion" else 1

    def unit(self, coordinate: int = 0) -> Component:
        """Standard generator-like element: 1, 1/p in a Prüfer atom, e_i in the proxy."""
        if self.kind == "Completion":
            return tuple(1 if i == coordinate else 0 for i in range(self.w))
        if self.kind == "Pruefer":
            return Fraction(1, self.p)
        return self.normalize(1)

    def encode(self, c: Component) -> Any:
        if self.kind == "Completion":
            return [str(x) for x in c]
        if self.kind in ("Z", "Zmod"):
            return str(c)
        return format_rational(c)

    def decode(self, data: Any) -> Component:
        return self.normalize(data)


def Z() -> Atom:
    return Atom("Z")


def Zmod(n: int) -> Atom:
    return Atom("Zmod", n=n)


def Q() -> Atom:
    return Atom("Q")


def Pruefer(p: int) -> Atom:
    return Atom("Pruefer", p=p)


def Loc(p: int) -> Atom:
    return Atom("Loc", p=p)


def Completion(p: int, K: int, w: int) -> Atom:
    return Atom("Completion", p=p, K=K, w=w)


@dataclass(frozen=True)
class StructuredGroup:
    """Ordered direct sum of atoms."""

    summands: Tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))

    def __len__(self):
        return len(self.summands)

    def element(self, components: Sequence[Any]) -> "GroupElement":
        if len(components) != len(self.summands):
            raise InvalidElementError(
                f"element has {len(components)} components, group {self.label()} has {len(self.summands)} summands"
            )
        return GroupElement(self, tuple(a.normalize(c) for a, c in zip(self.summands, components)))

    def zero(self) -> "GroupElement":
        return GroupElement(self, tuple(a.zero() for a in self.summands))

    def coerce(self, x: Any) -> "GroupElement":
        if isinstance(x, GroupElement):
            if x.group != self:
                raise InvalidElementError(f"element of {x.group.label()} used in {self.label()}")
            return x
        return self.element(x)

    def is_zero(self, x: Any) -> bool:
        x = self.coerce(x)
        return all(a.is_zero(c) for a, c in zip(self.summands, x.components))

    @property
    def is_torsion_free(self) -> bool:
        return all(a.is_torsion_free for a in self.summands)

    def coordinates(self) -> List[Tuple[int, int]]:
        """(summand, coordinate) pairs; the proxy atom contributes w of them."""
        return [(i, j) for i, a in enumerate(self.summands) for j in range(a.coordinate_count())]

    def unit_vector(self, summand: int, coordinate: int = 0) -> "GroupElement":
        comps = [a.zero() for a in self.summands]
        comps[summand] = self.summands[summand].unit(coordinate)
        return GroupElement(self, tuple(comps))

    def unit_vectors(self) -> List["GroupElement"]:
        return [self.unit_vector(i, j) for i, j in self.coordinates()]

    def p_height(self, x: Any, p: int) -> Height:
        x = self.coerce(x)
        return min((a.p_height(c, p) for a, c in zip(self.summands, x.components)), default=INFINITY)

    def relevant_primes(self, x: Any) -> List[int]:
        x = self.coerce(x)
        primes = set()
        for a, c in zip(self.summands, x.components):
            primes.update(a.relevant_primes(c))
        return sorted(primes)

    def height_default(self, x: Any) -> Height:
        x = self.coerce(x)
        return min((a.height_default(c) for a, c in zip(self.summands, x.components)), default=INFINITY)

    def label(self) -> str:
        return " + ".join(a.label() for a in self.summands) if self.summands else "0"

    def to_json(self) -> Dict[str, Any]:
        return {"summands": [a.to_json() for a in self.summands]}

    @classmethod
    def from_json(cls, data: Union[Mapping[str, Any], Sequence[Any]]) -> "StructuredGroup":
        items = data["summands"] if isinstance(data, Mapping) else data
        return cls(tuple(Atom.from_json(item) for item in items))


@dataclass(frozen=True)
class GroupElement:
    """Element of a StructuredGroup; components are already normalized."""

    group: StructuredGroup
    components: Tuple[Component, ...]

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return add(self, other)

    def __neg__(self) -> "GroupElement":
        return negate(self)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return add(self, negate(other))

    def __rmul__(self, k: int) -> "GroupElement":
        return scalar_mul(k, self)

    def coordinate(self, summand: int, coordinate: int = 0) -> Component:
        c = self.components[summand]
        return c[coordinate] if self.group.summands[summand].kind == "Completion" else c

    def to_json(self) -> List[Any]:
        return [a.encode(c) for a, c in zip(self.group.summands, self.components)]

    @classmethod
    def from_json(cls, group: StructuredGroup, data: Sequence[Any]) -> "GroupElement":
        return group.element(list(data))

    def label(self) -> str:
        return "(" + ", ".join(str(v) if not isinstance(v, list) else "[" + ",".join(v) + "]" for v in self.to_json()) + ")"


def _same_group(x: GroupElement, y: GroupElement) -> StructuredGroup:
    if x.group != y.group:
        raise InvalidElementError(f"group mismatch: {x.group.label()} vs {y.group.label()}")
    return x.group


def add(x: GroupElement, y: GroupElement) -> GroupElement:
    G = _same_group(x, y)
    return GroupElement(G, tuple(a.add(c, d) for a, c, d in zip(G.summands, x.components, y.components)))


def negate(x: GroupElement) -> GroupElement:
    return GroupElement(x.group, tuple(a.negate(c) for a, c in zip(x.group.summands, x.components)))


def scalar_mul(k: int, x: GroupElement) -> GroupElement:
    return GroupElement(x.group, tuple(a.scale(k, c) for a, c in zip(x.group.summands, x.components)))


def divide(y: GroupElement, n: int) -> Optional[GroupElement]:
    """
    Canonical x with n*x = y, or None.

    Components divide independently; the answer uses lowest terms and least
    non-negative residues.
    """
    parts = []
    for a, c in zip(y.group.summands, y.components):
        x = a.divide(c, n)
        if x is None:
            return None
        parts.append(x)
    return GroupElement(y.group, tuple(parts))


def direct_sum(*groups: StructuredGroup) -> StructuredGroup:
    return StructuredGroup(tuple(a for G in groups for a in G.summands))


def to_structured(G: FgGroup) -> StructuredGroup:
    """Z^r + Z/d1 + ... with the same coordinate order as G's canonical form."""
    return StructuredGroup(tuple([Z()] * G.free_rank + [Zmod(d) for d in G.invariant_factors]))


def structured_element(G: FgGroup, x: Sequence[int]) -> GroupElement:
    return to_structured(G).element(list(G.normalize(x)))


@dataclass(frozen=True)
class DivisibilityVerdict:
    divisible: bool
    bound: int
    witness: Optional[GroupElement] = None
    witness_n: Optional[int] = None
    witness_summand: Optional[int] = None


def is_divisible_group(G: StructuredGroup, bound: int = 50) -> DivisibilityVerdict:
    """
    Structural divisibility test with a spot re-check up to `bound`.

    Groups made of Q and Prüfer atoms are divisible; any other atom yields a
    witness (element, n) with no n-th part.
    """
    if bound < 2:
        raise PreconditionError(f"bound must be at least 2, got {bound}")
    for i, atom in enumerate(G.summands):
        if atom.is_divisible:
            continue
        if atom.kind == "Z":
            n = 2
        elif atom.kind == "Zmod":
            n = smallest_prime_factor(atom.n)
        else:
            n = atom.p
        witness = G.unit_vector(i)
        if divide(witness, n) is not None:
            raise AssertionError(f"divisibility witness for {atom.label()} failed")
        logger.debug(f"{G.label()} is not divisible: summand {i} witness n={n}")
        return DivisibilityVerdict(False, bound, witness, n, i)
    for u in G.unit_vectors():
        for n in range(2, bound + 1):
            x = divide(u, n)
            if x is None or scalar_mul(n, x) != u:
                raise AssertionError(f"spot check failed for n={n} in {G.label()}")
    return DivisibilityVerdict(True, bound)


@dataclass(frozen=True)
class DivisibleForm:
    """rk_0 and rk_p of a divisible group; these determine it up to isomorphism."""

    rk0: int
    rkp: Dict[int, int] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"rk0": self.rk0, "rkp": {str(p): c for p, c in sorted(self.rkp.items())}}


def canonical_divisible_form(G: StructuredGroup) -> DivisibleForm:
    """
    Raises:
        PreconditionError: If some atom is not divisible
    """
    bad = [a.label() for a in G.summands if not a.is_divisible]
    if bad:
        raise PreconditionError(f"group is not divisible: {', '.join(bad)}")
    rkp: Dict[int, int] = {}
    for a in G.summands:
        if a.kind == "Pruefer":
            rkp[a.p] = rkp.get(a.p, 0) + 1
    return DivisibleForm(sum(1 for a in G.summands if a.kind == "Q"), dict(sorted(rkp.items())))


@dataclass(frozen=True)
class CompactInvariants:
    """delta (rank of the divisible part) and beta(p) = dim G/pG."""

    delta: int
    beta: Dict[int, int] = field(default_factory=dict)

    def beta_at(self, p: int) -> int:
        return self.beta.get(p, 0)

    def to_json(self) -> Dict[str, Any]:
        return {"delta": self.delta, "beta": {str(p): c for p, c in sorted(self.beta.items())}}


def compact_invariants(G: StructuredGroup) -> CompactInvariants:
    """
    Raises:
        PreconditionError: For atoms other than Q, Loc and Completion
    """
    beta: Dict[int, int] = {}
    delta = 0
    for a in G.summands:
        if a.kind == "Q":
            delta += 1
        elif a.kind in ("Loc", "Completion"):
            beta[a.p] = beta.get(a.p, 0) + a.dim_mod_p(a.p)
        else:
            raise PreconditionError(f"compact invariants are not defined for atom {a.label()}")
    return CompactInvariants(delta, dict(sorted(beta.items())))


def compact_isomorphic(G: StructuredGroup, H: StructuredGroup) -> bool:
    return compact_invariants(G) == compact_invariants(H)


@dataclass(frozen=True)
class DivisibleReducedSplit:
    divisible: Tuple[int, ...]
    reduced: Tuple[int, ...]


def divisible_reduced_split(G: StructuredGroup) -> DivisibleReducedSplit:
    """Indices of the divisible atoms and of the rest; G = D + R along them."""
    return DivisibleReducedSplit(
        divisible=tuple(i for i, a in enumerate(G.summands) if a.is_divisible),
        reduced=tuple(i for i, a in enumerate(G.summands) if not a.is_divisible),
    )


def ranks_structured(G: StructuredGroup) -> Tuple[int, Dict[int, int]]:
    """rk_0 (the proxy counts its w coordinates) and rk_p."""
    rk0 = 0
    rkp: Dict[int, int] = {}
    for a in G.summands:
        if a.kind in RANK_ONE_KINDS:
            rk0 += 1
        elif a.kind == "Completion":
            rk0 += a.w
        elif a.kind == "Zmod":
            for p in prime_factors(a.n):
                rkp[p] = rkp.get(p, 0) + 1
        else:
            rkp[a.p] = rkp.get(a.p, 0) + 1
    return rk0, dict(sorted(rkp.items()))


def dim_mod_p_structured(G: StructuredGroup, p: int) -> int:
    require_prime(p)
    return sum(a.dim_mod_p(p) for a in G.summands)


def mod_p_vector(x: GroupElement, p: int) -> List[int]:
    """Coordinates of the image of x in G/pG."""
    out: List[int] = []
    for a, c in zip(x.group.summands, x.components):
        out.extend(a.mod_p_vector(c, p))
    return out


@dataclass(frozen=True)
class SummandMap:
    """Component of a map: source summand -> target summand, scaled by factor."""

    source: int
    target: int
    factor: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "factor", Fraction(self.factor))


def _transfer_ok(src: Atom, tgt: Atom, f: Fraction) -> bool:
    integral = f.denominator == 1
    if src.kind == "Z":
        if tgt.kind in ("Z", "Zmod"):
            return integral
        if tgt.kind == "Q":
            return True
        if tgt.kind == "Loc":
            return f.denominator % tgt.p != 0
        if tgt.kind == "Pruefer":
            return f.denominator == tgt.p ** valuation(f.denominator, tgt.p)
        return False
    if src.kind == "Zmod":
        if tgt.kind == "Zmod":
            return integral and (src.n * f.numerator) % tgt.n == 0
        if tgt.kind == "Pruefer":
            return f.denominator == tgt.p ** valuation(f.denominator, tgt.p) and (src.n * f).denominator == 1
        return False
    if src.kind == "Q":
        return tgt.kind == "Q"
    if src.kind == "Loc":
        if tgt.kind == "Q":
            return True
        return tgt.kind == "Loc" and tgt.p == src.p and f.denominator % src.p != 0
    if src.kind == "Pruefer":
        return tgt == src and integral
    return tgt == src and integral


@dataclass(frozen=True)
class Embedding:
    """
    Additive map between structured groups given summand by summand.

    A source summand may feed several targets (Z/n into one Prüfer copy per
    prime of n) and several sources may share a target.
    """

    domain: StructuredGroup
    codomain: StructuredGroup
    parts: Tuple[SummandMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        for part in self.parts:
            if not 0 <= part.source < len(self.domain) or not 0 <= part.target < len(self.codomain):
                raise PreconditionError(f"summand map {part.source}->{part.target} is out of range")

    def check_well_defined(self) -> None:
        """
        Raises:
            PreconditionError: If some summand map is not a homomorphism
        """
        for part in self.parts:
            src = self.domain.summands[part.source]
            tgt = self.codomain.summands[part.target]
            if not _transfer_ok(src, tgt, part.factor):
                raise PreconditionError(
                    f"map {src.label()} -> {tgt.label()} with factor {format_rational(part.factor)} is not well-defined"
                )

    def apply(self, x: Any) -> GroupElement:
        x = self.domain.coerce(x)
        comps = [a.zero() for a in self.codomain.summands]
        for part in self.parts:
            src = self.domain.summands[part.source]
            tgt = self.codomain.summands[part.target]
            c = x.components[part.source]
            if src.kind == "Completion":
                value = tuple(int(v * part.factor) for v in c)
            else:
                value = c * part.factor
            comps[part.target] = tgt.add(comps[part.target], tgt.normalize(value))
        return GroupElement(self.codomain, tuple(comps))

    def then(self, other: "Embedding") -> "Embedding":
        """self followed by other."""
        if other.domain != self.codomain:
            raise PreconditionError("cannot compose: codomain and domain differ")
        parts = []
        for first in self.parts:
            for second in other.parts:
                if second.source == first.target:
                    parts.append(SummandMap(first.source, second.target, first.factor * second.factor))
        return Embedding(self.domain, other.codomain, tuple(parts))

    def targets_of(self, source: int) -> List[SummandMap]:
        return [part for part in self.parts if part.source == source]

    def to_json(self) -> Dict[str, Any]:
        return {
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "parts": [
                {"source": m.source, "target": m.target, "factor": format_rational(m.factor)} for m in self.parts
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Embedding":
        return cls(
            domain=StructuredGroup.from_json(data["domain"]),
            codomain=StructuredGroup.from_json(data["codomain"]),
            parts=tuple(
                SummandMap(int(m["source"]), int(m["target"]), parse_rational(m.get("factor", 1)))
                for m in data["parts"]
            ),
        )


def inclusion(domain: StructuredGroup, codomain: StructuredGroup, offset: int = 0) -> Embedding:
    """Summand i of domain onto summand offset + i of codomain."""
    for i, a in enumerate(domain.summands):
        if offset + i >= len(codomain) or codomain.summands[offset + i] != a:
            raise PreconditionError(f"summand {i} ({a.label()}) has no matching summand in {codomain.label()}")
    return Embedding(domain, codomain, tuple(SummandMap(i, offset + i) for i in range(len(domain))))


def structured_divisible_hull(G: StructuredGroup) -> Tuple[StructuredGroup, Embedding]:
    """
    Divisible hull, built summand by summand in place.

    Z, Q and Z_(p) go to Q; Z/n goes to one Prüfer copy per prime p of n with
    1 -> 1/p^v_p(n); Prüfer atoms stay. A divisible input comes back unchanged
    with the identity map.

    Raises:
        PreconditionError: For the completion proxy, which has no hull here
    """
    atoms: List[Atom] = []
    parts: List[SummandMap] = []
    for i, a in enumerate(G.summands):
        if a.kind in RANK_ONE_KINDS:
            parts.append(SummandMap(i, len(atoms)))
            atoms.append(Q())
        elif a.kind == "Pruefer":
            parts.append(SummandMap(i, len(atoms)))
            atoms.append(a)
        elif a.kind == "Zmod":
            for p in prime_factors(a.n):
                parts.append(SummandMap(i, len(atoms), Fraction(1, p ** valuation(a.n, p))))
                atoms.append(Pruefer(p))
        else:
            raise PreconditionError(f"no divisible hull for atom {a.label()}")
    D = StructuredGroup(tuple(atoms))
    return D, Embedding(G, D, tuple(parts))


def _order_in(atom: Atom, c: Component) -> Height:
    if atom.is_zero(c):
        return 1
    if atom.kind == "Zmod":
        return atom.n // gcd(c, atom.n)
    if atom.kind == "Pruefer":
        return c.denominator
    return INFINITY


def _source_injective(e: Embedding, i: int) -> bool:
    src = e.domain.summands[i]
    parts = e.targets_of(i)
    if not parts:
        return False
    if src.kind in ("Z", "Q", "Loc"):
        return any(e.codomain.summands[m.target].is_torsion_free and m.factor != 0 for m in parts)
    if src.kind == "Zmod":
        one = e.apply(e.domain.unit_vector(i))
        orders = [_order_in(a, c) for a, c in zip(e.codomain.summands, one.components)]
        return lcm_all(int(o) for o in orders) == src.n
    if src.kind in ("Pruefer", "Completion"):
        return any(m.factor.numerator % src.p != 0 for m in parts)
    return False


def _disjoint_targets(e: Embedding) -> bool:
    owner: Dict[int, int] = {}
    for part in e.parts:
        if owner.setdefault(part.target, part.source) != part.source:
            return False
    return True


def injectivity_certificate(e: Embedding) -> InjectivityCertificate:
    """
    Certify injectivity for maps whose summands land on disjoint targets.

    Raises:
        PreconditionError: If injectivity cannot be shown this way
    """
    e.check_well_defined()
    if not _disjoint_targets(e):
        raise PreconditionError("summands share targets; injectivity is not certified")
    for i in range(len(e.domain)):
        if not _source_injective(e, i):
            raise PreconditionError(f"summand {i} ({e.domain.summands[i].label()}) is not mapped injectively")
    return InjectivityCertificate(method="disjoint-support", context={"embedding": e.to_json()})


def verify_injectivity(certificate: InjectivityCertificate) -> bool:
    e = Embedding.from_json(certificate.context["embedding"])
    try:
        fresh = injectivity_certificate(e)
    except PreconditionError:
        return False
    return fresh.method == certificate.method


def _is_direct_summand(e: Embedding) -> bool:
    if len(e.parts) != len(e.domain) or not _disjoint_targets(e):
        return False
    sources = set()
    for part in e.parts:
        if part.factor != 1 or e.domain.summands[part.source] != e.codomain.summands[part.target]:
            return False
        sources.add(part.source)
    return len(sources) == len(e.domain)


def _rank_one_piece(e: Embedding, i: int, context: Dict[str, Any]) -> Tuple[Optional[NonPurityWitness], List[int]]:
    """Compare the characteristic of the image with that of its target atom."""
    part = e.targets_of(i)[0]
    src = e.domain.summands[i]
    tgt = e.codomain.summands[part.target]
    chi_a = rank_one_from_atom(src.kind, src.p).chi
    chi_t = rank_one_from_atom(tgt.kind, tgt.p).chi
    f = part.factor
    primes = set(chi_a.primes) | set(chi_t.primes) | set(prime_factors(f.numerator)) | set(prime_factors(f.denominator))
    spare = 2
    while spare in primes:
        spare += 1
        while prime_factors(spare) != [spare]:
            spare += 1
    checked = sorted(primes | {spare})
    for p in checked:
        ha, ht = chi_a.value_at(p), chi_t.value_at(p)
        if ha == INFINITY and ht == INFINITY:
            continue
        if ha != INFINITY and ht != INFINITY and frac_valuation(f, p) - ha == -ht:
            continue
        preimage = e.domain.zero().components[:i] + (src.normalize(Fraction(1, p ** ha)),) + e.domain.zero().components[i + 1:]
        a = GroupElement(e.domain, preimage)
        h = e.apply(a)
        divisor = divide(h, p)
        return NonPurityWitness(n=p, h=h, divisor=divisor, preimage=a, context=context), checked
    return None, checked


def _cyclic_piece(e: Embedding, i: int, context: Dict[str, Any]) -> Tuple[Optional[NonPurityWitness], List[int]]:
    """Exhaustive check of p^k G ∩ C = p^k C for the image C of a Z/m summand."""
    m = e.domain.summands[i].n
    checked = []
    for p in prime_factors(m):
        for k in range(1, valuation(m, p) + 1):
            n = p ** k
            checked.append(n)
            g = gcd(n, m)
            for j in range(1, m):
                if j % g == 0:
                    continue
                a = scalar_mul(j, e.domain.unit_vector(i))
                h = e.apply(a)
                divisor = divide(h, n)
                if divisor is not None:
                    return NonPurityWitness(n=n, h=h, divisor=divisor, preimage=a, context=context), checked
    return None, checked


def _bounded_check(e: Embedding, bound: int, context: Dict[str, Any]) -> Optional[NonPurityWitness]:
    units = e.domain.unit_vectors()
    samples = list(units) + [add(u, v) for k, u in enumerate(units) for v in units[k + 1:]]
    for n in range(2, bound + 1):
        for a in samples:
            h = e.apply(a)
            divisor = divide(h, n)
            if divisor is not None and divide(a, n) is None:
                return NonPurityWitness(n=n, h=h, divisor=divisor, preimage=a, context=context)
    return None


def is_pure_embedding(e: Embedding, bound: int = 50):
    """
    Decide (or bound-check) purity of the image of e.

    Direct-summand inclusions and divisible sources are pure outright. When
    summands land on disjoint targets the question splits per summand: a
    rank-one torsion-free summand into a rank-one atom is pure exactly when
    the characteristics match, and a Z/m summand is checked over all prime
    powers dividing m. Anything else is checked for n <= bound on a sample
    and reported as bounded.

    Returns:
        PurityCertificate or NonPurityWitness

    Raises:
        PreconditionError: If e is not well-defined
    """
    e.check_well_defined()
    context = {"embedding": e.to_json(), "bound": bound}
    if _is_direct_summand(e):
        return PurityCertificate(method="direct-summand", exact=True, checked=(), context=context, bound=bound)

    if _disjoint_targets(e):
        methods = set()
        checked: List[int] = []
        exact = True
        for i, src in enumerate(e.domain.summands):
            parts = e.targets_of(i)
            targets = [e.codomain.summands[m.target] for m in parts]
            if src.is_divisible:
                methods.add("divisible-image")
            elif (src.kind in RANK_ONE_KINDS and len(parts) == 1 and targets[0].kind in RANK_ONE_KINDS):
                witness, primes = _rank_one_piece(e, i, context)
                if witness is not None:
                    logger.info(f"Embedding not pure: n={witness.n} at summand {i}")
                    return witness
                methods.add("characteristic-match")
                checked.extend(primes)
            elif src.kind == "Zmod":
                witness, powers = _cyclic_piece(e, i, context)
                if witness is not None:
                    logger.info(f"Embedding not pure: n={witness.n} at summand {i}")
                    return witness
                methods.add("cyclic-exhaustive")
                checked.extend(powers)
            elif len(parts) == 1 and parts[0].factor == 1 and targets[0] == src:
                methods.add("direct-summand")
            else:
                exact = False
        if exact:
            return PurityCertificate(
                method="+".join(sorted(methods)) or "direct-summand",
                exact=True,
                checked=tuple(sorted(set(checked))),
                context=context,
                bound=bound,
            )

    witness = _bounded_check(e, bound, context)
    if witness is not None:
        return witness
    logger.info(f"Embedding purity only checked for n <= {bound}")
    return PurityCertificate(
        method="bounded", exact=False, checked=tuple(range(2, bound + 1)), context=context, bound=bound
    )


def verify_embedding_evidence(certificate) -> bool:
    """Check a purity certificate or non-purity witness about an Embedding."""
    e = Embedding.from_json(certificate.context["embedding"])
    bound = int(certificate.context.get("bound", 50))
    if isinstance(certificate, PurityCertificate):
        fresh = is_pure_embedding(e, bound)
        return (
            isinstance(fresh, PurityCertificate)
            and fresh.method == certificate.method
            and fresh.checked == certificate.checked
            and fresh.exact == certificate.exact
        )
    n = certificate.n
    a, h, divisor = certificate.preimage, certificate.h, certificate.divisor
    if n < 2 or a is None or h is None or divisor is None:
        return False
    return e.apply(a) == h and scalar_mul(n, divisor) == h and divide(a, n) is None
