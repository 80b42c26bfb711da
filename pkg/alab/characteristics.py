"""
Heights, characteristics and types.

A characteristic is a height sequence indexed by the primes. Only sequences
that are eventually 0 or eventually infinite are represented: a default value
plus finitely many exceptions. That covers every group this package builds and
keeps type equivalence decidable.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .arith import (
    INFINITY,
    Height,
    first_primes,
    format_height,
    frac_valuation,
    is_prime,
    parse_height,
    parse_rational,
    prime_factors,
    require_prime,
    valuation,
)
from .errors import InvalidElementError, PreconditionError
from .fg_groups import FgGroup

logger = logging.getLogger(__name__)


def _check_height(value: Height) -> Height:
    if value == INFINITY:
        return INFINITY
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"height must be a natural number or infinity, got {value!r}")
    return value


@dataclass(frozen=True)
class Characteristic:
    """
    Height sequence with all but finitely many entries equal to `default`.

    `exceptions` is a sorted tuple of (prime, height) pairs; pairs equal to the
    default are dropped on construction.
    """

    default: Height = 0
    exceptions: Tuple[Tuple[int, Height], ...] = ()

    def __post_init__(self):
        if self.default not in (0, INFINITY):
            raise ValueError(f"default must be 0 or infinity, got {self.default!r}")
        cleaned = {}
        for p, h in self.exceptions:
            if not is_prime(p):
                raise ValueError(f"characteristic indexed by non-prime {p}")
            if p in cleaned:
                raise ValueError(f"prime {p} listed twice")
            cleaned[p] = _check_height(h)
        items = tuple(sorted((p, h) for p, h in cleaned.items() if h != self.default))
        object.__setattr__(self, "exceptions", items)

    @classmethod
    def of(cls, default: Height = 0, exceptions: Optional[Mapping[int, Height]] = None) -> "Characteristic":
        return cls(default, tuple((exceptions or {}).items()))

    def value_at(self, p: int) -> Height:
        for q, h in self.exceptions:
            if q == p:
                return h
        return self.default

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.exceptions)

    def as_dict(self) -> Dict[int, Height]:
        return dict(self.exceptions)

    def shift(self, p: int, k: int = 1) -> "Characteristic":
        """Characteristic of p^k * a given the characteristic of a."""
        value = self.value_at(p)
        updated = self.as_dict()
        updated[p] = value if value == INFINITY else value + k
        return Characteristic.of(self.default, updated)

    def label(self) -> str:
        default = "inf" if self.default == INFINITY else "0"
        if not self.exceptions:
            return f"({default})"
        body = ", ".join(f"{p}:{format_height(h)}" for p, h in self.exceptions)
        return f"({default}; {body})"

    def to_json(self) -> Dict[str, Any]:
        return {
            "default": "infinity" if self.default == INFINITY else "zero",
            "exceptions": {str(p): format_height(h) for p, h in self.exceptions},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Characteristic":
        default_name = data.get("default", "zero")
        if default_name not in ("zero", "infinity"):
            raise ValueError(f"default must be 'zero' or 'infinity', got {default_name!r}")
        default = 0 if default_name == "zero" else INFINITY
        exceptions = {int(p): parse_height(h) for p, h in data.get("exceptions", {}).items()}
        return cls.of(default, exceptions)


def type_equiv(s: Characteristic, t: Characteristic) -> bool:
    """True iff s and t differ at finitely many primes, and only by finite values."""
    if s.default != t.default:
        return False
    for p in set(s.primes) | set(t.primes):
        a, b = s.value_at(p), t.value_at(p)
        if a != b and (a == INFINITY or b == INFINITY):
            return False
    return True


class TypeClass:
    """
    Equivalence class of a characteristic.

    Hashing uses the default plus the primes carrying the other kind of value
    (infinity over a zero default, finite values over an infinite default),
    which is exactly what type equivalence compares.
    """

    def __init__(self, representative: Characteristic):
        self.representative = representative

    def key(self) -> Tuple[Height, Tuple[int, ...]]:
        chi = self.representative
        if chi.default == 0:
            marked = tuple(p for p, h in chi.exceptions if h == INFINITY)
        else:
            marked = tuple(p for p, h in chi.exceptions if h != INFINITY)
        return chi.default, marked

    def __eq__(self, other):
        if not isinstance(other, TypeClass):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"TypeClass({self.representative.label()})"


@dataclass(frozen=True)
class RankOneGroup:
    """G_chi = {q in Q : v_p(q) >= -chi(p) for every prime p}; always contains 1."""

    chi: Characteristic

    def member(self, q: Union[Fraction, int, str]) -> bool:
        q = parse_rational(q)
        for p in prime_factors(q.denominator):
            if valuation(q.denominator, p) > self.chi.value_at(p):
                return False
        return True

    def require(self, q) -> Fraction:
        q = parse_rational(q)
        if not self.member(q):
            raise InvalidElementError(f"{q} is not in the rank-one group {self.chi.label()}")
        return q

    def p_height(self, q, p: int) -> Height:
        q = self.require(q)
        if q == 0:
            return INFINITY
        chi_p = self.chi.value_at(p)
        if chi_p == INFINITY:
            return INFINITY
        return frac_valuation(q, p) + chi_p

    def relevant_primes(self, q) -> List[int]:
        q = parse_rational(q)
        return sorted(set(self.chi.primes) | set(prime_factors(q.numerator)) | set(prime_factors(q.denominator)))

    def height_default(self, q) -> Height:
        return self.chi.default

    def divide(self, q, n: int) -> Optional[Fraction]:
        """q/n when it lies in the group (divisors are unique here)."""
        x = self.require(q) / n
        return x if self.member(x) else None

    def label(self) -> str:
        return f"G{self.chi.label()}"

    def to_json(self) -> Dict[str, Any]:
        return self.chi.to_json()

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "RankOneGroup":
        return cls(Characteristic.from_json(data))


def member(q, G: RankOneGroup) -> bool:
    return G.member(q)


def rank_one_from_atom(kind: str, p: Optional[int] = None) -> RankOneGroup:
    """
    Rank-one groups behind the torsion-free atoms.

    Args:
        kind: "Z", "Q", "Loc" (Z localized at p) or "Zinv" (Z[1/p])
        p: The prime for Loc and Zinv
    """
    if kind == "Z":
        return RankOneGroup(Characteristic.of(0))
    if kind == "Q":
        return RankOneGroup(Characteristic.of(INFINITY))
    if kind == "Loc":
        return RankOneGroup(Characteristic.of(INFINITY, {require_prime(p): 0}))
    if kind == "Zinv":
        return RankOneGroup(Characteristic.of(0, {require_prime(p): INFINITY}))
    raise PreconditionError(f"no rank-one group for atom kind {kind!r}")


def group_type(G: RankOneGroup) -> TypeClass:
    """Type shared by every nonzero element of a rank-one group (that of 1)."""
    return TypeClass(G.chi)


def _fg_p_height(G: FgGroup, x, p: int) -> Height:
    x = G.normalize(x)
    height = INFINITY
    for j, c in enumerate(x):
        d = G.modulus(j)
        if c == 0:
            continue
        if d == 0:
            h = valuation(c, p)
        else:
            h = INFINITY if valuation(c, p) >= valuation(d, p) else valuation(c, p)
        height = min(height, h)
    return height


def p_height(a: Any, G: Any, p: int) -> Height:
    """
    p-height of a in G: the largest n with p^n | a, or INFINITY.

    Args:
        a: Element in the representation used by G
        G: FgGroup, RankOneGroup, StructuredGroup or CompletelyDecomposable
        p: A prime

    Raises:
        InvalidElementError: If a is not in G
    """
    require_prime(p)
    if isinstance(G, FgGroup):
        return _fg_p_height(G, a, p)
    return G.p_height(a, p)


def _relevant_primes(a: Any, G: Any) -> Tuple[List[int], Height]:
    if isinstance(G, FgGroup):
        x = G.normalize(a)
        primes = set()
        for j, c in enumerate(x):
            primes.update(prime_factors(c))
            primes.update(prime_factors(G.modulus(j)))
        default = 0 if any(x[: G.free_rank]) else INFINITY
        return sorted(primes), default
    return G.relevant_primes(a), G.height_default(a)


def _is_zero(a: Any, G: Any) -> bool:
    if isinstance(G, FgGroup):
        return G.is_zero(a)
    if isinstance(G, RankOneGroup):
        return G.require(a) == 0
    return G.is_zero(a)


def characteristic_of(a: Any, G: Any) -> Characteristic:
    """
    Characteristic of a nonzero element.

    The default comes from the structure of the element (0 as soon as a
    component lives in an atom where almost every prime acts non-invertibly);
    only the finitely many relevant primes are evaluated.

    Raises:
        PreconditionError: For a = 0
    """
    if _is_zero(a, G):
        raise PreconditionError("characteristic is only defined here for nonzero elements")
    primes, default = _relevant_primes(a, G)
    exceptions = {p: p_height(a, G, p) for p in primes}
    return Characteristic.of(default, exceptions)


def distinct_type_family(n: int, seed: int = 0) -> List[Characteristic]:
    """
    n pairwise type-inequivalent characteristics.

    Each one is 0 except for infinity on a distinct nonempty set of small
    primes, the finite shadow of one characteristic per infinite 0/1 sequence.
    """
    if n < 1:
        raise PreconditionError(f"family size must be at least 1, got {n}")
    width = 1
    while 2 ** width - 1 < n:
        width += 1
    primes = first_primes(width)
    rng = random.Random(seed)
    masks = rng.sample(range(1, 2 ** width), n)
    family = []
    for mask in masks:
        support = [p for i, p in enumerate(primes) if mask >> i & 1]
        family.append(Characteristic.of(0, {p: INFINITY for p in support}))
    logger.debug(f"Built {n} characteristics over primes {primes} (seed={seed})")
    return family


def characteristics_from_json(items: Iterable[Mapping[str, Any]]) -> List[Characteristic]:
    return [Characteristic.from_json(item) for item in items]
