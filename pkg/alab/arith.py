"""
Number-theoretic helpers: primes, valuations and rational parsing.
"""

import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Union

from sympy import factorint, isprime, nextprime, primerange

from .errors import PreconditionError

INFINITY = math.inf

Height = Union[int, float]


def is_prime(p: int) -> bool:
    return isinstance(p, int) and p >= 2 and bool(isprime(p))


def require_prime(p: int) -> int:
    """Return p unchanged, or raise PreconditionError when it is not a prime."""
    if not is_prime(p):
        raise PreconditionError(f"{p} is not a prime")
    return p


def primes_up_to(bound: int) -> List[int]:
    return [int(p) for p in primerange(2, bound + 1)]


def first_primes(count: int) -> List[int]:
    primes = []
    p = 2
    while len(primes) < count:
        primes.append(p)
        p = int(nextprime(p))
    return primes


def prime_factors(n: int) -> List[int]:
    """Sorted distinct prime divisors of |n| (empty for 0 and 1)."""
    if n == 0:
        return []
    return sorted(int(p) for p in factorint(abs(n)))


def smallest_prime_factor(n: int) -> int:
    factors = prime_factors(n)
    if not factors:
        raise PreconditionError(f"{n} has no prime factor")
    return factors[0]


def valuation(n: int, p: int) -> Height:
    """p-adic valuation of an integer; INFINITY for 0."""
    if n == 0:
        return INFINITY
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def frac_valuation(q: Fraction, p: int) -> Height:
    """p-adic valuation of a rational; INFINITY for 0."""
    q = Fraction(q)
    if q == 0:
        return INFINITY
    return valuation(q.numerator, p) - valuation(q.denominator, p)


def p_part(n: int, p: int) -> int:
    """Largest power of p dividing n (n != 0)."""
    return p ** valuation(n, p)


def coprime_part(n: int, p: int) -> int:
    return abs(n) // p_part(n, p)


def lcm(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return abs(a * b) // math.gcd(a, b)


def lcm_all(values: Iterable[int]) -> int:
    return reduce(lcm, values, 1)


def gcd_all(values: Iterable[int]) -> int:
    return reduce(math.gcd, values, 0)


def parse_rational(value: Union[int, str, Fraction]) -> Fraction:
    """
    Parse an int, a Fraction or a decimal string such as "-3/4" or "12".

    Raises:
        ValueError: If the string is not a rational literal
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValueError(f"not an exact rational literal: {value!r}")
        return Fraction(text)
    raise ValueError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_height(h: Height) -> Union[int, str]:
    return "inf" if h == INFINITY else int(h)


def parse_height(value: Union[int, str]) -> Height:
    """Non-negative integer or "inf"; strings of digits are accepted."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "∞"):
            return INFINITY
        try:
            value = int(text)
        except ValueError as e:
            raise ValueError(f"not a height: {text!r}") from e
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"not a height: {value!r}")
    return value
