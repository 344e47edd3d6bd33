"""Exact arithmetic in cyclotomic fields.

Values are stored in the Zumbroich basis of Q(zeta_n) with n the conductor of
the value, the same normal form GAP uses for its cyclotomics.  For n with
prime power factorisation prod p^k, the exponent e of zeta_n^e is split into
components e_p = e * (n / p^k)^-1 mod p^k.  The basis consists of the powers
whose components satisfy

* p = 2: e_p < 2^(k-1)
* p odd: e_p, read as a symmetric residue mod p^k, lies outside the central
  block [-(p^(k-1)-1)/2, (p^(k-1)-1)/2]

so e.g. Q(zeta_5) has basis zeta_5, ..., zeta_5^4 and 1 = -(zeta_5 + ... +
zeta_5^4) when viewed inside Q(zeta_5).  Since the basis is unique, equal
values have identical stored form, which makes ``==`` and ``hash``
structural.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Mapping, Union

from sympy import factorint, totient

__all__ = [
    "Cyclotomic",
    "NonCoprimeAutomorphism",
    "zeta",
    "add",
    "mul",
    "galois",
    "trace_to_Q",
    "is_rational",
    "ramanujan_sum",
]

Number = Union[int, Fraction]


class NonCoprimeAutomorphism(ValueError):
    """Raised when sigma_j is requested with gcd(j, conductor) != 1."""


@lru_cache(maxsize=None)
def _factors(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


@lru_cache(maxsize=None)
def _phi(n: int) -> int:
    return int(totient(n))


def _mobius(n: int) -> int:
    fs = _factors(n)
    if any(k > 1 for _, k in fs):
        return 0
    return -1 if len(fs) % 2 else 1


@lru_cache(maxsize=None)
def ramanujan_sum(n: int, e: int) -> int:
    """Tr_{Q(zeta_n)/Q}(zeta_n^e), i.e. the Ramanujan sum c_n(e)."""
    g = gcd(e % n, n)
    q = n // g
    return _mobius(q) * _phi(n) // _phi(q)


# the basis reduction runs on integer coefficients; _canonical scales by a
# common denominator first and divides once at the end


def _fold_2mod4(n: int, coeffs: Mapping[int, int]) -> tuple[int, dict[int, int]]:
    # zeta_{2m}^e = (-1)^e zeta_m^{e(m+1)/2} for odd m
    m = n // 2
    half = (m + 1) // 2
    out: dict[int, int] = defaultdict(int)
    for e, c in coeffs.items():
        out[(e * half) % m] += -c if e % 2 else c
    return m, out


def _to_basis(n: int, coeffs: Mapping[int, int]) -> dict[int, int]:
    current = {e % n: c for e, c in coeffs.items() if c}
    for p, k in _factors(n):
        q = p**k
        inv = pow(n // q, -1, q)
        shift = n // p
        nxt: dict[int, int] = defaultdict(int)
        if p == 2:
            top = q // 2
            for e, c in current.items():
                if (e * inv) % q >= top:
                    nxt[(e - shift) % n] -= c
                else:
                    nxt[e] += c
        else:
            h = (q // p - 1) // 2
            for e, c in current.items():
                r = (e * inv) % q
                if r > q // 2:
                    r -= q
                if -h <= r <= h:
                    for j in range(1, p):
                        nxt[(e + j * shift) % n] -= c
                else:
                    nxt[e] += c
        current = {e: c for e, c in nxt.items() if c}
    return current


def _reduce_conductor(n: int, coeffs: dict[int, int]) -> tuple[int, dict[int, int]]:
    if not coeffs:
        return 1, {}
    changed = True
    while changed and n > 1:
        changed = False
        for p, k in _factors(n):
            if p == 2 or k >= 2:
                step = 4 if (p == 2 and k == 2) else p
                if all(e % step == 0 for e in coeffs):
                    coeffs = {e // step: c for e, c in coeffs.items()}
                    n //= step
                    changed = True
                    break
            else:
                m = n // p
                groups: dict[int, list[int]] = defaultdict(list)
                for e, c in coeffs.items():
                    groups[e % m].append(c)
                if all(len(g) == p - 1 and len(set(g)) == 1 for g in groups.values()):
                    pinv = pow(p, -1, m) if m > 1 else 0
                    coeffs = {(r * pinv) % m if m > 1 else 0: -g[0] for r, g in groups.items()}
                    n = m
                    changed = True
                    break
    return n, coeffs


def _scaled(coeffs: Mapping[int, Number]) -> tuple[int, dict[int, int]]:
    """(d, c) with coeffs = c / d and c integral."""
    den = lcm(*(c.denominator for c in coeffs.values()))
    return den, {e: c.numerator * (den // c.denominator) for e, c in coeffs.items() if c}


def _canonical(n: int, coeffs: Mapping[int, Number], den: int = 1) -> "Cyclotomic":
    """Canonical form of sum(coeffs[e] * zeta_n^e) / den."""
    d, ints = _scaled(coeffs)
    den *= d
    if n % 4 == 2:
        n, ints = _fold_2mod4(n, ints)
    basis = _to_basis(n, ints)
    n, basis = _reduce_conductor(n, basis)
    obj = object.__new__(Cyclotomic)
    object.__setattr__(obj, "conductor", n)
    object.__setattr__(obj, "terms", tuple(sorted((e, Fraction(c, den)) for e, c in basis.items())))
    return obj


def _coerce(x: object) -> "Cyclotomic | None":
    if isinstance(x, Cyclotomic):
        return x
    if isinstance(x, (int, Fraction)):
        return Cyclotomic.rational(x)
    return None


class Cyclotomic:
    """Immutable element of Q(zeta_n) in canonical form.

    ``terms`` is a sorted tuple of ``(exponent, Fraction)`` pairs with non-zero
    coefficients; ``conductor`` is the minimal n containing the value.
    """

    __slots__ = ("conductor", "terms")

    conductor: int
    terms: tuple[tuple[int, Fraction], ...]

    def __init__(self, n: int, terms: Mapping[int, Number] | Iterable[tuple[int, Number]] = ()):
        if n < 1:
            raise ValueError(f"conductor must be positive, got {n}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        raw: dict[int, Fraction] = defaultdict(Fraction)
        for e, c in items:
            raw[int(e) % n] += Fraction(c)
        canon = _canonical(n, raw)
        object.__setattr__(self, "conductor", canon.conductor)
        object.__setattr__(self, "terms", canon.terms)

    def __setattr__(self, name, value):
        raise AttributeError("Cyclotomic values are immutable")

    def __reduce__(self):
        # canonical terms re-canonicalise to themselves, so the constructor round-trips
        return (Cyclotomic, (self.conductor, self.terms))

    @classmethod
    def rational(cls, q: Number) -> "Cyclotomic":
        q = Fraction(q)
        obj = object.__new__(cls)
        object.__setattr__(obj, "conductor", 1)
        object.__setattr__(obj, "terms", ((0, q),) if q else ())
        return obj

    def coefficients(self) -> dict[int, Fraction]:
        return dict(self.terms)

    def _rebase(self, n: int) -> dict[int, Fraction]:
        s = n // self.conductor
        return {e * s: c for e, c in self.terms}

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        n = lcm(self.conductor, other.conductor)
        raw: dict[int, Fraction] = defaultdict(Fraction)
        for e, c in self._rebase(n).items():
            raw[e] += c
        for e, c in other._rebase(n).items():
            raw[e] += c
        return _canonical(n, raw)

    __radd__ = __add__

    def __neg__(self):
        obj = object.__new__(Cyclotomic)
        object.__setattr__(obj, "conductor", self.conductor)
        object.__setattr__(obj, "terms", tuple((e, -c) for e, c in self.terms))
        return obj

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not self.terms or not other.terms:
            return Cyclotomic.rational(0)
        if other.conductor == 1:
            q = other.terms[0][1]
            return _canonical(self.conductor, {e: c * q for e, c in self.terms})
        if self.conductor == 1:
            return other * self
        n = lcm(self.conductor, other.conductor)
        da, a = _scaled(self._rebase(n))
        db, b = _scaled(other._rebase(n))
        raw: dict[int, int] = defaultdict(int)
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                raw[(e1 + e2) % n] += c1 * c2
        return _canonical(n, raw, da * db)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("only non-negative powers are supported")
        result = Cyclotomic.rational(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self.conductor == other.conductor and self.terms == other.terms

    def __hash__(self):
        if self.conductor == 1:
            return hash(self.terms[0][1] if self.terms else 0)
        return hash((self.conductor, self.terms))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if self.conductor == 1:
            return f"Cyclotomic.rational({self.as_rational()!s})"
        return f"Cyclotomic({self.conductor}, {dict(self.terms)!r})"

    def __str__(self):
        if self.conductor == 1:
            return str(self.as_rational())
        parts = []
        for e, c in self.terms:
            parts.append(f"{c}*E({self.conductor})^{e}")
        return " + ".join(parts)

    def as_rational(self) -> Fraction | None:
        if self.conductor != 1:
            return None
        return self.terms[0][1] if self.terms else Fraction(0)

    def is_integral(self) -> bool:
        """True iff the value is an algebraic integer (the basis is integral)."""
        return all(c.denominator == 1 for _, c in self.terms)

    def galois(self, j: int) -> "Cyclotomic":
        n = self.conductor
        if gcd(j, n) != 1:
            raise NonCoprimeAutomorphism(f"gcd({j}, {n}) != 1")
        if n == 1:
            return self
        return _canonical(n, {(e * j) % n: c for e, c in self.terms})

    def conjugate(self) -> "Cyclotomic":
        return self.galois(-1)

    def trace(self, field: int | None = None) -> Fraction:
        """Trace from Q(zeta_field) down to Q; ``field`` defaults to the conductor."""
        n = self.conductor
        if field is None:
            field = n
        if field % n:
            raise ValueError(f"value of conductor {n} does not lie in Q(zeta_{field})")
        total = sum((c * ramanujan_sum(n, e) for e, c in self.terms), Fraction(0))
        return total * (_phi(field) // _phi(n))


def zeta(n: int, e: int = 1) -> Cyclotomic:
    """zeta_n^e in canonical form."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return Cyclotomic(n, {e % n: 1})


def add(a: Cyclotomic, b: Cyclotomic) -> Cyclotomic:
    return a + b


def mul(a: Cyclotomic, b: Cyclotomic) -> Cyclotomic:
    return a * b


def galois(a: Cyclotomic, j: int) -> Cyclotomic:
    return a.galois(j)


def trace_to_Q(a: Cyclotomic, field: int | None = None) -> Fraction:
    return a.trace(field)


def is_rational(a: Cyclotomic) -> Fraction | None:
    return a.as_rational()
