"""Luthar-Passi constraint generation.

For a torsion unit u of order k, a character chi and an integer l,

    mu_l(u, chi) = 1/k * sum_{d | k} Tr_{Q(z^d)/Q}(chi(u^d) z^(-dl))

must be a non-negative integer.  Writing chi(u) = sum_C nu_C chi(C) over the
admissible classes turns mu_l into an affine form in the unknown partial
augmentations nu_C of u, once the augmentations of the proper powers u^d
(a :class:`PowerProfile`) are fixed.  The forms are kept as integer numerators
``constant + sum coeffs[C] * nu_C`` over the common denominator k.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from operator import mul
from typing import Iterable, Mapping

from sympy import divisors

from .cyclo import Cyclotomic, ramanujan_sum
from .tables import Character, CharacterTable, TableBundle

__all__ = [
    "PreconditionViolation",
    "MissingProfile",
    "AugmentationTuple",
    "PowerProfile",
    "FormLabel",
    "LinearForm",
    "ConstraintSystem",
    "SystemBuilder",
    "allowed_classes",
    "resolve_tables",
    "mu_form",
    "build_system",
    "power_trace",
]


class PreconditionViolation(ValueError):
    pass


class MissingProfile(KeyError):
    pass


def allowed_classes(k: int, b: TableBundle) -> list[str]:
    """Classes that may carry a non-zero partial augmentation for a unit of order k.

    The identity class is excluded, and so is every class whose p-part exceeds
    the p-part of k for some prime p; together the p-part conditions say that
    the class order divides k.
    """
    if k < 2:
        raise ValueError("unit order must be > 1")
    return [c.name for c in b.classes if c.element_order > 1 and k % c.element_order == 0]


@dataclass(frozen=True)
class AugmentationTuple:
    unit_order: int
    entries: tuple[tuple[str, int], ...]

    @classmethod
    def from_mapping(cls, k: int, classes: Iterable[str], values: Mapping[str, int]) -> "AugmentationTuple":
        classes = list(classes)
        extra = set(values) - set(classes)
        if extra:
            raise ValueError(f"classes {sorted(extra)} are not admissible for order {k}")
        return cls(k, tuple((c, int(values.get(c, 0))) for c in classes))

    def __getitem__(self, name: str) -> int:
        for c, v in self.entries:
            if c == name:
                return v
        return 0

    # indexing by class name defaults to 0, so the legacy sequence protocol
    # would iterate forever; use ``entries`` instead
    __iter__ = None

    def as_dict(self) -> dict[str, int]:
        return dict(self.entries)

    def support(self) -> list[str]:
        return [c for c, v in self.entries if v]

    def total(self) -> int:
        return sum(v for _, v in self.entries)

    def is_trivial(self) -> bool:
        return len(self.support()) == 1

    def __str__(self):
        return "(" + ", ".join(f"{c}: {v}" for c, v in self.entries) + ")"


@dataclass(frozen=True)
class PowerProfile:
    """Augmentation tuples of the proper powers of u, keyed by their order m."""

    unit_order: int
    tuples: tuple[tuple[int, AugmentationTuple], ...] = ()

    @classmethod
    def of(cls, k: int, tuples: Mapping[int, AugmentationTuple]) -> "PowerProfile":
        for m, t in tuples.items():
            if t.unit_order != m:
                raise ValueError(f"tuple for order {m} has unit order {t.unit_order}")
        return cls(k, tuple(sorted(tuples.items())))

    def get(self, m: int) -> AugmentationTuple:
        for key, t in self.tuples:
            if key == m:
                return t
        raise MissingProfile(f"profile for order {self.unit_order} has no tuple for order {m}")

    def as_dict(self) -> dict[int, AugmentationTuple]:
        return dict(self.tuples)


@dataclass(frozen=True)
class FormLabel:
    character: str
    table: str
    l: int

    def __str__(self):
        p = "*" if self.table == "ordinary" else self.table.removeprefix("brauer")
        return f"mu_{self.l}(u, {self.character}, {p})"


@dataclass(frozen=True)
class LinearForm:
    """mu_l = (constant + sum coeffs * nu) / order, bounded above by ``degree``."""

    order: int
    constant: int
    coeffs: tuple[tuple[str, int], ...]
    degree: int
    labels: tuple[FormLabel, ...] = ()

    @property
    def scale(self) -> int:
        return self.order

    @property
    def label(self) -> FormLabel | None:
        return self.labels[0] if self.labels else None

    def coeff(self, name: str) -> int:
        for c, v in self.coeffs:
            if c == name:
                return v
        return 0

    def numerator(self, nu: Mapping[str, int]) -> int:
        return self.constant + sum(v * nu.get(c, 0) for c, v in self.coeffs)

    def evaluate(self, nu: Mapping[str, int]) -> Fraction:
        return Fraction(self.numerator(nu), self.order)

    def __str__(self):
        terms = "".join(f" {'+' if v >= 0 else '-'} {abs(v)}*nu_{c}" for c, v in self.coeffs if v)
        return f"({self.constant}{terms})/{self.order}"


@dataclass(frozen=True)
class ConstraintSystem:
    """Forms that must be integers in [0, degree], plus sum(nu over unknowns) = 1."""

    order: int
    unknowns: tuple[str, ...]
    forms: tuple[LinearForm, ...]
    notices: tuple[str, ...] = ()

    @cached_property
    def _dense(self) -> tuple[tuple[str, ...], list[tuple[int, tuple[int, ...], int, int]]]:
        names = list(self.unknowns)
        for f in self.forms:
            names.extend(c for c, _ in f.coeffs if c not in names)
        rows = []
        for f in self.forms:
            a = dict(f.coeffs)
            rows.append((f.constant, tuple(a.get(c, 0) for c in names), f.order, f.order * f.degree))
        return tuple(names), rows

    def satisfied_by(self, nu: Mapping[str, int]) -> bool:
        if sum(nu.get(c, 0) for c in self.unknowns) != 1:
            return False
        names, rows = self._dense
        vec = [nu.get(c, 0) for c in names]
        for const, coeffs, k, cap in rows:
            v = const + sum(map(mul, coeffs, vec))
            if v < 0 or v % k or v > cap:
                return False
        return True


@lru_cache(maxsize=None)
def power_trace(value: Cyclotomic, m: int, l: int) -> int:
    """Tr_{Q(zeta_m)/Q}(value * zeta_m^(-l)) for a value lying in Q(zeta_m)."""
    n = value.conductor
    if m % n:
        raise PreconditionViolation(f"value of conductor {n} is not in Q(zeta_{m})")
    s = m // n
    total = sum((c * ramanujan_sum(m, e * s - l) for e, c in value.terms), Fraction(0))
    if total.denominator != 1:
        raise PreconditionViolation(f"non-integral trace {total}; value {value} is not an algebraic integer")
    return int(total)


def _table_ok(t: CharacterTable, k: int) -> bool:
    return t.kind == "ordinary" or k % t.prime != 0


def resolve_tables(b: TableBundle, k: int, selection: str | Iterable[str] = "all") -> tuple[list[CharacterTable], list[str]]:
    """Pick the character tables usable for order k.

    ``selection`` is ``"all"``, ``"ordinary"`` or an iterable / comma list of
    table keys such as ``"ordinary,brauer3,brauer5"``.  Brauer tables whose
    prime divides k are skipped with a notice.
    """
    if isinstance(selection, str):
        keys = ["all"] if selection == "all" else [s.strip() for s in selection.split(",") if s.strip()]
    else:
        keys = list(selection)
    if "all" in keys:
        wanted = [t.key for t in b.tables()]
    else:
        wanted = ["ordinary"] + [key for key in keys if key != "ordinary"]
    tables, notices = [], []
    by_key = {t.key: t for t in b.tables()}
    for key in wanted:
        t = by_key.get(key)
        if t is None:
            notices.append(f"{key}: not present in bundle {b.group_name}")
        elif not _table_ok(t, k):
            notices.append(f"{key}: skipped for order {k} (prime divides the unit order)")
        else:
            tables.append(t)
    return tables, notices


def _check_brauer(t: CharacterTable, k: int, classes: Iterable[str]) -> None:
    if t.kind == "ordinary":
        return
    if k % t.prime == 0:
        raise PreconditionViolation(f"Brauer prime {t.prime} divides unit order {k}")
    for c in classes:
        if not t.has_class(c):
            raise PreconditionViolation(f"class {c} is not {t.prime}-regular")


def mu_form(
    k: int,
    l: int,
    character: Character | str,
    table: CharacterTable,
    profile: PowerProfile,
    b: TableBundle,
) -> LinearForm:
    """The form k * mu_l(u, chi, p) for one character and one l."""
    if isinstance(character, str):
        character = table.character(character)
    unknowns = allowed_classes(k, b)
    _check_brauer(table, k, unknowns)
    degree = table.value(character, b.classes[0].name)
    constant = int(degree.as_rational())
    for d in divisors(k)[1:-1]:
        m = k // d
        tup = profile.get(m)
        _check_brauer(table, k, tup.support())
        for c, v in tup.entries:
            if v:
                constant += v * power_trace(table.value(character, c), m, l % m)
    coeffs = tuple((c, power_trace(table.value(character, c), k, l % k)) for c in unknowns)
    return LinearForm(k, constant, coeffs, constant_degree(degree), (FormLabel(character.name, table.key, l),))


def constant_degree(v: Cyclotomic) -> int:
    q = v.as_rational()
    if q is None or q.denominator != 1:
        raise PreconditionViolation(f"degree {v} is not an integer")
    return int(q)


@dataclass(frozen=True)
class _Row:
    coeffs: tuple[int, ...]
    # per proper divisor d: tuple of (class, trace) for the tuple of u^d
    parts: tuple[tuple[int, tuple[tuple[str, int], ...]], ...]
    degree: int


class SystemBuilder:
    """Precomputed forms for one unit order; profiles only change the constants."""

    def __init__(self, k: int, b: TableBundle, selection: str | Iterable[str] = "all", dedup: bool = True):
        self.order = k
        self.bundle = b
        self.dedup = dedup
        self.unknowns = tuple(allowed_classes(k, b))
        self.tables, self.notices = resolve_tables(b, k, selection)
        self.powers = [(d, k // d, allowed_classes(k // d, b)) for d in divisors(k)[1:-1]]
        collected: list[tuple[_Row, FormLabel]] = []
        for t in self.tables:
            _check_brauer(t, k, self.unknowns)
            for ch in t.characters:
                values = {c: t.value(ch, c) for c in self.unknowns}
                for _, m, cls in self.powers:
                    for c in cls:
                        values.setdefault(c, t.value(ch, c))
                degree = constant_degree(ch.degree)
                for l in range(k):
                    coeffs = tuple(power_trace(values[c], k, l) for c in self.unknowns)
                    parts = tuple(
                        (m, tuple((c, power_trace(values[c], m, l % m)) for c in cls)) for _, m, cls in self.powers
                    )
                    collected.append((_Row(coeffs, parts, degree), FormLabel(ch.name, t.key, l)))
        if dedup:
            grouped: dict[_Row, list[FormLabel]] = {}
            for row, label in collected:
                grouped.setdefault(row, []).append(label)
            self.rows = list(grouped.items())
        else:
            self.rows = [(row, [label]) for row, label in collected]

        # levels m whose tuple actually moves the constant of a row: if all
        # classes of u^(k/m) have the same trace, sum(nu) = 1 makes it fixed
        self.dependence = [
            frozenset(m for m, part in row.parts if len({tr for _, tr in part}) > 1) for row, _ in self.rows
        ]
        self._contrib: dict[tuple[int, AugmentationTuple | None], tuple[int, ...]] = {}

    @property
    def divisor_orders(self) -> list[int]:
        return [m for _, m, _ in self.powers]

    def constant(self, row: _Row, profile: PowerProfile) -> int:
        total = row.degree
        for m, part in row.parts:
            tup = profile.get(m)
            for c, tr in part:
                v = tup[c]
                if v:
                    total += v * tr
        return total

    def _contribution(self, m: int, tup: AugmentationTuple | None) -> tuple[int, ...]:
        """Per-row constant contributed by level m; ``None`` assumes a row independent of m."""
        key = (m, tup)
        out = self._contrib.get(key)
        if out is None:
            vals = []
            for row, _ in self.rows:
                part = dict(row.parts)[m]
                if tup is None:
                    vals.append(part[0][1] if part else 0)
                else:
                    vals.append(sum(tup[c] * tr for c, tr in part))
            out = self._contrib[key] = tuple(vals)
        return out

    def constants(self, profile: PowerProfile | Mapping[int, AugmentationTuple]) -> list[int]:
        """Row constants; levels missing from a mapping are taken as irrelevant."""
        given = profile.as_dict() if isinstance(profile, PowerProfile) else dict(profile)
        consts = [row.degree for row, _ in self.rows]
        for m in self.divisor_orders:
            contrib = self._contribution(m, given.get(m))
            consts = [x + y for x, y in zip(consts, contrib)]
        return consts

    def instantiate(
        self,
        profile: PowerProfile | Mapping[int, AugmentationTuple] | None = None,
        rows: Iterable[int] | None = None,
    ) -> ConstraintSystem:
        """The system for one profile, optionally restricted to some row indices.

        With ``rows`` given, the profile only needs the levels those rows
        depend on (see ``dependence``).
        """
        k = self.order
        if profile is None:
            profile = PowerProfile(k)
        if rows is None:
            if isinstance(profile, PowerProfile):
                for m in self.divisor_orders:
                    profile.get(m)
            picked = range(len(self.rows))
        else:
            picked = sorted(rows)
        consts = self.constants(profile)
        forms: dict[tuple, list] = {}
        order = []
        for i in picked:
            row, labels = self.rows[i]
            const = consts[i]
            key = (const, row.coeffs)
            if self.dedup and key in forms:
                entry = forms[key]
                entry[0] = min(entry[0], row.degree)
                entry[1].extend(labels)
            else:
                entry = [row.degree, list(labels)]
                if self.dedup:
                    forms[key] = entry
                order.append((const, row.coeffs, entry))
        out = []
        for const, coeffs, (degree, labels) in order:
            out.append(LinearForm(k, const, tuple(zip(self.unknowns, coeffs)), degree, tuple(labels)))
        return ConstraintSystem(k, self.unknowns, tuple(out), tuple(self.notices))


def build_system(
    k: int,
    profile: PowerProfile | None,
    b: TableBundle,
    table_selection: str | Iterable[str] = "all",
    dedup: bool = True,
) -> ConstraintSystem:
    """All forms for every selected character and every l in [0, k)."""
    return SystemBuilder(k, b, table_selection, dedup=dedup).instantiate(profile)
