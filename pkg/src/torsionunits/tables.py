"""Character table bundles: data model, JSON reader/writer and sanity checks.

A bundle holds the class metadata of one finite group, its ordinary character
table and any number of p-modular (Brauer) tables.  The on-disk format is a
UTF-8 JSON document::

    {
      "group": "McL", "order": "898128000", "exponent": 27720,
      "classes": [{"name": "1a", "order": 1, "size": "1"}, ...],
      "tables": [
        {"kind": "ordinary", "characters": [{"name": "chi_1", "values": [...]}, ...]},
        {"kind": "brauer", "prime": 3, "classes": ["1a", "2a", ...], "characters": [...]}
      ]
    }

Each value is an integer, a rational string ``"a/b"`` or
``{"conductor": n, "terms": [[e, coeff], ...]}`` meaning sum coeff * zeta_n^e.
Big integers may be written as decimal strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from importlib import resources
from math import lcm
from pathlib import Path
from typing import Any, Iterable

from sympy import primefactors

from .cyclo import Cyclotomic

__all__ = [
    "BundleError",
    "ParseError",
    "SchemaError",
    "EncodingError",
    "UnknownName",
    "ClassInfo",
    "Character",
    "CharacterTable",
    "TableBundle",
    "parse_bundle",
    "load_bundle",
    "load_shipped",
    "serialize_bundle",
    "validate_bundle",
    "prime_set",
    "value_of",
]


class BundleError(Exception):
    pass


class ParseError(BundleError):
    """Malformed JSON; ``offset`` is the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SchemaError(BundleError):
    pass


class EncodingError(BundleError, ValueError):
    """A cyclotomic value whose encoding is not acceptable (e.g. conductor 0)."""


class UnknownName(BundleError, KeyError):
    pass


@dataclass(frozen=True)
class ClassInfo:
    name: str
    element_order: int
    size: int


@dataclass(frozen=True)
class Character:
    name: str
    values: tuple[Cyclotomic, ...]

    @property
    def degree(self) -> Cyclotomic:
        return self.values[0]


@dataclass(frozen=True)
class CharacterTable:
    kind: str  # "ordinary" or "brauer"
    class_names: tuple[str, ...]
    characters: tuple[Character, ...]
    prime: int | None = None
    _class_pos: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _char_pos: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_class_pos", {c: i for i, c in enumerate(self.class_names)})
        object.__setattr__(self, "_char_pos", {ch.name: i for i, ch in enumerate(self.characters)})

    @property
    def key(self) -> str:
        return "ordinary" if self.kind == "ordinary" else f"brauer{self.prime}"

    def character(self, name: str) -> Character:
        try:
            return self.characters[self._char_pos[name]]
        except KeyError:
            raise UnknownName(f"no character {name!r} in {self.key} table") from None

    def has_class(self, class_name: str) -> bool:
        return class_name in self._class_pos

    def value(self, character: Character | str, class_name: str) -> Cyclotomic:
        if isinstance(character, str):
            character = self.character(character)
        try:
            return character.values[self._class_pos[class_name]]
        except KeyError:
            raise UnknownName(f"no class {class_name!r} in {self.key} table") from None


@dataclass(frozen=True)
class TableBundle:
    group_name: str
    group_order: int
    exponent: int
    classes: tuple[ClassInfo, ...]
    ordinary: CharacterTable
    brauer: tuple[CharacterTable, ...] = ()

    def class_info(self, name: str) -> ClassInfo:
        for c in self.classes:
            if c.name == name:
                return c
        raise UnknownName(f"no class {name!r} in bundle {self.group_name}")

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    @property
    def element_orders(self) -> set[int]:
        return {c.element_order for c in self.classes}

    def brauer_table(self, p: int) -> CharacterTable | None:
        for t in self.brauer:
            if t.prime == p:
                return t
        return None

    def tables(self) -> tuple[CharacterTable, ...]:
        return (self.ordinary, *self.brauer)

    def without_brauer(self) -> "TableBundle":
        return TableBundle(self.group_name, self.group_order, self.exponent, self.classes, self.ordinary, ())


# -- parsing -----------------------------------------------------------------


def _int(v: Any, where: str) -> int:
    if isinstance(v, bool):
        raise SchemaError(f"{where}: expected integer, got boolean")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return int(v)
        except ValueError:
            pass
    raise SchemaError(f"{where}: expected integer (or decimal string), got {v!r}")


def _rational(v: Any, where: str) -> Fraction:
    if isinstance(v, bool):
        raise SchemaError(f"{where}: expected rational, got boolean")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            q = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise EncodingError(f"{where}: bad rational {v!r}") from None
        return q
    raise SchemaError(f"{where}: expected integer or 'a/b' string, got {v!r}")


def parse_value(v: Any, where: str = "value") -> Cyclotomic:
    if isinstance(v, dict):
        if set(v) != {"conductor", "terms"}:
            raise SchemaError(f"{where}: cyclotomic needs exactly 'conductor' and 'terms'")
        n = _int(v["conductor"], f"{where}.conductor")
        if n < 1:
            raise EncodingError(f"{where}: conductor must be positive, got {n}")
        terms = v["terms"]
        if not isinstance(terms, list):
            raise SchemaError(f"{where}.terms: expected list")
        pairs = []
        for i, t in enumerate(terms):
            if not (isinstance(t, list) and len(t) == 2):
                raise SchemaError(f"{where}.terms[{i}]: expected [exponent, coefficient]")
            e = _int(t[0], f"{where}.terms[{i}][0]")
            if not 0 <= e < n:
                raise EncodingError(f"{where}.terms[{i}]: exponent {e} outside [0, {n})")
            pairs.append((e, _rational(t[1], f"{where}.terms[{i}][1]")))
        return Cyclotomic(n, pairs)
    return Cyclotomic.rational(_rational(v, where))


def _require(obj: dict, key: str, kind: type | tuple, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise SchemaError(f"{where}.{key}: wrong type {type(val).__name__}")
    return val


def _parse_characters(raw: Any, n_classes: int, where: str) -> tuple[Character, ...]:
    if not isinstance(raw, list):
        raise SchemaError(f"{where}.characters: expected list")
    chars = []
    seen = set()
    for i, ch in enumerate(raw):
        w = f"{where}.characters[{i}]"
        if not isinstance(ch, dict):
            raise SchemaError(f"{w}: expected object")
        name = _require(ch, "name", str, w)
        if name in seen:
            raise SchemaError(f"{w}: duplicate character name {name!r}")
        seen.add(name)
        values = _require(ch, "values", list, w)
        if len(values) != n_classes:
            raise SchemaError(f"{w}: {len(values)} values for {n_classes} classes")
        chars.append(Character(name, tuple(parse_value(v, f"{w}.values[{j}]") for j, v in enumerate(values))))
    return tuple(chars)


def bundle_from_dict(doc: Any) -> TableBundle:
    if not isinstance(doc, dict):
        raise SchemaError("top level: expected object")
    group = _require(doc, "group", str, "top level")
    order = _int(_require(doc, "order", (int, str), "top level"), "order")
    exponent = _int(_require(doc, "exponent", (int, str), "top level"), "exponent")
    if order < 1 or exponent < 1:
        raise SchemaError("order and exponent must be positive")

    classes = []
    seen = set()
    for i, c in enumerate(_require(doc, "classes", list, "top level")):
        w = f"classes[{i}]"
        if not isinstance(c, dict):
            raise SchemaError(f"{w}: expected object")
        name = _require(c, "name", str, w)
        if name in seen:
            raise SchemaError(f"{w}: duplicate class name {name!r}")
        seen.add(name)
        el = _int(_require(c, "order", (int, str), w), f"{w}.order")
        size = _int(_require(c, "size", (int, str), w), f"{w}.size")
        if el < 1 or size < 1:
            raise SchemaError(f"{w}: order and size must be positive")
        classes.append(ClassInfo(name, el, size))
    if not classes:
        raise SchemaError("classes: empty")
    names = tuple(c.name for c in classes)
    orders = {c.name: c.element_order for c in classes}

    ordinary = None
    brauer = []
    for i, t in enumerate(_require(doc, "tables", list, "top level")):
        w = f"tables[{i}]"
        if not isinstance(t, dict):
            raise SchemaError(f"{w}: expected object")
        kind = _require(t, "kind", str, w)
        if kind == "ordinary":
            if ordinary is not None:
                raise SchemaError(f"{w}: second ordinary table")
            ordinary = CharacterTable("ordinary", names, _parse_characters(t.get("characters"), len(names), w))
        elif kind == "brauer":
            p = _int(_require(t, "prime", (int, str), w), f"{w}.prime")
            if p < 2 or primefactors(p) != [p]:
                raise SchemaError(f"{w}: prime {p} is not a prime")
            if any(b.prime == p for b in brauer):
                raise SchemaError(f"{w}: second Brauer table for p={p}")
            cls = _require(t, "classes", list, w)
            for c in cls:
                if c not in orders:
                    raise SchemaError(f"{w}: unknown class {c!r}")
                if orders[c] % p == 0:
                    raise SchemaError(f"{w}: class {c!r} is {p}-singular")
            brauer.append(CharacterTable("brauer", tuple(cls), _parse_characters(t.get("characters"), len(cls), w), p))
        else:
            raise SchemaError(f"{w}: unknown table kind {kind!r}")
    if ordinary is None:
        raise SchemaError("tables: no ordinary table")
    return TableBundle(group, order, exponent, tuple(classes), ordinary, tuple(sorted(brauer, key=lambda b: b.prime)))


def parse_bundle(document: bytes | str) -> TableBundle:
    if isinstance(document, bytes):
        try:
            text = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", exc.start) from None
    else:
        text = document
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset) from None
    return bundle_from_dict(doc)


def load_bundle(path: str | Path) -> TableBundle:
    return parse_bundle(Path(path).read_bytes())


def shipped_path(name: str = "mcl") -> Path:
    return Path(str(resources.files("torsionunits") / "data" / f"{name.lower()}.json"))


def load_shipped(name: str = "mcl") -> TableBundle:
    """Load one of the bundles shipped with the package (``mcl`` or ``a5``)."""
    return load_bundle(shipped_path(name))


# -- writing -----------------------------------------------------------------


def _json_int(n: int) -> int | str:
    return n if abs(n) < 2**53 else str(n)


def _json_rational(q: Fraction) -> int | str:
    if q.denominator == 1:
        return _json_int(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def value_to_json(v: Cyclotomic) -> Any:
    if v.conductor == 1:
        return _json_rational(v.as_rational())
    return {"conductor": v.conductor, "terms": [[e, _json_rational(c)] for e, c in v.terms]}


def _chars_to_json(t: CharacterTable) -> list:
    return [{"name": ch.name, "values": [value_to_json(v) for v in ch.values]} for ch in t.characters]


def bundle_to_dict(b: TableBundle) -> dict:
    tables: list[dict] = [{"kind": "ordinary", "characters": _chars_to_json(b.ordinary)}]
    for t in b.brauer:
        tables.append({"kind": "brauer", "prime": t.prime, "classes": list(t.class_names), "characters": _chars_to_json(t)})
    return {
        "group": b.group_name,
        "order": str(b.group_order),
        "exponent": b.exponent,
        "classes": [{"name": c.name, "order": c.element_order, "size": str(c.size)} for c in b.classes],
        "tables": tables,
    }


def serialize_bundle(b: TableBundle) -> str:
    """Canonical JSON text; one character per line keeps diffs readable."""
    d = bundle_to_dict(b)
    lines = ["{"]
    lines.append(f'  "group": {json.dumps(d["group"])},')
    lines.append(f'  "order": {json.dumps(d["order"])},')
    lines.append(f'  "exponent": {d["exponent"]},')
    lines.append('  "classes": [')
    lines.append(",\n".join("    " + json.dumps(c) for c in d["classes"]))
    lines.append("  ],")
    lines.append('  "tables": [')
    blocks = []
    for t in d["tables"]:
        head = {k: v for k, v in t.items() if k != "characters"}
        body = ",\n".join("      " + json.dumps(ch) for ch in t["characters"])
        blocks.append("    " + json.dumps(head)[:-1] + ', "characters": [\n' + body + "\n    ]}")
    lines.append(",\n".join(blocks))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- queries -------------------------------------------------------------------


def prime_set(b: TableBundle) -> set[int]:
    return set(primefactors(b.group_order))


def value_of(t: CharacterTable, character_name: str, class_name: str) -> Cyclotomic:
    return t.value(character_name, class_name)


def _inner(size: dict[str, int], classes: Iterable[str], chi: Character, psi: Character, t: CharacterTable) -> Cyclotomic:
    total = Cyclotomic.rational(0)
    for c in classes:
        total = total + size[c] * (t.value(chi, c) * t.value(psi, c).conjugate())
    return total


def validate_bundle(b: TableBundle, orthogonality: bool = True) -> list[str]:
    """Return human-readable findings; an empty list means every check passed."""
    findings: list[str] = []
    size = {c.name: c.size for c in b.classes}
    total = sum(size.values())
    if total != b.group_order:
        findings.append(f"class sizes sum to {total} != group order {b.group_order}")
    for c in b.classes:
        if b.group_order % c.element_order:
            findings.append(f"class {c.name}: element order {c.element_order} does not divide group order")
        if b.group_order % c.size:
            findings.append(f"class {c.name}: size {c.size} does not divide group order")
    ids = [c for c in b.classes if c.element_order == 1]
    if len(ids) != 1 or ids[0] != b.classes[0] or ids[0].size != 1:
        findings.append("the first class must be the identity class (order 1, size 1)")
    el_lcm = reduce(lcm, (c.element_order for c in b.classes), 1)
    if el_lcm != b.exponent:
        findings.append(f"exponent {b.exponent} != lcm of element orders {el_lcm}")

    if len(b.ordinary.characters) != len(b.classes):
        findings.append(f"ordinary table has {len(b.ordinary.characters)} characters for {len(b.classes)} classes")
    for t in b.tables():
        for ch in t.characters:
            d = ch.degree.as_rational()
            if d is None or d.denominator != 1 or d <= 0:
                findings.append(f"{t.key} {ch.name}: degree {ch.degree} is not a positive integer")
            for cname, v in zip(t.class_names, ch.values):
                if not v.is_integral():
                    findings.append(f"{t.key} {ch.name} at {cname}: {v} is not an algebraic integer")
        if t.class_names[0] != b.classes[0].name:
            findings.append(f"{t.key}: first column must be the identity class")
    for t in b.brauer:
        regular = [c.name for c in b.classes if c.element_order % t.prime]
        if set(regular) != set(t.class_names):
            findings.append(f"brauer{t.prime}: classes are not exactly the {t.prime}-regular classes")

    if orthogonality and not findings:
        chars = b.ordinary.characters
        for i, chi in enumerate(chars):
            for psi in chars[i:]:
                val = _inner(size, b.ordinary.class_names, chi, psi, b.ordinary)
                want = b.group_order if chi is psi else 0
                if val != want:
                    findings.append(f"orthogonality fails for ({chi.name}, {psi.name}): {val} != {want}")
    return findings
