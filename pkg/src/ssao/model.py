"""In-memory knowledge base: term declarations, axioms and facts.

Facts and declarations refer to terms by name. Names are unique across all
term kinds, so a name is a complete key; :class:`TermId` is the handle
returned by :func:`intern` and carries the numeric id and kind.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Iterator, Union

TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")
TIMESTAMP_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z", re.ASCII)

# Words with a fixed role in statements; they cannot name terms.
RESERVED = frozenset(
    {
        "and", "at", "class", "relation", "attribute", "individual", "fact",
        "equivalent", "disjoint", "same", "doc", "is_a", "equiv", "value",
        "some", "domain", "range", "temporal", "transitive", "antisymmetric",
        "valuetype", "unit", "instance_of", "enum",
    }
)


class TermKind(enum.Enum):
    CLASS = "class"
    RELATION = "relation"
    ATTRIBUTE = "attribute"
    INDIVIDUAL = "individual"


class ModelError(Exception):
    code = "E_MODEL"


class BadToken(ModelError):
    code = "E_BAD_TOKEN"


class KindClash(ModelError):
    code = "E_KIND_CLASH"


class CycleError(ModelError):
    code = "E_CYCLE"


class TemporalityMismatch(ModelError):
    code = "E_TEMPORALITY"


class ValueTypeMismatch(ModelError):
    code = "E_VALUE_TYPE"


class ConflictingRedeclaration(ModelError):
    code = "E_CONFLICT"


class UnknownTerm(ModelError):
    code = "E_UNRESOLVED"


@dataclass(frozen=True)
class TermId:
    id: int = field(compare=False)
    name: str
    kind: TermKind


@dataclass(frozen=True, order=True)
class Location:
    path: str
    line: int

    def __str__(self) -> str:
        return f"{self.path}:{self.line}"


API_ORIGIN = Location("<api>", 0)


# -- timestamps ---------------------------------------------------------------


def parse_timestamp(text: str) -> datetime:
    m = TIMESTAMP_RE.fullmatch(text)
    if not m:
        raise ValueError(f"not an ISO-8601 UTC timestamp: {text!r}")
    year, month, day, hh, mm, ss = (int(g) for g in m.groups())
    return datetime(year, month, day, hh, mm, ss, tzinfo=timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return (
        f"{ts.year:04d}-{ts.month:02d}-{ts.day:02d}"
        f"T{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d}Z"
    )


def check_timestamp(ts: object) -> datetime:
    if not isinstance(ts, datetime) or ts.tzinfo is None:
        raise ValueTypeMismatch(f"timestamp must be an aware UTC datetime, got {ts!r}")
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        raise ValueTypeMismatch(f"timestamps carry whole seconds only: {ts!r}")
    return ts


# -- value types --------------------------------------------------------------


@dataclass(frozen=True)
class ValueType:
    """Attribute value type; ``enum_values`` is set only for ``kind == "enum"``."""

    kind: str
    enum_values: tuple[str, ...] = ()

    KINDS = ("decimal", "integer", "text", "timestamp", "enum")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown value type {self.kind!r}")
        if self.kind == "enum":
            if not self.enum_values:
                raise ValueError("enum attributes need at least one allowed token")
            for tok in self.enum_values:
                if not TOKEN_RE.fullmatch(tok):
                    raise BadToken(f"bad enum token {tok!r}")
            if len(set(self.enum_values)) != len(self.enum_values):
                raise ValueError("duplicate enum token")
        elif self.enum_values:
            raise ValueError("enum_values only apply to enum types")

    def __str__(self) -> str:
        if self.kind == "enum":
            return f"enum({','.join(self.enum_values)})"
        return self.kind

    def coerce(self, value: object) -> object:
        """Return ``value`` in canonical Python form or raise ValueTypeMismatch.

        Enum membership is not checked here; out-of-enum tokens are
        reported as integrity violations by the reasoner.
        """
        k = self.kind
        if k == "decimal":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueTypeMismatch(f"expected decimal, got {value!r}")
            v = float(value)
            if v != v or v in (float("inf"), float("-inf")):
                raise ValueTypeMismatch(f"decimal must be finite, got {value!r}")
            return v
        if k == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueTypeMismatch(f"expected integer, got {value!r}")
            return value
        if k == "text":
            if not isinstance(value, str) or "\n" in value or "\r" in value:
                raise ValueTypeMismatch(f"expected single-line text, got {value!r}")
            return value
        if k == "timestamp":
            return check_timestamp(value)
        if not isinstance(value, str) or not TOKEN_RE.fullmatch(value):
            raise ValueTypeMismatch(f"expected enum token, got {value!r}")
        return value


# -- declarations -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class RelationCondition:
    relation: str
    target: str
    mode: str  # "value" (target is an individual) or "some" (target is a class)

    def __post_init__(self) -> None:
        if self.mode not in ("value", "some"):
            raise ValueError(f"condition mode must be 'value' or 'some', not {self.mode!r}")


@dataclass(frozen=True)
class DefinedClassExpr:
    genus: str
    differentia: tuple[RelationCondition, ...]

    def __post_init__(self) -> None:
        if not self.differentia:
            raise ValueError("a defined class needs at least one differentia condition")
        object.__setattr__(self, "differentia", tuple(sorted(set(self.differentia))))


@dataclass(frozen=True)
class ClassDecl:
    name: str
    supers: frozenset[str] = frozenset()
    definition: DefinedClassExpr | None = None
    doc: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "supers", frozenset(self.supers))
        if self.definition is not None and self.supers != {self.definition.genus}:
            raise ValueError(
                f"defined class {self.name} must have exactly its genus "
                f"{self.definition.genus} as superclass"
            )


@dataclass(frozen=True)
class RelationDecl:
    name: str
    domain: str
    range: str
    temporal: bool = False
    transitive: bool = False
    antisymmetric: bool = False
    doc: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    domain: str
    valuetype: ValueType
    unit: str | None = None
    doc: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class IndividualDecl:
    name: str
    doc: str | None = field(default=None, compare=False)


Declaration = Union[ClassDecl, RelationDecl, AttributeDecl, IndividualDecl]

DECL_KIND = {
    ClassDecl: TermKind.CLASS,
    RelationDecl: TermKind.RELATION,
    AttributeDecl: TermKind.ATTRIBUTE,
    IndividualDecl: TermKind.INDIVIDUAL,
}


@dataclass(frozen=True)
class DocAnnotation:
    name: str
    text: str


# -- facts ----------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ClassAssertion:
    individual: str
    cls: str


@dataclass(frozen=True, slots=True)
class RelationAssertion:
    relation: str
    subject: str
    object: str
    at: datetime | None = None


@dataclass(frozen=True, slots=True)
class AttributeAssertion:
    attribute: str
    subject: str
    value: object


def _ordered_pair(cls):
    """Symmetric facts are stored with their two names in sorted order."""

    orig = cls.__init__

    def __init__(self, a: str, b: str) -> None:
        if b < a:
            a, b = b, a
        orig(self, a, b)

    cls.__init__ = __init__
    return cls


@_ordered_pair
@dataclass(frozen=True, slots=True)
class Equivalence:
    a: str
    b: str


@_ordered_pair
@dataclass(frozen=True, slots=True)
class Disjointness:
    a: str
    b: str


@_ordered_pair
@dataclass(frozen=True, slots=True)
class SameIndividual:
    a: str
    b: str


Fact = Union[
    ClassAssertion, RelationAssertion, AttributeAssertion, Equivalence, Disjointness, SameIndividual
]
FACT_TYPES = (
    ClassAssertion, RelationAssertion, AttributeAssertion, Equivalence, Disjointness, SameIndividual
)
Statement = Union[Declaration, DocAnnotation, Fact]


def check_token(name: str) -> str:
    if not isinstance(name, str) or not TOKEN_RE.fullmatch(name):
        raise BadToken(f"bad token {name!r}: expected [A-Za-z][A-Za-z0-9_-]*")
    if name in RESERVED:
        raise BadToken(f"{name!r} is a reserved word")
    return name


# -- knowledge base -------------------------------------------------------------


_STUB_FACTORY = {
    TermKind.CLASS: ClassDecl,
    TermKind.INDIVIDUAL: IndividualDecl,
}


class KnowledgeBase:
    """TBox declarations plus ABox facts, all with source provenance.

    Built by a single writer; treat a finished instance as read-only.
    """

    def __init__(self) -> None:
        self.terms: dict[str, TermId] = {}
        self.classes: dict[str, ClassDecl] = {}
        self.relations: dict[str, RelationDecl] = {}
        self.attributes: dict[str, AttributeDecl] = {}
        self.individuals: dict[str, IndividualDecl] = {}
        self.facts: dict[Fact, None] = {}
        self.source_map: dict[object, Location] = {}
        self._stubs: set[str] = set()
        self._ids = itertools.count(1)

    # tables are selected by kind
    def _table(self, kind: TermKind) -> dict:
        return {
            TermKind.CLASS: self.classes,
            TermKind.RELATION: self.relations,
            TermKind.ATTRIBUTE: self.attributes,
            TermKind.INDIVIDUAL: self.individuals,
        }[kind]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return (
            self.classes == other.classes
            and self.relations == other.relations
            and self.attributes == other.attributes
            and self.individuals == other.individuals
            and self.docs() == other.docs()
            and set(self.facts) == set(other.facts)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"<KnowledgeBase classes={len(self.classes)} relations={len(self.relations)} "
            f"attributes={len(self.attributes)} individuals={len(self.individuals)} "
            f"facts={len(self.facts)}>"
        )

    def docs(self) -> dict[str, str]:
        out = {}
        for table in (self.classes, self.relations, self.attributes, self.individuals):
            for name, decl in table.items():
                if decl.doc is not None:
                    out[name] = decl.doc
        return out

    def declarations(self) -> Iterator[Declaration]:
        for table in (self.classes, self.relations, self.attributes, self.individuals):
            yield from table.values()

    def kind_of(self, name: str) -> TermKind | None:
        t = self.terms.get(name)
        return t.kind if t else None

    def copy(self) -> "KnowledgeBase":
        new = KnowledgeBase()
        new.terms = dict(self.terms)
        new.classes = dict(self.classes)
        new.relations = dict(self.relations)
        new.attributes = dict(self.attributes)
        new.individuals = dict(self.individuals)
        new.facts = dict(self.facts)
        new.source_map = dict(self.source_map)
        new._stubs = set(self._stubs)
        new._ids = itertools.count(max((t.id for t in self.terms.values()), default=0) + 1)
        return new

    def asserted_classes_of(self, individual: str) -> list[str]:
        return sorted(
            f.cls for f in self.facts if isinstance(f, ClassAssertion) and f.individual == individual
        )

    def require(self, name: str, kind: TermKind) -> None:
        actual = self.kind_of(name)
        if actual is None:
            raise UnknownTerm(f"undeclared {kind.value} {name!r}")
        if actual is not kind:
            raise KindClash(f"{name!r} is a {actual.value}, expected a {kind.value}")

    def add(self, stmt: Statement, origin: Location = API_ORIGIN) -> bool:
        """Store ``stmt``; return False when it was already present."""
        return assert_statement(self, stmt, origin)

    def extend(self, stmts: Iterable[Statement], origin: Location = API_ORIGIN) -> int:
        return sum(assert_statement(self, s, origin) for s in stmts)


def intern(kb: KnowledgeBase, name: str, kind: TermKind) -> TermId:
    check_token(name)
    existing = kb.terms.get(name)
    if existing is not None:
        if existing.kind is not kind:
            raise KindClash(
                f"{name!r} is already declared as a {existing.kind.value}, not a {kind.value}"
            )
        return existing
    term = TermId(next(kb._ids), name, kind)
    kb.terms[name] = term
    factory = _STUB_FACTORY.get(kind)
    if factory is not None:
        kb._table(kind)[name] = factory(name)
        kb._stubs.add(name)
    return term


def lookup(kb: KnowledgeBase, name: str) -> Declaration | None:
    term = kb.terms.get(name)
    if term is None:
        return None
    return kb._table(term.kind).get(name)


def _reaches(kb: KnowledgeBase, start: Iterable[str], goal: str) -> bool:
    seen: set[str] = set()
    stack = list(start)
    while stack:
        c = stack.pop()
        if c == goal:
            return True
        if c in seen:
            continue
        seen.add(c)
        decl = kb.classes.get(c)
        if decl is not None:
            stack.extend(decl.supers)
    return False


def _declare(kb: KnowledgeBase, decl: Declaration, origin: Location) -> bool:
    kind = DECL_KIND[type(decl)]
    name = check_token(decl.name)
    table = kb._table(kind)
    prior = table.get(name)
    if prior is not None and name not in kb._stubs:
        if prior == decl:
            return False
        raise ConflictingRedeclaration(f"{kind.value} {name!r} redeclared with different content")

    if isinstance(decl, ClassDecl):
        if name in decl.supers:
            raise CycleError(f"{name!r} cannot be its own superclass")
        for s in decl.supers:
            kb.require(s, TermKind.CLASS)
        if decl.definition is not None:
            for cond in decl.definition.differentia:
                kb.require(cond.relation, TermKind.RELATION)
                if kb.relations.get(cond.relation) and kb.relations[cond.relation].temporal:
                    raise TemporalityMismatch(
                        f"defined class {name} cannot use temporal relation {cond.relation}"
                    )
                target_kind = TermKind.INDIVIDUAL if cond.mode == "value" else TermKind.CLASS
                kb.require(cond.target, target_kind)
        if _reaches(kb, decl.supers, name):
            raise CycleError(f"is_a cycle through {name!r}")
    elif isinstance(decl, RelationDecl):
        kb.require(decl.domain, TermKind.CLASS)
        kb.require(decl.range, TermKind.CLASS)
    elif isinstance(decl, AttributeDecl):
        kb.require(decl.domain, TermKind.CLASS)
        if decl.unit is not None:
            check_token(decl.unit)

    term = intern(kb, name, kind)
    if prior is not None and prior.doc is not None and decl.doc is None:
        decl = replace(decl, doc=prior.doc)
    table[name] = decl
    kb._stubs.discard(term.name)
    kb.source_map[decl] = origin
    return True


def _attach_doc(kb: KnowledgeBase, ann: DocAnnotation, origin: Location) -> bool:
    term = kb.terms.get(ann.name)
    if term is None:
        raise UnknownTerm(f"doc for undeclared term {ann.name!r}")
    if "\n" in ann.text or "\r" in ann.text:
        raise ValueTypeMismatch("doc text must be a single line")
    table = kb._table(term.kind)
    decl = table[ann.name] if ann.name in table else None
    if decl is None:
        raise UnknownTerm(f"doc for undeclared term {ann.name!r}")
    if decl.doc == ann.text:
        return False
    if decl.doc is not None:
        raise ConflictingRedeclaration(f"conflicting doc for {ann.name!r}")
    table[ann.name] = replace(decl, doc=ann.text)
    kb.source_map[ann] = origin
    return True


def validate_fact(kb: KnowledgeBase, fact: Fact) -> Fact:
    """Check ``fact`` against the declarations; return it in canonical form."""
    if isinstance(fact, ClassAssertion):
        kb.require(fact.individual, TermKind.INDIVIDUAL)
        kb.require(fact.cls, TermKind.CLASS)
    elif isinstance(fact, RelationAssertion):
        kb.require(fact.relation, TermKind.RELATION)
        kb.require(fact.subject, TermKind.INDIVIDUAL)
        kb.require(fact.object, TermKind.INDIVIDUAL)
        temporal = kb.relations[fact.relation].temporal
        if temporal and fact.at is None:
            raise TemporalityMismatch(f"temporal relation {fact.relation} needs a time ('at')")
        if not temporal and fact.at is not None:
            raise TemporalityMismatch(f"relation {fact.relation} is not temporal")
        if fact.at is not None:
            at = check_timestamp(fact.at)
            if at is not fact.at:
                fact = RelationAssertion(fact.relation, fact.subject, fact.object, at)
    elif isinstance(fact, AttributeAssertion):
        kb.require(fact.attribute, TermKind.ATTRIBUTE)
        kb.require(fact.subject, TermKind.INDIVIDUAL)
        value = kb.attributes[fact.attribute].valuetype.coerce(fact.value)
        if value is not fact.value or type(value) is not type(fact.value):
            fact = AttributeAssertion(fact.attribute, fact.subject, value)
    elif isinstance(fact, (Equivalence, Disjointness)):
        kb.require(fact.a, TermKind.CLASS)
        kb.require(fact.b, TermKind.CLASS)
    elif isinstance(fact, SameIndividual):
        kb.require(fact.a, TermKind.INDIVIDUAL)
        kb.require(fact.b, TermKind.INDIVIDUAL)
    else:
        raise TypeError(f"not a fact: {fact!r}")
    return fact


def assert_statement(kb: KnowledgeBase, stmt: Statement, origin: Location = API_ORIGIN) -> bool:
    """Store a declaration, doc annotation or fact in ``kb``.

    Identical statements are no-ops (returns False). Raises a
    :class:`ModelError` subclass when the statement is ill-formed; ``kb`` is
    left unchanged in that case.
    """
    if isinstance(stmt, (ClassDecl, RelationDecl, AttributeDecl, IndividualDecl)):
        return _declare(kb, stmt, origin)
    if isinstance(stmt, DocAnnotation):
        return _attach_doc(kb, stmt, origin)
    fact = validate_fact(kb, stmt)
    if fact in kb.facts:
        return False
    kb.facts[fact] = None
    kb.source_map[fact] = origin
    return True
