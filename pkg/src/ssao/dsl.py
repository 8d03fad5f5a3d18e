"""Line-oriented ``.ssao`` ontology language: tokenizer, parser, loader, serializer.

One statement per line; ``#`` starts a comment. Statement forms::

    class NAME [is_a NAME (and NAME)*]
    class NAME equiv NAME and REL value NAME (and REL (value|some) NAME)*
    relation NAME domain NAME range NAME [temporal] [transitive] [antisymmetric]
    attribute NAME domain NAME valuetype (decimal|integer|text|timestamp|enum(T,...)) [unit TOK]
    individual NAME instance_of NAME (and NAME)*
    fact REL(NAME, NAME) [at TIMESTAMP]
    fact ATTR(NAME, VALUE)
    equivalent NAME NAME | disjoint NAME NAME | same NAME NAME
    doc NAME "free text"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

from .model import (
    TIMESTAMP_RE,
    TOKEN_RE,
    AttributeAssertion,
    AttributeDecl,
    ClassAssertion,
    ClassDecl,
    DefinedClassExpr,
    Disjointness,
    DocAnnotation,
    Equivalence,
    Fact,
    IndividualDecl,
    KnowledgeBase,
    Location,
    ModelError,
    RelationAssertion,
    RelationCondition,
    RelationDecl,
    SameIndividual,
    TermKind,
    UnknownTerm,
    ValueType,
    ValueTypeMismatch,
    KindClash,
    assert_statement,
    check_token,
    format_timestamp,
    intern,
    parse_timestamp,
)

_SCANNER = re.compile(
    r"""
    \s*(?:
     (?P<atom>[^\s(),"\#]+)
    |(?P<punct>[(),])
    |(?P<string>"(?:[^"\\\n]|\\.)*")
    |(?P<comment>\#.*)
    |(?P<bad>\S)
    )
    """,
    re.VERBOSE,
)
_SIMPLE = re.compile(r"[^\s(),]+|[(),]")
_PUNCT = frozenset("(),")
_INT_RE = re.compile(r"[-+]?\d+", re.ASCII)
_DEC_RE = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?", re.ASCII)
_TS_LIKE = re.compile(r"\d{4}-\d", re.ASCII)

RELATION_FLAGS = ("temporal", "transitive", "antisymmetric")


class Token(NamedTuple):
    kind: str  # "atom", "string" or "punct"
    text: str
    col: int


@dataclass(frozen=True)
class SourceDocument:
    path: str
    lines: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str, path: str = "<string>") -> "SourceDocument":
        return cls(path, tuple(text.splitlines()))

    @classmethod
    def from_path(cls, path: str | Path) -> "SourceDocument":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    location: Location
    message: str
    code: str

    def __str__(self) -> str:
        return f"{self.location}: {self.severity}: {self.code}: {self.message}"


@dataclass(frozen=True)
class IndividualStatement:
    """``individual NAME instance_of C1 and C2``: a declaration plus class assertions."""

    name: str
    classes: tuple[str, ...] = ()


@dataclass(frozen=True)
class FactStatement:
    """``fact P(S, O) [at T]`` before P is known to be a relation or an attribute."""

    predicate: str
    subject: str
    obj: object
    quoted: bool = False
    at: datetime | None = None


Payload = Union[
    ClassDecl, RelationDecl, AttributeDecl, IndividualStatement, DocAnnotation,
    FactStatement, Equivalence, Disjointness, SameIndividual,
]


@dataclass(frozen=True)
class Statement:
    payload: Payload
    location: Location


class DslError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


# -- tokenizer ------------------------------------------------------------------


def tokenize(line: str) -> list[Token]:
    """Split one line into tokens, dropping whitespace and comments."""
    if '"' not in line and "#" not in line:
        # fast path: atoms and punctuation only
        out = []
        pos = 0
        for text in _SIMPLE.findall(line):
            pos = line.index(text, pos)
            out.append(Token("punct" if text in _PUNCT else "atom", text, pos + 1))
            pos += len(text)
        return out
    out = []
    for m in _SCANNER.finditer(line):
        kind = m.lastgroup
        if kind is None or kind == "comment":
            continue  # trailing whitespace
        text = m.group(kind)
        col = m.start(kind) + 1
        if kind == "bad":
            if text == '"':
                raise DslError("E_BAD_VALUE", f"unterminated string at column {col}")
            raise DslError("E_SYNTAX", f"unexpected character {text!r} at column {col}")
        out.append(Token(kind, text, col))
    return out


def unquote(text: str) -> str:
    body = text[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in '"\\':
                raise DslError("E_BAD_VALUE", f"unknown escape \\{nxt} in string")
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse_literal(tok: Token) -> object:
    """Decode a value token: quoted text, timestamp, integer, decimal or bare token."""
    if tok.kind == "string":
        return unquote(tok.text)
    if tok.kind != "atom":
        raise DslError("E_BAD_VALUE", f"expected a value, got {tok.text!r}")
    text = tok.text
    if TIMESTAMP_RE.fullmatch(text):
        try:
            return parse_timestamp(text)
        except ValueError as exc:
            raise DslError("E_BAD_TIMESTAMP", f"invalid timestamp {text!r}: {exc}") from None
    if _TS_LIKE.match(text):
        raise DslError("E_BAD_TIMESTAMP", f"timestamps must be YYYY-MM-DDTHH:MM:SSZ, got {text!r}")
    if _INT_RE.fullmatch(text):
        return int(text)
    if _DEC_RE.fullmatch(text):
        return float(text)
    if TOKEN_RE.fullmatch(text):
        return text
    raise DslError("E_BAD_VALUE", f"cannot read value {text!r}")


def format_value(value: object, quoted: bool | None = None) -> str:
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, bool):
        raise TypeError("booleans are not a value type")
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        if quoted is None:
            quoted = not TOKEN_RE.fullmatch(value)
        return quote(value) if quoted else value
    raise TypeError(f"cannot format value {value!r}")


# -- parser ---------------------------------------------------------------------


class _Cursor:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.i = 0

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> Token:
        if self.i >= len(self.toks):
            raise DslError("E_ARITY", f"statement ends early; expected {what}")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def name(self, what: str = "a name") -> str:
        tok = self.next(what)
        if tok.kind != "atom":
            raise DslError("E_BAD_TOKEN", f"expected {what}, got {tok.text!r}")
        try:
            return check_token(tok.text)
        except ModelError as exc:
            raise DslError("E_BAD_TOKEN", str(exc)) from None

    def keyword(self, *words: str) -> str:
        tok = self.next(" or ".join(repr(w) for w in words))
        if tok.kind != "atom" or tok.text not in words:
            raise DslError(
                "E_SYNTAX", f"expected {' or '.join(repr(w) for w in words)}, got {tok.text!r}"
            )
        return tok.text

    def punct(self, ch: str) -> None:
        tok = self.next(repr(ch))
        if tok.text != ch or tok.kind != "punct":
            raise DslError("E_SYNTAX", f"expected {ch!r}, got {tok.text!r}")

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "atom" and tok.text == word

    def end(self) -> None:
        if not self.done():
            raise DslError("E_ARITY", f"unexpected trailing {self.toks[self.i].text!r}")

    def names_joined(self) -> list[str]:
        names = [self.name()]
        while self.at_keyword("and"):
            self.i += 1
            names.append(self.name())
        return names


def _parse_class(cur: _Cursor) -> ClassDecl:
    name = cur.name("class name")
    if cur.done():
        return ClassDecl(name)
    kw = cur.keyword("is_a", "equiv")
    if kw == "is_a":
        supers = cur.names_joined()
        cur.end()
        return ClassDecl(name, frozenset(supers))
    genus = cur.name("genus class")
    conds = []
    while cur.at_keyword("and"):
        cur.i += 1
        rel = cur.name("relation")
        mode = cur.keyword("value", "some")
        conds.append(RelationCondition(rel, cur.name("condition target"), mode))
    cur.end()
    if not conds:
        raise DslError("E_ARITY", "equiv needs at least one 'and REL value|some NAME' condition")
    return ClassDecl(name, frozenset({genus}), DefinedClassExpr(genus, tuple(conds)))


def _parse_relation(cur: _Cursor) -> RelationDecl:
    name = cur.name("relation name")
    cur.keyword("domain")
    domain = cur.name("domain class")
    cur.keyword("range")
    rng = cur.name("range class")
    flags: set[str] = set()
    while not cur.done():
        flag = cur.keyword(*RELATION_FLAGS)
        if flag in flags:
            raise DslError("E_SYNTAX", f"flag {flag!r} given twice")
        flags.add(flag)
    return RelationDecl(
        name, domain, rng, "temporal" in flags, "transitive" in flags, "antisymmetric" in flags
    )


def _parse_valuetype(cur: _Cursor) -> ValueType:
    kind = cur.keyword(*ValueType.KINDS)
    if kind != "enum":
        return ValueType(kind)
    cur.punct("(")
    values = []
    while True:
        tok = cur.next("enum token")
        if tok.kind != "atom" or not TOKEN_RE.fullmatch(tok.text):
            raise DslError("E_BAD_TOKEN", f"bad enum token {tok.text!r}")
        values.append(tok.text)
        sep = cur.next("',' or ')'")
        if sep.text == ")":
            break
        if sep.text != ",":
            raise DslError("E_SYNTAX", f"expected ',' or ')', got {sep.text!r}")
    try:
        return ValueType("enum", tuple(values))
    except ValueError as exc:
        raise DslError("E_BAD_VALUE", str(exc)) from None


def _parse_attribute(cur: _Cursor) -> AttributeDecl:
    name = cur.name("attribute name")
    cur.keyword("domain")
    domain = cur.name("domain class")
    cur.keyword("valuetype")
    vt = _parse_valuetype(cur)
    unit = None
    if not cur.done():
        cur.keyword("unit")
        tok = cur.next("unit token")
        if tok.kind != "atom" or not TOKEN_RE.fullmatch(tok.text):
            raise DslError("E_BAD_TOKEN", f"bad unit token {tok.text!r}")
        unit = tok.text
    cur.end()
    return AttributeDecl(name, domain, vt, unit)


def _parse_individual(cur: _Cursor) -> IndividualStatement:
    name = cur.name("individual name")
    classes: list[str] = []
    if not cur.done():
        cur.keyword("instance_of")
        classes = cur.names_joined()
    cur.end()
    return IndividualStatement(name, tuple(classes))


def _parse_fact(cur: _Cursor) -> FactStatement:
    pred = cur.name("relation or attribute")
    cur.punct("(")
    subject = cur.name("subject")
    if cur.peek() is not None and cur.peek().text == ")":
        raise DslError("E_ARITY", f"{pred} takes exactly two arguments")
    cur.punct(",")
    tok = cur.next("object")
    if tok.kind == "punct":
        raise DslError("E_ARITY", f"expected an object, got {tok.text!r}")
    obj = parse_literal(tok)
    if isinstance(obj, str) and tok.kind == "atom":
        try:
            check_token(obj)
        except ModelError as exc:
            raise DslError("E_BAD_TOKEN", str(exc)) from None
    nxt = cur.next("')'")
    if nxt.text == ",":
        raise DslError("E_ARITY", f"{pred} takes exactly two arguments")
    if nxt.text != ")":
        raise DslError("E_SYNTAX", f"expected ')', got {nxt.text!r}")
    at = None
    if not cur.done():
        cur.keyword("at")
        ts = cur.next("timestamp")
        if ts.kind != "atom" or not TIMESTAMP_RE.fullmatch(ts.text):
            raise DslError(
                "E_BAD_TIMESTAMP", f"timestamps must be YYYY-MM-DDTHH:MM:SSZ, got {ts.text!r}"
            )
        try:
            at = parse_timestamp(ts.text)
        except ValueError as exc:
            raise DslError("E_BAD_TIMESTAMP", f"invalid timestamp {ts.text!r}: {exc}") from None
    cur.end()
    return FactStatement(pred, subject, obj, tok.kind == "string", at)


def _parse_pair(cur: _Cursor, factory):
    a = cur.name()
    b = cur.name()
    cur.end()
    return factory(a, b)


def _parse_doc(cur: _Cursor) -> DocAnnotation:
    name = cur.name("documented term")
    tok = cur.next("quoted text")
    if tok.kind != "string":
        raise DslError("E_BAD_VALUE", f"doc text must be a quoted string, got {tok.text!r}")
    cur.end()
    return DocAnnotation(name, unquote(tok.text))


_KEYWORDS = {
    "class": _parse_class,
    "relation": _parse_relation,
    "attribute": _parse_attribute,
    "individual": _parse_individual,
    "fact": _parse_fact,
    "equivalent": lambda c: _parse_pair(c, Equivalence),
    "disjoint": lambda c: _parse_pair(c, Disjointness),
    "same": lambda c: _parse_pair(c, SameIndividual),
    "doc": _parse_doc,
}


_NAME = r"[A-Za-z][A-Za-z0-9_-]*"
_FAST_FACT = re.compile(
    rf"\s*fact\s+({_NAME})\s*\(\s*({_NAME})\s*,\s*([^\s(),\"\#]+)\s*\)(?:\s+at\s+(\S+))?\s*", re.ASCII
)
_FAST_INDIVIDUAL = re.compile(
    rf"\s*individual\s+({_NAME})\s+instance_of\s+({_NAME}(?:\s+and\s+{_NAME})*)\s*", re.ASCII
)


def _fast_path(line: str) -> Payload | None:
    """Plain ``fact`` and ``individual`` lines without going through tokens.

    Returns None whenever anything is unusual so the full parser can report it.
    """
    m = _FAST_FACT.fullmatch(line)
    try:
        if m:
            pred, subject, obj_text, at_text = m.groups()
            check_token(pred)
            check_token(subject)
            obj = parse_literal(Token("atom", obj_text, 0))
            if isinstance(obj, str):
                check_token(obj)
            at = None
            if at_text is not None:
                if not TIMESTAMP_RE.fullmatch(at_text):
                    return None
                at = parse_timestamp(at_text)
            return FactStatement(pred, subject, obj, False, at)
        m = _FAST_INDIVIDUAL.fullmatch(line)
        if m:
            classes = m.group(2).split()[::2]
            for n in (m.group(1), *classes):
                check_token(n)
            return IndividualStatement(m.group(1), tuple(classes))
    except (DslError, ModelError, ValueError):
        return None
    return None


def parse_line(line: str) -> Payload | None:
    """Parse one line; None for blank/comment lines. Raises DslError."""
    fast = _fast_path(line)
    if fast is not None:
        return fast
    return parse_tokens(line)


def parse_tokens(line: str) -> Payload | None:
    """The general parser behind :func:`parse_line`."""
    toks = tokenize(line)
    if not toks:
        return None
    head = toks[0]
    parser = _KEYWORDS.get(head.text) if head.kind == "atom" else None
    if parser is None:
        raise DslError("E_UNKNOWN_KEYWORD", f"unknown statement keyword {head.text!r}")
    cur = _Cursor(toks[1:])
    try:
        return parser(cur)
    except ValueError as exc:
        raise DslError("E_BAD_VALUE", str(exc)) from None


def parse_document(doc: SourceDocument) -> tuple[list[Statement], list[ParseDiagnostic]]:
    statements: list[Statement] = []
    diags: list[ParseDiagnostic] = []
    for lineno, line in enumerate(doc.lines, start=1):
        loc = Location(doc.path, lineno)
        try:
            payload = parse_line(line)
        except DslError as exc:
            diags.append(ParseDiagnostic("error", loc, str(exc), exc.code))
            continue
        if payload is not None:
            statements.append(Statement(payload, loc))
    return statements, diags


def parse_text(text: str, path: str = "<string>") -> tuple[list[Statement], list[ParseDiagnostic]]:
    return parse_document(SourceDocument.from_text(text, path))


# -- loading --------------------------------------------------------------------


def resolve_fact(kb: KnowledgeBase, stmt: FactStatement) -> Fact:
    """Turn a parsed ``fact`` line into a relation or attribute assertion."""
    kind = kb.kind_of(stmt.predicate)
    if kind is TermKind.RELATION:
        if stmt.quoted or not isinstance(stmt.obj, str) or not TOKEN_RE.fullmatch(stmt.obj):
            raise ValueTypeMismatch(f"relation {stmt.predicate} needs an individual as object")
        return RelationAssertion(stmt.predicate, stmt.subject, stmt.obj, stmt.at)
    if kind is TermKind.ATTRIBUTE:
        if stmt.at is not None:
            raise ValueTypeMismatch(f"attribute {stmt.predicate} takes no time")
        vt = kb.attributes[stmt.predicate].valuetype
        if isinstance(stmt.obj, str) and stmt.quoted != (vt.kind == "text"):
            expected = "quoted text" if vt.kind == "text" else f"a {vt} value"
            raise ValueTypeMismatch(f"attribute {stmt.predicate} expects {expected}")
        return AttributeAssertion(stmt.predicate, stmt.subject, stmt.obj)
    if kind is None:
        raise UnknownTerm(f"undeclared relation or attribute {stmt.predicate!r}")
    raise KindClash(f"{stmt.predicate!r} is a {kind.value}, not a relation or attribute")


def expand(kb: KnowledgeBase, payload: Payload) -> list:
    """Model statements a parsed line stands for."""
    if isinstance(payload, IndividualStatement):
        return [IndividualDecl(payload.name)] + [
            ClassAssertion(payload.name, c) for c in payload.classes
        ]
    if isinstance(payload, FactStatement):
        return [resolve_fact(kb, payload)]
    return [payload]


_DECL_PAYLOADS = (ClassDecl, RelationDecl, AttributeDecl)


def load_statements(
    statements: Sequence[Statement], kb: KnowledgeBase | None = None
) -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
    """Assert ``statements`` into ``kb`` (a fresh one by default).

    Declarations are interned and asserted before any fact is, so the order
    of statements across files does not change the result.
    """
    kb = KnowledgeBase() if kb is None else kb
    diags: list[ParseDiagnostic] = []

    def report(loc: Location, exc: Exception) -> None:
        code = getattr(exc, "code", "E_MODEL")
        diags.append(ParseDiagnostic("error", loc, str(exc), code))

    kinds = {
        ClassDecl: TermKind.CLASS,
        RelationDecl: TermKind.RELATION,
        AttributeDecl: TermKind.ATTRIBUTE,
        IndividualStatement: TermKind.INDIVIDUAL,
    }
    for st in statements:
        kind = kinds.get(type(st.payload))
        if kind is not None:
            try:
                intern(kb, st.payload.name, kind)
            except ModelError as exc:
                report(st.location, exc)

    decls = [s for s in statements if isinstance(s.payload, _DECL_PAYLOADS)]
    for st in decls:
        try:
            assert_statement(kb, st.payload, st.location)
        except ModelError as exc:
            report(st.location, exc)

    for st in statements:
        if isinstance(st.payload, IndividualStatement):
            try:
                assert_statement(kb, IndividualDecl(st.payload.name), st.location)
            except ModelError as exc:
                report(st.location, exc)

    for st in statements:
        if isinstance(st.payload, DocAnnotation):
            try:
                assert_statement(kb, st.payload, st.location)
            except ModelError as exc:
                report(st.location, exc)

    for st in statements:
        if isinstance(st.payload, _DECL_PAYLOADS + (DocAnnotation,)):
            continue
        try:
            items = expand(kb, st.payload)
        except ModelError as exc:
            report(st.location, exc)
            continue
        for item in items:
            if isinstance(item, IndividualDecl):
                continue
            try:
                assert_statement(kb, item, st.location)
            except ModelError as exc:
                report(st.location, exc)
    return kb, diags


def load_documents(
    docs: Iterable[SourceDocument], kb: KnowledgeBase | None = None
) -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
    statements: list[Statement] = []
    diags: list[ParseDiagnostic] = []
    for doc in docs:
        st, d = parse_document(doc)
        statements.extend(st)
        diags.extend(d)
    kb, more = load_statements(statements, kb)
    return kb, diags + more


def load_files(
    paths: Iterable[str | Path], kb: KnowledgeBase | None = None
) -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
    docs = []
    diags = []
    for p in paths:
        try:
            docs.append(SourceDocument.from_path(p))
        except (OSError, UnicodeDecodeError) as exc:
            diags.append(ParseDiagnostic("error", Location(str(p), 0), str(exc), "E_IO"))
    kb, more = load_documents(docs, kb)
    return kb, diags + more


def load_text(text: str, path: str = "<string>") -> tuple[KnowledgeBase, list[ParseDiagnostic]]:
    return load_documents([SourceDocument.from_text(text, path)])


# -- serialization ----------------------------------------------------------------


def format_class(decl: ClassDecl) -> str:
    if decl.definition is not None:
        d = decl.definition
        conds = " and ".join(f"{c.relation} {c.mode} {c.target}" for c in d.differentia)
        return f"class {decl.name} equiv {d.genus} and {conds}"
    if decl.supers:
        return f"class {decl.name} is_a {' and '.join(sorted(decl.supers))}"
    return f"class {decl.name}"


def format_relation(decl: RelationDecl) -> str:
    parts = [f"relation {decl.name} domain {decl.domain} range {decl.range}"]
    parts += [flag for flag in RELATION_FLAGS if getattr(decl, flag)]
    return " ".join(parts)


def format_attribute(decl: AttributeDecl) -> str:
    line = f"attribute {decl.name} domain {decl.domain} valuetype {decl.valuetype}"
    if decl.unit is not None:
        line += f" unit {decl.unit}"
    return line


def format_individual(name: str, classes: Iterable[str]) -> str:
    classes = sorted(classes)
    if not classes:
        return f"individual {name}"
    return f"individual {name} instance_of {' and '.join(classes)}"


def format_fact(fact: Fact, kb: KnowledgeBase | None = None) -> str:
    """Render a non-class-assertion fact as a statement line."""
    if isinstance(fact, RelationAssertion):
        line = f"fact {fact.relation}({fact.subject}, {fact.object})"
        if fact.at is not None:
            line += f" at {format_timestamp(fact.at)}"
        return line
    if isinstance(fact, AttributeAssertion):
        quoted = None
        if kb is not None and fact.attribute in kb.attributes:
            quoted = kb.attributes[fact.attribute].valuetype.kind == "text"
        return f"fact {fact.attribute}({fact.subject}, {format_value(fact.value, quoted)})"
    if isinstance(fact, Equivalence):
        return f"equivalent {fact.a} {fact.b}"
    if isinstance(fact, Disjointness):
        return f"disjoint {fact.a} {fact.b}"
    if isinstance(fact, SameIndividual):
        return f"same {fact.a} {fact.b}"
    raise TypeError(f"class assertions are written on individual lines: {fact!r}")


def _with_doc(line: str, decl) -> list[str]:
    if decl.doc is None:
        return [line]
    return [line, f"doc {decl.name} {quote(decl.doc)}"]


def render(
    kb: KnowledgeBase,
    *,
    classes: Iterable[ClassDecl] = (),
    relations: Iterable[RelationDecl] = (),
    attributes: Iterable[AttributeDecl] = (),
    individuals: Iterable[IndividualDecl] = (),
    facts: Iterable[Fact] = (),
) -> str:
    """Canonical text for a selection of declarations and facts from ``kb``."""
    lines: list[str] = []
    for decl in sorted(classes, key=lambda d: d.name):
        lines += _with_doc(format_class(decl), decl)
    for decl in sorted(relations, key=lambda d: d.name):
        lines += _with_doc(format_relation(decl), decl)
    for decl in sorted(attributes, key=lambda d: d.name):
        lines += _with_doc(format_attribute(decl), decl)

    member_of: dict[str, list[str]] = {}
    other: list[str] = []
    for f in facts:
        if isinstance(f, ClassAssertion):
            member_of.setdefault(f.individual, []).append(f.cls)
        else:
            other.append(format_fact(f, kb))
    ind = {d.name: d for d in individuals}
    for name in member_of:
        ind.setdefault(name, IndividualDecl(name))
    for name in sorted(ind):
        lines += _with_doc(format_individual(name, member_of.get(name, ())), ind[name])
    lines += sorted(other)
    return "".join(line + "\n" for line in lines)


def serialize(kb: KnowledgeBase) -> str:
    return render(
        kb,
        classes=kb.classes.values(),
        relations=kb.relations.values(),
        attributes=kb.attributes.values(),
        individuals=kb.individuals.values(),
        facts=kb.facts,
    )
