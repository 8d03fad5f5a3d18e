"""Single-atom queries over a materialized closure."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Union

from .dsl import DslError, Token, format_value, parse_literal, tokenize
from .model import (
    TOKEN_RE,
    AttributeAssertion,
    ClassAssertion,
    KindClash,
    ModelError,
    RelationAssertion,
    TermKind,
    UnknownTerm,
    check_timestamp,
    format_timestamp,
)
from .reasoner import Closure

INSTANCE_OF = "instance_of"
IS_A = "is_a"


class QuerySyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class Ask:
    predicate: str
    subject: str
    object: object
    at: datetime | None = None


@dataclass(frozen=True)
class InstancesOf:
    cls: str
    direct: bool = False


@dataclass(frozen=True)
class Pattern:
    predicate: str
    subject: Union[str, Var]
    object: object
    at: Union[datetime, Var, None] = None

    def variables(self) -> list[str]:
        out: list[str] = []
        for part in (self.subject, self.object, self.at):
            if isinstance(part, Var) and part.name not in out:
                out.append(part.name)
        return out


Query = Union[Ask, InstancesOf, Pattern]


def _require(closure: Closure, name: str, kind: TermKind) -> None:
    try:
        closure.base.require(name, kind)
    except ModelError as exc:
        raise UnknownTerm(str(exc)) from None


def _predicate_kind(closure: Closure, predicate: str) -> str:
    if predicate in (INSTANCE_OF, IS_A):
        return predicate
    kind = closure.base.kind_of(predicate)
    if kind is TermKind.RELATION:
        return "relation"
    if kind is TermKind.ATTRIBUTE:
        return "attribute"
    if kind is None:
        raise UnknownTerm(f"unknown predicate {predicate!r}")
    raise KindClash(f"{predicate!r} is a {kind.value}, not a predicate")


def _check_ground(closure: Closure, kind: str, predicate: str, subject, obj, at) -> object:
    """Validate constant arguments; returns the object in canonical form."""
    if kind == IS_A:
        subject_kind = object_kind = TermKind.CLASS
    elif kind == INSTANCE_OF:
        subject_kind, object_kind = TermKind.INDIVIDUAL, TermKind.CLASS
    else:
        subject_kind, object_kind = TermKind.INDIVIDUAL, TermKind.INDIVIDUAL
    if not isinstance(subject, Var):
        _require(closure, subject, subject_kind)
    if kind == "attribute":
        if not isinstance(obj, Var):
            obj = closure.base.attributes[predicate].valuetype.coerce(obj)
    elif not isinstance(obj, Var):
        _require(closure, obj, object_kind)
    if at is not None and not isinstance(at, Var):
        if kind != "relation" or not closure.base.relations[predicate].temporal:
            raise QuerySyntaxError(f"{predicate} is not temporal; 'at' does not apply")
        check_timestamp(at)
    return obj


def ask(closure: Closure, atom: Ask) -> bool:
    kind = _predicate_kind(closure, atom.predicate)
    obj = _check_ground(closure, kind, atom.predicate, atom.subject, atom.object, atom.at)
    if kind == IS_A:
        return (atom.subject, obj) in closure.subsumption
    if kind == INSTANCE_OF:
        return ClassAssertion(atom.subject, obj) in closure
    if kind == "attribute":
        return AttributeAssertion(atom.predicate, atom.subject, obj) in closure
    decl = closure.base.relations[atom.predicate]
    if atom.at is not None or not decl.temporal:
        return RelationAssertion(atom.predicate, atom.subject, obj, atom.at) in closure
    return any(
        f.subject == atom.subject and f.object == obj for f in closure.with_predicate(atom.predicate)
    )


def strict_subclasses(closure: Closure, cls: str) -> set[str]:
    anc = closure.ancestors
    return {d for d, sups in anc.items() if cls in sups and d not in anc[cls]}


def instances_of(closure: Closure, cls: str, direct: bool = False) -> set[str]:
    _require(closure, cls, TermKind.CLASS)
    members = set(closure.members(cls))
    if not direct:
        return members
    subs = strict_subclasses(closure, cls)
    return {x for x in members if not (closure.types_of(x) & subs)}


def _candidates(closure: Closure, kind: str, predicate: str):
    """(subject, object, at) triples for every fact with ``predicate``."""
    if kind == IS_A:
        return [(c, d, None) for c, d in closure.subsumption]
    if kind == INSTANCE_OF:
        return [(f.individual, f.cls, None) for f in closure.facts() if isinstance(f, ClassAssertion)]
    if kind == "attribute":
        return [(f.subject, f.value, None) for f in closure.with_predicate(predicate)]
    return [(f.subject, f.object, f.at) for f in closure.with_predicate(predicate)]


def _text_quoted(closure: Closure, predicate: str) -> bool:
    decl = closure.base.attributes.get(predicate)
    return decl is not None and decl.valuetype.kind == "text"


def render_value(value: object, quoted: bool = False) -> str:
    if isinstance(value, datetime):
        return format_timestamp(value)
    return format_value(value, quoted)


def _renderers(closure: Closure, pattern: Pattern) -> dict[str, bool]:
    """Whether each variable's values print as quoted text."""
    quoted = _text_quoted(closure, pattern.predicate)
    out: dict[str, bool] = {}
    for part, q in ((pattern.subject, False), (pattern.object, quoted), (pattern.at, False)):
        if isinstance(part, Var):
            out.setdefault(part.name, q)
    return out


def match(closure: Closure, pattern: Pattern) -> list[dict[str, object]]:
    """All bindings of the pattern's variables, without duplicates, sorted by value.

    A temporal relation's time is bound only when ``at`` is a variable.
    """
    kind = _predicate_kind(closure, pattern.predicate)
    obj = _check_ground(
        closure, kind, pattern.predicate, pattern.subject, pattern.object, pattern.at
    )
    quoting = _renderers(closure, pattern)
    rows: dict[tuple, dict[str, object]] = {}
    for s, o, t in _candidates(closure, kind, pattern.predicate):
        checks = [(pattern.subject, s), (obj, o)]
        if pattern.at is not None:
            checks.append((pattern.at, t))
        binding: dict[str, object] = {}
        for part, value in checks:
            if isinstance(part, Var):
                if binding.setdefault(part.name, value) != value:
                    break
            elif part != value:
                break
        else:
            key = tuple(render_value(binding[n], q) for n, q in quoting.items())
            rows.setdefault(key, binding)
    return [rows[k] for k in sorted(rows)]


# -- textual queries --------------------------------------------------------------------


def _term(tok: Token) -> object:
    if tok.kind == "atom" and tok.text.startswith("?"):
        name = tok.text[1:]
        if not TOKEN_RE.fullmatch(name):
            raise QuerySyntaxError(f"bad variable {tok.text!r}")
        return Var(name)
    if tok.kind == "punct":
        raise QuerySyntaxError(f"unexpected {tok.text!r}")
    try:
        return parse_literal(tok)
    except DslError as exc:
        raise QuerySyntaxError(str(exc)) from None


def parse_atom(text: str) -> tuple[str, object, object, object]:
    """``P(S, O) [at T]`` into its four parts; variables become :class:`Var`."""
    try:
        toks = tokenize(text)
    except DslError as exc:
        raise QuerySyntaxError(str(exc)) from None
    shape = [t.text if t.kind == "punct" else "x" for t in toks[:6]]
    if shape != ["x", "(", "x", ",", "x", ")"]:
        raise QuerySyntaxError(f"expected PREDICATE(SUBJECT, OBJECT), got {text!r}")
    pred = toks[0].text
    if not TOKEN_RE.fullmatch(pred):
        raise QuerySyntaxError(f"bad predicate {pred!r}")
    subject = _term(toks[2])
    if not isinstance(subject, (str, Var)) or toks[2].kind == "string":
        raise QuerySyntaxError(f"subject must be a name or variable, got {toks[2].text!r}")
    obj = _term(toks[4])
    at = None
    rest = toks[6:]
    if rest:
        if len(rest) != 2 or rest[0].text != "at":
            raise QuerySyntaxError(f"unexpected trailing text in {text!r}")
        at = _term(rest[1])
        if not isinstance(at, (datetime, Var)):
            raise QuerySyntaxError(f"'at' needs a timestamp or variable, got {rest[1].text!r}")
    return pred, subject, obj, at


def parse_ask(text: str) -> Ask:
    pred, s, o, at = parse_atom(text)
    if any(isinstance(p, Var) for p in (s, o, at)):
        raise QuerySyntaxError("ask takes a ground atom; use match for variables")
    return Ask(pred, s, o, at)


def parse_pattern(text: str) -> Pattern:
    pattern = Pattern(*parse_atom(text))
    if not pattern.variables():
        raise QuerySyntaxError("match needs at least one ?variable; use ask for ground atoms")
    return pattern


def parse_query(text: str) -> Query:
    """``ask ATOM`` | ``instances-of NAME [--direct]`` | ``match PATTERN``."""
    head, _, rest = text.strip().partition(" ")
    if head == "ask":
        return parse_ask(rest)
    if head == "match":
        return parse_pattern(rest)
    if head == "instances-of":
        parts = rest.split()
        if not parts or len(parts) > 2 or (len(parts) == 2 and parts[1] != "--direct"):
            raise QuerySyntaxError("usage: instances-of NAME [--direct]")
        return InstancesOf(parts[0], len(parts) == 2)
    raise QuerySyntaxError(f"unknown query form {head!r}")


def answer(closure: Closure, query: Query) -> list[str]:
    """Result lines: ``true``/``false`` for ask, one row per line otherwise."""
    if isinstance(query, Ask):
        return ["true" if ask(closure, query) else "false"]
    if isinstance(query, InstancesOf):
        return sorted(instances_of(closure, query.cls, query.direct))
    quoting = _renderers(closure, query)
    return [
        "\t".join(render_value(row[n], q) for n, q in quoting.items())
        for row in match(closure, query)
    ]
