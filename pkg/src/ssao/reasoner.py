"""Forward-chaining materialization and integrity checking.

Rules (all monotone, evaluated semi-naively until fixpoint):

* R-INH      x : C and C is_a* D            => x : D
* R-TRANS    R(a, b) and R(b, c), R transitive => R(a, c)   (same time stamp)
* R-DEF-IN   x meets genus and differentia  => x : defined class
* R-DEF-OUT  x : defined class              => x : genus, R(x, v) for value conditions
* R-EQ       equivalent A B                 => A is_a B and B is_a A
* R-SAME     same a b                       => facts about a hold of b, and back
* R-DOMRANGE (infer mode) R(a, b)           => a : domain, b : range
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Iterator, Mapping

from .dsl import format_value
from .model import (
    AttributeAssertion,
    ClassAssertion,
    Disjointness,
    Equivalence,
    Fact,
    KnowledgeBase,
    Location,
    RelationAssertion,
    SameIndividual,
    format_timestamp,
)

INFER = "infer"
VALIDATE = "validate"

TRACKED_BY = "is_tracked_by"
DESCRIBES_ORBIT_OF = "describes_orbit_of"
TLE_CLASS = "Two-Line_Element_Set"


class IterationBoundExceeded(RuntimeError):
    code = "E_ITERATION_BOUND"


@dataclass(frozen=True)
class ReasonerConfig:
    domain_range_mode: str = VALIDATE
    max_iterations: int = 10_000

    def __post_init__(self) -> None:
        if self.domain_range_mode not in (INFER, VALIDATE):
            raise ValueError(f"domain_range_mode must be 'infer' or 'validate'")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class Derivation:
    rule: str
    premises: tuple[Fact, ...]


# -- subsumption ----------------------------------------------------------------


def _reachability(edges: Mapping[str, Iterable[str]], nodes: Iterable[str]) -> dict[str, frozenset[str]]:
    out = {}
    for start in nodes:
        seen = {start}
        stack = [start]
        while stack:
            for nxt in edges.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        out[start] = frozenset(seen)
    return out


def ancestors(kb: KnowledgeBase, with_equivalences: bool = True) -> dict[str, frozenset[str]]:
    """Map each class to every class subsuming it (itself included)."""
    edges: dict[str, set[str]] = {c: set(d.supers) for c, d in kb.classes.items()}
    if with_equivalences:
        for f in kb.facts:
            if isinstance(f, Equivalence):
                edges[f.a].add(f.b)
                edges[f.b].add(f.a)
    return _reachability(edges, kb.classes)


def subsumption_closure(kb: KnowledgeBase) -> set[tuple[str, str]]:
    """Reflexive-transitive closure of the declared is_a edges."""
    return {(c, d) for c, sups in ancestors(kb, with_equivalences=False).items() for d in sups}


# -- closure ----------------------------------------------------------------------


@dataclass(eq=False)
class Closure:
    base: KnowledgeBase
    subsumption: frozenset[tuple[str, str]]
    inferred_facts: frozenset[Fact]
    provenance: dict[Fact, Derivation]
    ancestors: dict[str, frozenset[str]] = field(repr=False)
    _types: dict[str, set[str]] = field(repr=False)
    _members: dict[str, set[str]] = field(repr=False)
    _by_predicate: dict[str, list[Fact]] = field(repr=False)
    _all: dict[Fact, None] = field(repr=False)

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._all

    def facts(self) -> Iterator[Fact]:
        """Asserted and inferred facts together."""
        return iter(self._all)

    def is_asserted(self, fact: Fact) -> bool:
        return fact in self.base.facts

    def types_of(self, individual: str) -> frozenset[str]:
        return frozenset(self._types.get(individual, ()))

    def members(self, cls: str) -> frozenset[str]:
        return frozenset(self._members.get(cls, ()))

    def with_predicate(self, predicate: str) -> list[Fact]:
        """Relation or attribute assertions using ``predicate``."""
        return self._by_predicate.get(predicate, [])

    def support(self, fact: Fact) -> set[Fact]:
        """Asserted facts the derivation of ``fact`` rests on."""
        roots: set[Fact] = set()
        seen: set[Fact] = set()
        stack = [fact]
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            if f in self.base.facts:
                roots.add(f)
            else:
                stack.extend(self.provenance[f].premises)
        return roots


class _Engine:
    def __init__(self, kb: KnowledgeBase, cfg: ReasonerConfig) -> None:
        self.kb = kb
        self.infer = cfg.domain_range_mode == INFER
        self.max_rounds = cfg.max_iterations
        self.anc = ancestors(kb)
        self.strict = {c: tuple(sorted(a - {c})) for c, a in self.anc.items()}
        self.transitive = {r for r, d in kb.relations.items() if d.transitive}

        self.defs = {c: d.definition for c, d in kb.classes.items() if d.definition is not None}
        self.defs_by_genus: dict[str, list[str]] = defaultdict(list)
        self.defs_by_rel: dict[str, list[str]] = defaultdict(list)
        self.defs_by_some_target: dict[str, list[tuple[str, str]]] = defaultdict(list)
        for k in sorted(self.defs):
            d = self.defs[k]
            self.defs_by_genus[d.genus].append(k)
            for cond in d.differentia:
                if k not in self.defs_by_rel[cond.relation]:
                    self.defs_by_rel[cond.relation].append(k)
                if cond.mode == "some":
                    self.defs_by_some_target[cond.target].append((cond.relation, k))

        self.all: dict[Fact, None] = {}
        self.prov: dict[Fact, Derivation] = {}
        self.types: dict[str, set[str]] = defaultdict(set)
        self.members: dict[str, set[str]] = defaultdict(set)
        self.out: dict[tuple[str, str], set[tuple[str, datetime | None]]] = defaultdict(set)
        self.inn: dict[tuple[str, str], set[tuple[str, datetime | None]]] = defaultdict(set)
        self.by_pred: dict[str, list[Fact]] = defaultdict(list)
        self.mentions: dict[str, list[Fact]] = defaultdict(list)
        self.same: dict[str, set[str]] = defaultdict(set)
        # identity facts are never created from nothing, so without any asserted
        # ones the substitution index is dead weight
        self.track_mentions = any(type(f) is SameIndividual for f in kb.facts)
        self.delta: list[Fact] = []

    # insertion keeps every index current so joins see facts as soon as they exist
    def add(self, fact: Fact, rule: str | None = None, premises: tuple[Fact, ...] = ()) -> None:
        if fact in self.all:
            return
        self.all[fact] = None
        if rule is not None:
            self.prov[fact] = Derivation(rule, premises)
        self.delta.append(fact)
        t = type(fact)
        mentions = self.track_mentions
        if t is ClassAssertion:
            self.types[fact.individual].add(fact.cls)
            self.members[fact.cls].add(fact.individual)
            if mentions:
                self.mentions[fact.individual].append(fact)
        elif t is RelationAssertion:
            self.out[(fact.relation, fact.subject)].add((fact.object, fact.at))
            self.inn[(fact.relation, fact.object)].add((fact.subject, fact.at))
            self.by_pred[fact.relation].append(fact)
            if mentions:
                self.mentions[fact.subject].append(fact)
                if fact.object != fact.subject:
                    self.mentions[fact.object].append(fact)
        elif t is AttributeAssertion:
            self.by_pred[fact.attribute].append(fact)
            if mentions:
                self.mentions[fact.subject].append(fact)
        elif t is SameIndividual and fact.a != fact.b:
            self.same[fact.a].add(fact.b)
            self.same[fact.b].add(fact.a)
            self.mentions[fact.a].append(fact)
            self.mentions[fact.b].append(fact)

    def run(self) -> None:
        for f in self.kb.facts:
            self.add(f)
        rounds = 0
        while self.delta:
            rounds += 1
            if rounds > self.max_rounds:
                raise IterationBoundExceeded(
                    f"no fixpoint after {self.max_rounds} rounds ({len(self.all)} facts)"
                )
            batch, self.delta = self.delta, []
            for f in batch:
                t = type(f)
                if t is ClassAssertion:
                    self._class_assertion(f)
                elif t is RelationAssertion:
                    self._relation_assertion(f)
                elif t is AttributeAssertion:
                    self._attribute_assertion(f)
                elif t is SameIndividual and f.a != f.b:
                    self._same(f)

    def _class_assertion(self, f: ClassAssertion) -> None:
        x, c = f.individual, f.cls
        for d in self.strict.get(c, ()):
            self.add(ClassAssertion(x, d), "R-INH", (f,))
        defn = self.defs.get(c)
        if defn is not None:
            self.add(ClassAssertion(x, defn.genus), "R-DEF-OUT", (f,))
            for cond in defn.differentia:
                if cond.mode == "value":
                    self.add(RelationAssertion(cond.relation, x, cond.target), "R-DEF-OUT", (f,))
        for k in self.defs_by_genus.get(c, ()):
            self._try_definition(x, k)
        for rel, k in self.defs_by_some_target.get(c, ()):
            for a in sorted({a for a, _t in self.inn.get((rel, x), ())}):
                self._try_definition(a, k)
        for y in sorted(self.same.get(x, ())):
            self.add(ClassAssertion(y, c), "R-SAME", (f, SameIndividual(x, y)))

    def _relation_assertion(self, f: RelationAssertion) -> None:
        r, a, b, t = f.relation, f.subject, f.object, f.at
        if r in self.transitive:
            for c in sorted(c for c, t2 in self.out.get((r, b), ()) if t2 == t):
                self.add(RelationAssertion(r, a, c, t), "R-TRANS", (f, RelationAssertion(r, b, c, t)))
            for z in sorted(z for z, t2 in self.inn.get((r, a), ()) if t2 == t):
                self.add(RelationAssertion(r, z, b, t), "R-TRANS", (RelationAssertion(r, z, a, t), f))
        if self.infer:
            decl = self.kb.relations[r]
            self.add(ClassAssertion(a, decl.domain), "R-DOMRANGE", (f,))
            self.add(ClassAssertion(b, decl.range), "R-DOMRANGE", (f,))
        for k in self.defs_by_rel.get(r, ()):
            self._try_definition(a, k)
        for a2 in sorted(self.same.get(a, ())):
            self.add(RelationAssertion(r, a2, b, t), "R-SAME", (f, SameIndividual(a, a2)))
        for b2 in sorted(self.same.get(b, ())):
            self.add(RelationAssertion(r, a, b2, t), "R-SAME", (f, SameIndividual(b, b2)))

    def _attribute_assertion(self, f: AttributeAssertion) -> None:
        if self.infer:
            self.add(ClassAssertion(f.subject, self.kb.attributes[f.attribute].domain), "R-DOMRANGE", (f,))
        for s2 in sorted(self.same.get(f.subject, ())):
            self.add(AttributeAssertion(f.attribute, s2, f.value), "R-SAME", (f, SameIndividual(f.subject, s2)))

    def _same(self, f: SameIndividual) -> None:
        for src, dst in ((f.a, f.b), (f.b, f.a)):
            for g in list(self.mentions.get(src, ())):
                for h in substitutions(g, src, dst):
                    if h != g:
                        self.add(h, "R-SAME", (g, f))

    def _try_definition(self, x: str, k: str) -> None:
        target = ClassAssertion(x, k)
        if target in self.all:
            return
        defn = self.defs[k]
        if defn.genus not in self.types.get(x, ()):
            return
        premises: list[Fact] = [ClassAssertion(x, defn.genus)]
        for cond in defn.differentia:
            succ = self.out.get((cond.relation, x), ())
            if cond.mode == "value":
                if (cond.target, None) not in succ:
                    return
                premises.append(RelationAssertion(cond.relation, x, cond.target))
            else:
                ys = sorted(y for y, t in succ if t is None and cond.target in self.types.get(y, ()))
                if not ys:
                    return
                premises.append(RelationAssertion(cond.relation, x, ys[0]))
                premises.append(ClassAssertion(ys[0], cond.target))
        self.add(target, "R-DEF-IN", tuple(premises))


def substitutions(fact: Fact, old: str, new: str) -> list[Fact]:
    """Copies of ``fact`` with one occurrence of individual ``old`` replaced by ``new``."""
    t = type(fact)
    out: list[Fact] = []
    if t is ClassAssertion:
        if fact.individual == old:
            out.append(ClassAssertion(new, fact.cls))
    elif t is RelationAssertion:
        if fact.subject == old:
            out.append(RelationAssertion(fact.relation, new, fact.object, fact.at))
        if fact.object == old:
            out.append(RelationAssertion(fact.relation, fact.subject, new, fact.at))
    elif t is AttributeAssertion:
        if fact.subject == old:
            out.append(AttributeAssertion(fact.attribute, new, fact.value))
    elif t is SameIndividual:
        if fact.a == old and fact.b != new:
            out.append(SameIndividual(new, fact.b))
        if fact.b == old and fact.a != new:
            out.append(SameIndividual(fact.a, new))
    return out


def materialize(kb: KnowledgeBase, cfg: ReasonerConfig | None = None) -> Closure:
    """Least fixpoint of the rules over ``kb``; raises IterationBoundExceeded."""
    cfg = cfg or ReasonerConfig()
    eng = _Engine(kb, cfg)
    eng.run()
    asserted = kb.facts
    inferred = frozenset(f for f in eng.all if f not in asserted)
    subsumption = frozenset((c, d) for c, sups in eng.anc.items() for d in sups)
    return Closure(
        base=kb,
        subsumption=subsumption,
        inferred_facts=inferred,
        provenance=eng.prov,
        ancestors=eng.anc,
        _types=dict(eng.types),
        _members=dict(eng.members),
        _by_predicate=dict(eng.by_pred),
        _all=eng.all,
    )


# -- integrity checks -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    facts: tuple[Fact, ...]
    message: str
    locations: tuple[Location, ...]

    def sort_key(self) -> tuple:
        first = self.locations[0] if self.locations else Location("", 0)
        return (self.code, first, self.message)

    def __str__(self) -> str:
        where = ",".join(str(loc) for loc in self.locations) or "-"
        return f"{self.code}\t{where}\t{self.message}"


def _violation(closure: Closure, code: str, subjects: Iterable[Fact], message: str) -> Violation:
    cited: set[Fact] = set()
    for f in subjects:
        cited |= closure.support(f)
    source = closure.base.source_map
    facts = tuple(sorted(cited, key=lambda f: (source[f], repr(f))))
    locations = tuple(sorted({source[f] for f in facts}))
    return Violation(code, facts, message, locations)


def check(kb: KnowledgeBase, closure: Closure, cfg: ReasonerConfig | None = None) -> list[Violation]:
    """Integrity violations of ``closure``, ordered by (code, location)."""
    cfg = cfg or ReasonerConfig()
    out: list[Violation] = []
    types = closure._types

    if cfg.domain_range_mode == VALIDATE:
        for r, decl in sorted(kb.relations.items()):
            for f in closure.with_predicate(r):
                if decl.domain not in types.get(f.subject, ()):
                    out.append(_violation(
                        closure, "DOMAIN_VIOLATION", [f],
                        f"{r}({f.subject}, {f.object}): {f.subject} is not a {decl.domain}",
                    ))
                if decl.range not in types.get(f.object, ()):
                    out.append(_violation(
                        closure, "RANGE_VIOLATION", [f],
                        f"{r}({f.subject}, {f.object}): {f.object} is not a {decl.range}",
                    ))
        for a, decl in sorted(kb.attributes.items()):
            for f in closure.with_predicate(a):
                if decl.domain not in types.get(f.subject, ()):
                    out.append(_violation(
                        closure, "DOMAIN_VIOLATION", [f],
                        f"{a}({f.subject}, ...): {f.subject} is not a {decl.domain}",
                    ))

    for f in kb.facts:
        if isinstance(f, Disjointness):
            for x in sorted(closure.members(f.a) & closure.members(f.b)):
                out.append(_violation(
                    closure, "DISJOINT_CLASH",
                    [ClassAssertion(x, f.a), ClassAssertion(x, f.b), f],
                    f"{x} is both a {f.a} and a {f.b}, which are disjoint",
                ))

    for r, decl in sorted(kb.relations.items()):
        if not decl.antisymmetric:
            continue
        for f in closure.with_predicate(r):
            a, b = f.subject, f.object
            if a >= b:
                continue
            back = RelationAssertion(r, b, a, f.at)
            same = SameIndividual(a, b)
            if back in closure and same not in closure:
                out.append(_violation(
                    closure, "ANTISYMMETRY_CLASH", [f, back],
                    f"{r} holds both ways between distinct {a} and {b}",
                ))

    out.extend(_tle_coverage(kb, closure))

    for a, decl in sorted(kb.attributes.items()):
        if decl.valuetype.kind != "enum":
            continue
        allowed = decl.valuetype.enum_values
        for f in closure.with_predicate(a):
            if f.value not in allowed:
                out.append(_violation(
                    closure, "ENUM_VIOLATION", [f],
                    f"{a}({f.subject}, {f.value}): value not in {{{', '.join(allowed)}}}",
                ))

    return sorted(out, key=Violation.sort_key)


def _tle_coverage(kb: KnowledgeBase, closure: Closure) -> list[Violation]:
    """Every tracked object needs some TLE linked to it by describes_orbit_of, at any time."""
    if TRACKED_BY not in kb.relations or DESCRIBES_ORBIT_OF not in kb.relations:
        return []
    tles = closure.members(TLE_CLASS)
    covered = {f.object for f in closure.with_predicate(DESCRIBES_ORBIT_OF) if f.subject in tles}
    gaps: dict[tuple[str, datetime | None], list[Fact]] = defaultdict(list)
    for f in closure.with_predicate(TRACKED_BY):
        if f.subject not in covered:
            gaps[(f.subject, f.at)].append(f)
    out = []
    for (x, t), facts in gaps.items():
        when = format_timestamp(t) if t is not None else "-"
        out.append(_violation(
            closure, "TLE_COVERAGE_GAP", facts,
            f"{x} is tracked at {when} but no Two-Line_Element_Set describes its orbit",
        ))
    return out


# -- export -----------------------------------------------------------------------


def _triple(fact: Fact, kb: KnowledgeBase) -> tuple[str, str, str, str]:
    if isinstance(fact, ClassAssertion):
        return fact.individual, "instance_of", fact.cls, "-"
    if isinstance(fact, RelationAssertion):
        when = format_timestamp(fact.at) if fact.at is not None else "-"
        return fact.subject, fact.relation, fact.object, when
    if isinstance(fact, AttributeAssertion):
        decl = kb.attributes.get(fact.attribute)
        quoted = decl is not None and decl.valuetype.kind == "text"
        return fact.subject, fact.attribute, format_value(fact.value, quoted), "-"
    if isinstance(fact, Equivalence):
        return fact.a, "equivalent", fact.b, "-"
    if isinstance(fact, Disjointness):
        return fact.a, "disjoint", fact.b, "-"
    if isinstance(fact, SameIndividual):
        return fact.a, "same", fact.b, "-"
    raise TypeError(f"not a fact: {fact!r}")


def export_lines(kb: KnowledgeBase, facts: Iterable[Fact], status) -> list[str]:
    return ["\t".join(_triple(f, kb) + (status(f),)) for f in facts]


def export_closure(closure: Closure) -> str:
    """TAB-separated ``subject predicate object time status`` lines, sorted."""
    kb = closure.base
    lines = export_lines(
        kb, closure.facts(), lambda f: "asserted" if f in kb.facts else "inferred"
    )
    for c, d in closure.subsumption:
        if c == d:
            continue
        status = "asserted" if d in kb.classes[c].supers else "inferred"
        lines.append(f"{c}\tis_a\t{d}\t-\t{status}")
    return "".join(line + "\n" for line in sorted(lines))


def export_asserted(kb: KnowledgeBase) -> str:
    lines = export_lines(kb, kb.facts, lambda f: "asserted")
    for c, decl in kb.classes.items():
        lines.extend(f"{c}\tis_a\t{d}\t-\tasserted" for d in decl.supers)
    return "".join(line + "\n" for line in sorted(lines))
