import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssao.model import (
    API_ORIGIN,
    AttributeAssertion,
    AttributeDecl,
    BadToken,
    ClassAssertion,
    ClassDecl,
    ConflictingRedeclaration,
    CycleError,
    DefinedClassExpr,
    IndividualDecl,
    KindClash,
    KnowledgeBase,
    Location,
    RelationAssertion,
    RelationCondition,
    RelationDecl,
    SameIndividual,
    TemporalityMismatch,
    TermKind,
    UnknownTerm,
    ValueType,
    ValueTypeMismatch,
    assert_statement,
    format_timestamp,
    intern,
    lookup,
    parse_timestamp,
)

T0 = datetime(2016, 2, 10, tzinfo=timezone.utc)


@pytest.fixture
def kb():
    kb = KnowledgeBase()
    for c in ("Entity", "Sensor", "Satellite", "Orbit"):
        kb.add(ClassDecl(c, {"Entity"} if c != "Entity" else set()))
    kb.add(ClassDecl("Space-Based_Sensor", {"Sensor"}))
    kb.add(RelationDecl("has_orbit", "Satellite", "Orbit"))
    kb.add(RelationDecl("is_tracked_by", "Satellite", "Sensor", temporal=True))
    kb.add(AttributeDecl("has_orbital_inclination", "Orbit", ValueType("decimal"), "degree"))
    kb.add(AttributeDecl("has_status", "Satellite", ValueType("enum", ("Operational", "Defunct"))))
    for x in ("Orbit1", "Sat1", "SensorA"):
        kb.add(IndividualDecl(x))
    return kb


def test_intern_is_idempotent():
    kb = KnowledgeBase()
    assert intern(kb, "Sensor", TermKind.CLASS) is intern(kb, "Sensor", TermKind.CLASS)


def test_intern_kind_clash():
    kb = KnowledgeBase()
    intern(kb, "Orbit1", TermKind.CLASS)
    with pytest.raises(KindClash):
        intern(kb, "Orbit1", TermKind.INDIVIDUAL)


def test_intern_fresh_relation_is_usable(kb):
    fresh = KnowledgeBase()
    term = intern(fresh, "has_orbit", TermKind.RELATION)
    assert term.kind is TermKind.RELATION and term.name == "has_orbit"
    for c in ("Satellite", "Orbit"):
        fresh.add(ClassDecl(c))
    assert fresh.add(RelationDecl("has_orbit", "Satellite", "Orbit"))


@pytest.mark.parametrize("name", ["", "1abc", "_x", "a b", "a.b", "é", "and", "instance_of"])
def test_bad_tokens(name):
    with pytest.raises(BadToken):
        intern(KnowledgeBase(), name, TermKind.CLASS)


def test_cycle_rejected():
    kb = KnowledgeBase()
    kb.add(ClassDecl("Sensor"))
    kb.add(ClassDecl("Space-Based_Sensor", {"Sensor"}))
    assert kb.classes["Space-Based_Sensor"].supers == {"Sensor"}
    with pytest.raises((CycleError, ConflictingRedeclaration)):
        kb.add(ClassDecl("Sensor", {"Space-Based_Sensor"}))
    with pytest.raises(CycleError):
        kb.add(ClassDecl("Loop", {"Loop"}))


def test_forward_stub_cycle_rejected():
    # interning first leaves stubs that may still be declared with supers
    kb = KnowledgeBase()
    intern(kb, "A", TermKind.CLASS)
    intern(kb, "B", TermKind.CLASS)
    kb.add(ClassDecl("A", {"B"}))
    with pytest.raises(CycleError):
        kb.add(ClassDecl("B", {"A"}))
    assert kb.classes["B"].supers == frozenset()


def test_attribute_assertion_stored(kb):
    f = AttributeAssertion("has_orbital_inclination", "Orbit1", 60.0)
    assert kb.add(f)
    assert f in kb.facts
    assert kb.source_map[f] == API_ORIGIN


def test_integer_value_coerced_to_decimal(kb):
    kb.add(AttributeAssertion("has_orbital_inclination", "Orbit1", 60))
    (f,) = kb.facts
    assert type(f.value) is float


def test_value_type_mismatch(kb):
    with pytest.raises(ValueTypeMismatch):
        kb.add(AttributeAssertion("has_orbital_inclination", "Orbit1", "sixty"))
    with pytest.raises(ValueTypeMismatch):
        kb.add(AttributeAssertion("has_orbital_inclination", "Orbit1", True))
    with pytest.raises(ValueTypeMismatch):
        kb.add(AttributeAssertion("has_orbital_inclination", "Orbit1", float("nan")))


def test_enum_token_shape_checked_but_not_membership(kb):
    assert kb.add(AttributeAssertion("has_status", "Sat1", "Retired"))
    with pytest.raises(ValueTypeMismatch):
        kb.add(AttributeAssertion("has_status", "Sat1", "not a token"))


def test_temporality(kb):
    with pytest.raises(TemporalityMismatch):
        kb.add(RelationAssertion("is_tracked_by", "Sat1", "SensorA"))
    with pytest.raises(TemporalityMismatch):
        kb.add(RelationAssertion("has_orbit", "Sat1", "Orbit1", T0))
    assert kb.add(RelationAssertion("is_tracked_by", "Sat1", "SensorA", T0))


def test_timestamps_whole_seconds_utc(kb):
    with pytest.raises(ValueTypeMismatch):
        kb.add(RelationAssertion("is_tracked_by", "Sat1", "SensorA", datetime(2016, 2, 10)))
    with pytest.raises(ValueTypeMismatch):
        kb.add(RelationAssertion("is_tracked_by", "Sat1", "SensorA", T0 + timedelta(microseconds=1)))
    east = timezone(timedelta(hours=2))
    kb.add(RelationAssertion("is_tracked_by", "Sat1", "SensorA", datetime(2016, 2, 10, 2, tzinfo=east)))
    assert RelationAssertion("is_tracked_by", "Sat1", "SensorA", T0) in kb.facts


def test_unknown_terms(kb):
    with pytest.raises(UnknownTerm):
        kb.add(ClassAssertion("Nobody", "Sensor"))
    with pytest.raises(UnknownTerm):
        kb.add(RelationAssertion("no_such_rel", "Sat1", "Orbit1"))
    with pytest.raises(UnknownTerm):
        kb.add(ClassDecl("X", {"NoSuper"}))


def test_kind_clash_in_fact(kb):
    with pytest.raises(KindClash):
        kb.add(ClassAssertion("Sensor", "Sensor"))


def test_redeclaration_policy(kb):
    assert not kb.add(ClassDecl("Space-Based_Sensor", {"Sensor"}))
    with pytest.raises(ConflictingRedeclaration):
        kb.add(ClassDecl("Space-Based_Sensor", {"Entity"}))
    with pytest.raises(ConflictingRedeclaration):
        kb.add(RelationDecl("has_orbit", "Satellite", "Orbit", transitive=True))


def test_defined_class_invariants(kb):
    kb.add(IndividualDecl("GPS"))
    kb.add(RelationDecl("part_of", "Entity", "Entity", transitive=True))
    cond = RelationCondition("part_of", "GPS", "value")
    with pytest.raises(ValueError):
        ClassDecl("GPS_Satellite", {"Entity"}, DefinedClassExpr("Satellite", (cond,)))
    with pytest.raises(ValueError):
        DefinedClassExpr("Satellite", ())
    with pytest.raises(ValueError):
        RelationCondition("part_of", "GPS", "all")
    assert kb.add(ClassDecl("GPS_Satellite", {"Satellite"}, DefinedClassExpr("Satellite", (cond,))))
    # value conditions need an individual, some conditions a class
    with pytest.raises(KindClash):
        kb.add(ClassDecl("Bad", {"Satellite"}, DefinedClassExpr("Satellite", (RelationCondition("part_of", "Orbit", "value"),))))
    with pytest.raises(KindClash):
        kb.add(ClassDecl("Bad", {"Satellite"}, DefinedClassExpr("Satellite", (RelationCondition("part_of", "GPS", "some"),))))
    with pytest.raises(TemporalityMismatch):
        kb.add(ClassDecl("Bad", {"Satellite"}, DefinedClassExpr("Satellite", (RelationCondition("is_tracked_by", "Sensor", "some"),))))


def test_enum_needs_values():
    with pytest.raises(ValueError):
        ValueType("enum")
    with pytest.raises(ValueError):
        ValueType("colour")


def test_symmetric_facts_sorted():
    assert SameIndividual("b", "a") == SameIndividual("a", "b")
    assert SameIndividual("b", "a").a == "a"


def test_lookup(seed_kb):
    gps = lookup(seed_kb, "GPS_Satellite")
    assert isinstance(gps, ClassDecl) and gps.definition is not None
    assert lookup(seed_kb, "NoSuchTerm") is None
    status = lookup(seed_kb, "has_status")
    assert isinstance(status, AttributeDecl)
    assert set(status.valuetype.enum_values) == {"Operational", "Active", "Inactive", "Defunct", "Abandoned"}


def test_failed_assert_leaves_kb_unchanged(kb):
    before = (dict(kb.classes), dict(kb.facts), dict(kb.terms))
    with pytest.raises(UnknownTerm):
        kb.add(ClassDecl("Fresh", {"Missing"}))
    assert (dict(kb.classes), dict(kb.facts), dict(kb.terms)) == before


def test_provenance_totality(seed_kb):
    for decl in seed_kb.declarations():
        if decl.name in seed_kb._stubs:
            continue
        assert isinstance(seed_kb.source_map[decl], Location)
    for f in seed_kb.facts:
        assert seed_kb.source_map[f].line > 0


@given(st.datetimes(min_value=datetime(1957, 1, 1), max_value=datetime(2099, 12, 31)))
def test_timestamp_round_trip(dt):
    dt = dt.replace(microsecond=0, tzinfo=timezone.utc)
    text = format_timestamp(dt)
    assert parse_timestamp(text) == dt
    assert format_timestamp(parse_timestamp(text)) == text


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), max_size=60))
def test_random_edges_never_cycle(edges):
    """Grow classes one super edge at a time; a cycle is always refused."""
    kb = KnowledgeBase()
    supers: dict[str, set[str]] = {}
    for i in range(12):
        intern(kb, f"C{i}", TermKind.CLASS)
        supers[f"C{i}"] = set()
    declared: dict[str, ClassDecl] = {}
    for a, b in edges:
        sub, sup = f"C{a}", f"C{b}"
        if sub in declared:
            continue  # redeclaration would conflict; only fresh stubs get edges
        proposed = {**{k: set(v) for k, v in supers.items()}}
        proposed[sub].add(sup)
        try:
            kb.add(ClassDecl(sub, proposed[sub]))
        except CycleError:
            assert _has_cycle(proposed)
            continue
        assert not _has_cycle(proposed)
        supers = proposed
        declared[sub] = kb.classes[sub]
    assert not _has_cycle({c: set(d.supers) for c, d in kb.classes.items()})


def _has_cycle(graph: dict[str, set[str]]) -> bool:
    state: dict[str, int] = {}

    def visit(n: str) -> bool:
        state[n] = 1
        for m in graph.get(n, ()):
            if state.get(m) == 1 or (m not in state and visit(m)):
                return True
        state[n] = 2
        return False

    return any(n not in state and visit(n) for n in graph)


def test_idempotence_random_statements(seed_kb):
    rng = random.Random(7)
    individuals = sorted(seed_kb.individuals)
    classes = sorted(seed_kb.classes)
    for _ in range(200):
        f = ClassAssertion(rng.choice(individuals), rng.choice(classes))
        seed_kb.add(f)
        snapshot = (dict(seed_kb.facts), dict(seed_kb.source_map))
        assert not seed_kb.add(f, Location("elsewhere", 9))
        assert (dict(seed_kb.facts), dict(seed_kb.source_map)) == snapshot


def test_names_unique(seed_kb):
    names = [d.name for d in seed_kb.declarations()]
    assert len(names) == len(set(names))
