import random

import pytest

from conftest import SEED
from kbgen import TIMES, random_kb
from oracle import engine_tuples
from ssao.dsl import load_text
from ssao.model import KindClash, KnowledgeBase, UnknownTerm, parse_timestamp
from ssao.query import (
    Ask,
    InstancesOf,
    Pattern,
    QuerySyntaxError,
    Var,
    answer,
    ask,
    instances_of,
    match,
    parse_query,
)
from ssao.reasoner import ReasonerConfig, materialize


@pytest.fixture
def scenario(scenario_kb):
    return materialize(scenario_kb)


def _q(closure, text):
    return answer(closure, parse_query(text))


def test_ask_examples(scenario):
    assert _q(scenario, "ask instance_of(SensorA, Sensor)") == ["true"]
    assert _q(scenario, "ask instance_of(SensorA, GPS_Satellite)") == ["false"]
    assert _q(scenario, "ask is_a(Space-Based_Sensor, Sensor)") == ["true"]
    assert _q(scenario, "ask is_a(Sensor, Space-Based_Sensor)") == ["false"]
    assert _q(scenario, "ask has_orbital_inclination(Orbit1, 60)") == ["true"]


def test_ask_temporal(scenario):
    assert _q(scenario, "ask is_tracked_by(NAVSTAR-66, SensorA)") == ["true"]
    assert _q(scenario, "ask is_tracked_by(NAVSTAR-66, SensorA) at 2016-02-10T00:00:00Z") == ["true"]
    assert _q(scenario, "ask is_tracked_by(NAVSTAR-66, SensorA) at 2016-02-11T00:00:00Z") == ["false"]
    with pytest.raises(QuerySyntaxError):
        _q(scenario, "ask has_orbit(NAVSTAR-66, Orbit1) at 2016-02-10T00:00:00Z")


def test_instances_of_examples(scenario):
    assert instances_of(scenario, "Sensor") == {"SensorA"}
    assert instances_of(scenario, "Sensor", direct=True) == set()
    assert instances_of(scenario, "Space-Based_Sensor", direct=True) == {"SensorA"}
    empty = materialize(_load("class C\n"))
    assert instances_of(empty, "C") == set()


def test_direct_ignores_equivalent_classes():
    closure = materialize(_load("class A\nclass B\nequivalent A B\nclass C is_a A\nindividual x instance_of A\n"))
    assert instances_of(closure, "B", direct=True) == {"x"}


def test_match_examples(scenario):
    assert _q(scenario, "match has_orbital_inclination(Orbit1, ?v)") == ["60.0"]
    assert _q(scenario, "match is_tracked_by(?x, SensorA) at ?t") == [
        "NAVSTAR-66\t2016-02-10T00:00:00Z"
    ]
    assert _q(scenario, "match part_of(?x, ?y)") == [
        "NAVSTAR-66\tGlobal_Positioning_System", "SensorA\tSSA_Network1",
    ]
    assert _q(scenario, "match instance_of(?x, GPS_Satellite)") == ["NAVSTAR-66"]


def test_match_tracking_empty():
    closure = materialize(_load(SEED.read_text() + "individual SensorA instance_of Space-Based_Sensor\n"))
    assert _q(closure, "match is_tracked_by(?x, SensorA) at ?t") == []
    assert _q(closure, "match is_tracked_by(?x, SensorA)") == []


def test_repeated_variable():
    closure = materialize(_load("class E\nrelation r domain E range E\nindividual a\nindividual b\nfact r(a, a)\nfact r(a, b)\n"))
    assert match(closure, Pattern("r", Var("x"), Var("x"))) == [{"x": "a"}]


def test_text_values_quoted_on_object_only():
    closure = materialize(_load('class E\nattribute label domain E valuetype text\nindividual a\nfact label(a, "two words")\n'))
    assert _q(closure, "match label(?s, ?v)") == ['a\t"two words"']
    assert _q(closure, 'ask label(a, "two words")') == ["true"]


def test_unknown_terms(scenario):
    with pytest.raises(UnknownTerm):
        _q(scenario, "ask instance_of(Nobody, Sensor)")
    with pytest.raises(UnknownTerm):
        _q(scenario, "instances-of NoClass")
    with pytest.raises(UnknownTerm):
        _q(scenario, "match no_such(?x, ?y)")
    with pytest.raises(KindClash):
        _q(scenario, "match Sensor(?x, ?y)")


@pytest.mark.parametrize(
    "text",
    ["ask r(a)", "ask r(?x, b)", "match r(a, b)", "instances-of", "instances-of A --indirect", "select *",
     "match r(?x, ?y) at noon", "match r(?1, b)", "ask r(a, b) extra"],
)
def test_syntax_errors(text):
    with pytest.raises(QuerySyntaxError):
        parse_query(text)


def test_parse_forms():
    assert parse_query("instances-of Sensor --direct") == InstancesOf("Sensor", True)
    assert parse_query("ask r(a, b)") == Ask("r", "a", "b")
    p = parse_query("match r(?x, b) at ?t")
    assert p == Pattern("r", Var("x"), "b", Var("t")) and p.variables() == ["x", "t"]


def _load(text: str) -> KnowledgeBase:
    kb, diags = load_text(text)
    assert not diags, [str(d) for d in diags]
    return kb


# -- oracle comparisons -----------------------------------------------------------


def _brute_match(closure, pred, s, o, at):
    """Scan every closure tuple; independent of the query module's candidate lists."""
    rows = set()
    universe = [("is_a", c, d, None) for c, d in closure.subsumption]
    for t in engine_tuples(closure):
        if t[0] == "type":
            universe.append(("instance_of", t[1], t[2], None))
        elif t[0] == "rel":
            universe.append((t[1], t[2], t[3], t[4]))
        elif t[0] == "attr":
            universe.append((t[1], t[2], t[3], None))
    for p, fs, fo, ft in universe:
        if p != pred:
            continue
        env = {}
        ok = True
        slots = [(s, fs), (o, fo)] + ([(at, ft)] if at is not None else [])
        for want, got in slots:
            if isinstance(want, Var):
                if env.setdefault(want.name, got) != got:
                    ok = False
            elif want != got:
                ok = False
        if ok:
            rows.add(tuple(sorted(env.items())))
    return rows


def _random_patterns(rng, gen):
    preds = ["instance_of", "is_a"] + list(gen.relations) + list(gen.attributes)
    for _ in range(25):
        pred = rng.choice(preds)
        if pred == "is_a":
            pool = gen.classes
        else:
            pool = gen.individuals
        subj = Var("s") if rng.random() < 0.6 else rng.choice(pool)
        if pred in ("instance_of", "is_a"):
            obj = Var("o") if rng.random() < 0.6 else rng.choice(gen.classes)
        elif pred in gen.attributes:
            obj = Var("o")
        else:
            obj = rng.choice([Var("o"), Var("s"), rng.choice(gen.individuals)])
        at = None
        if pred in gen.relations and gen.relations[pred]["temporal"] and rng.random() < 0.7:
            at = Var("t") if rng.random() < 0.5 else parse_timestamp(rng.choice(TIMES))
        pattern = Pattern(pred, subj, obj, at)
        if pattern.variables():
            yield pattern


def test_match_equals_brute_force():
    checked = 0
    for seed in range(5000, 5060):
        rng = random.Random(seed)
        gen = random_kb(rng, max_facts=120)
        kb = _load(gen.text())
        closure = materialize(kb, ReasonerConfig(domain_range_mode="infer" if seed % 2 else "validate"))
        for p in _random_patterns(rng, gen):
            got = {tuple(sorted(row.items())) for row in match(closure, p)}
            assert got == _brute_match(closure, p.predicate, p.subject, p.object, p.at), (seed, p)
            rows = match(closure, p)
            assert len(rows) == len(got)  # no duplicate rows
            checked += 1
    assert checked > 500


def test_ask_iff_ground_match_row():
    for seed in range(6000, 6030):
        rng = random.Random(seed)
        gen = random_kb(rng, max_facts=120)
        closure = materialize(_load(gen.text()))
        rels = [r for r, d in gen.relations.items() if not d["temporal"]]
        for _ in range(40):
            if rels and rng.random() < 0.5:
                pred, s, o = rng.choice(rels), rng.choice(gen.individuals), rng.choice(gen.individuals)
            else:
                pred, s, o = "instance_of", rng.choice(gen.individuals), rng.choice(gen.classes)
            truth = ask(closure, Ask(pred, s, o))
            # ground both positions through a variable that must equal the constant
            rows = [r for r in match(closure, Pattern(pred, Var("s"), o)) if r["s"] == s]
            assert truth == (len(rows) == 1)


def test_direct_subset_of_indirect():
    for seed in range(7000, 7030):
        rng = random.Random(seed)
        gen = random_kb(rng)
        closure = materialize(_load(gen.text()))
        for c in gen.classes:
            assert instances_of(closure, c, True) <= instances_of(closure, c, False)


def test_match_order_deterministic(scenario):
    rows = _q(scenario, "match instance_of(?x, ?c)")
    assert rows == sorted(rows)
    assert len(rows) == len(set(rows))
    assert "SensorA\tSensor" in rows
    subs = _q(scenario, "match is_a(?c, Sensor)")
    assert subs == sorted(subs)
    assert {"Sensor", "Space-Based_Sensor", "Ground-Based_Sensor"} <= set(subs)
    assert "Satellite" not in subs
