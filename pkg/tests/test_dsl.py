import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SCENARIO, SEED
from kbgen import random_document, random_kb
from ssao.dsl import (
    DslError,
    FactStatement,
    IndividualStatement,
    SourceDocument,
    load_files,
    load_text,
    parse_document,
    parse_line,
    parse_text,
    parse_tokens,
    serialize,
    tokenize,
)
from ssao.model import (
    AttributeDecl,
    ClassDecl,
    DefinedClassExpr,
    KnowledgeBase,
    RelationAssertion,
    RelationCondition,
)


def _one(line):
    statements, diags = parse_text(line)
    assert not diags, [str(d) for d in diags]
    (st_,) = statements
    return st_.payload


def _code(line):
    statements, diags = parse_text(line)
    assert not statements
    (d,) = diags
    return d.code


def test_class_is_a():
    assert _one("class Space-Based_Sensor is_a Sensor") == ClassDecl("Space-Based_Sensor", {"Sensor"})


def test_defined_class():
    decl = _one("class GPS_Satellite equiv Artificial_Satellite and part_of value Global_Positioning_System")
    cond = RelationCondition("part_of", "Global_Positioning_System", "value")
    assert decl == ClassDecl("GPS_Satellite", {"Artificial_Satellite"}, DefinedClassExpr("Artificial_Satellite", (cond,)))


def test_temporal_fact_round_trip(seed_kb):
    line = "fact is_tracked_by(NAVSTAR-66, SensorA) at 2016-02-10T00:00:00Z"
    payload = _one(line)
    assert payload == FactStatement(
        "is_tracked_by", "NAVSTAR-66", "SensorA", at=datetime(2016, 2, 10, tzinfo=timezone.utc),
    )
    kb, diags = load_text(SEED.read_text() + "individual NAVSTAR-66\nindividual SensorA\n" + line + "\n")
    assert not diags
    assert line in serialize(kb).splitlines()


def test_empty_document():
    assert parse_document(SourceDocument("<empty>", ())) == ([], [])
    assert parse_text("") == ([], [])
    assert serialize(KnowledgeBase()) == ""


def test_single_class_serializes_to_one_line():
    kb, _ = load_text("class Sensor\n")
    assert serialize(kb) == "class Sensor\n"


def test_statement_forms():
    assert _one("relation r domain A range B temporal transitive").temporal
    attr = _one("attribute has_status domain Satellite valuetype enum(Operational, Defunct) unit none")
    assert isinstance(attr, AttributeDecl) and attr.valuetype.enum_values == ("Operational", "Defunct")
    assert _one("individual x instance_of A and B") == IndividualStatement("x", ("A", "B"))
    assert _one("individual x") == IndividualStatement("x", ())
    assert _one('fact label(x, "a \\"b\\" \\\\ c")').obj == 'a "b" \\ c'
    assert _one("fact mass(x, -2.5e3)").obj == -2500.0
    assert _one("fact count(x, 7)").obj == 7
    assert _one('doc Sensor "A thing that senses."').text == "A thing that senses."
    for kw in ("equivalent", "disjoint", "same"):
        assert _one(f"{kw} B A").a == "A"


@pytest.mark.parametrize(
    "line, code",
    [
        ("klass Sensor", "E_UNKNOWN_KEYWORD"),
        ("class 9Sensor", "E_BAD_TOKEN"),
        ("class and", "E_BAD_TOKEN"),
        ("class Sensor is_a", "E_ARITY"),
        ("fact r(a)", "E_ARITY"),
        ("fact r(a, b, c)", "E_ARITY"),
        ("equivalent A", "E_ARITY"),
        ("class A B", "E_SYNTAX"),
        ("fact r(a, b) at 2016-02-10", "E_BAD_TIMESTAMP"),
        ("fact r(a, b) at 2016-02-30T00:00:00Z", "E_BAD_TIMESTAMP"),
        ("fact seen(a, 2016-02-10T00:00:00+01:00)", "E_BAD_TIMESTAMP"),
        ("fact mass(a, 1.2.3)", "E_BAD_VALUE"),
        ('fact label(a, "open)', "E_BAD_VALUE"),
        ('fact label(a, "bad \\n escape")', "E_BAD_VALUE"),
        ("attribute a domain C valuetype enum()", "E_BAD_TOKEN"),
        ("attribute a domain C valuetype colour", "E_SYNTAX"),
        ("class GPS equiv A", "E_ARITY"),
        ('doc Sensor unquoted', "E_BAD_VALUE"),
    ],
)
def test_diagnostic_codes(line, code):
    assert _code(line) == code


def test_comments_and_blank_lines():
    text = "# header\n\n   \nclass Sensor  # trailing\n\t\n"
    statements, diags = parse_text(text)
    assert not diags
    assert [s.location.line for s in statements] == [4]


def test_hash_inside_string_is_text():
    assert _one('fact label(x, "no # comment")').obj == "no # comment"


def test_error_isolation():
    text = "class A\nclass 9bad\nclass B is_a A\nnonsense here\nclass C\n"
    statements, diags = parse_text(text, "f.ssao")
    assert [s.payload.name for s in statements] == ["A", "B", "C"]
    assert [(str(d.location), d.code) for d in diags] == [
        ("f.ssao:2", "E_BAD_TOKEN"), ("f.ssao:4", "E_UNKNOWN_KEYWORD"),
    ]


def test_load_error_isolation():
    kb, diags = load_text("class A\nindividual x instance_of Missing\nindividual y instance_of A\n")
    assert [d.code for d in diags] == ["E_UNRESOLVED"]
    assert "y" in kb.individuals and "A" in kb.asserted_classes_of("y")


def test_determinism():
    text = random_document(random.Random(3)) + "\nclass 9x\nfact nope(a, b)\n"
    first = parse_text(text)
    assert parse_text(text) == first
    a, da = load_text(text)
    b, db = load_text(text)
    assert a == b and da == db


def test_two_file_two_pass(tmp_path):
    scenario = tmp_path / "scenario.ssao"
    taxonomy = tmp_path / "taxonomy.ssao"
    scenario.write_text("individual s instance_of Space-Based_Sensor\nfact watches(s, s)\n")
    taxonomy.write_text(
        "class Sensor\nclass Space-Based_Sensor is_a Sensor\nrelation watches domain Sensor range Sensor\n"
    )
    for order in ([taxonomy, scenario], [scenario, taxonomy]):
        kb, diags = load_files(order)
        assert not diags
        assert RelationAssertion("watches", "s", "s") in kb.facts


def test_conflicting_redeclaration_diagnostic(tmp_path):
    other = tmp_path / "other.ssao"
    other.write_text("class Sensor is_a Orbit\n")
    _, diags = load_files([SEED, other])
    assert [d.code for d in diags] == ["E_CONFLICT"]
    assert str(diags[0].location) == f"{other}:1"


def test_unresolved_relation(tmp_path):
    _, diags = load_text(SEED.read_text() + "individual a\nindividual b\nfact watches(a, b)\n", "x.ssao")
    (d,) = diags
    assert d.code == "E_UNRESOLVED" and "watches" in d.message
    assert d.location.path == "x.ssao"


def test_missing_file():
    kb, diags = load_files(["/nonexistent/file.ssao"])
    assert [d.code for d in diags] == ["E_IO"]


def test_seed_round_trip():
    kb, diags = load_files([SEED, SCENARIO])
    assert not diags
    text = serialize(kb)
    again, diags = load_text(text)
    assert not diags and again == kb
    assert serialize(again) == text


def test_canonical_block_order():
    text = "individual b\nclass Z\nfact r(b, b)\nrelation r domain Z range Z\nclass A\nindividual a instance_of A\n"
    kb, diags = load_text(text)
    assert not diags
    assert serialize(kb) == (
        "class A\nclass Z\nrelation r domain Z range Z\n"
        "individual a instance_of A\nindividual b\nfact r(b, b)\n"
    )


def test_docs_survive():
    kb, diags = load_text('class A\ndoc A "An \\"A\\"."\n')
    assert not diags
    assert serialize(kb) == 'class A\ndoc A "An \\"A\\"."\n'


def test_random_documents_round_trip():
    for seed in range(300, 400):
        kb, diags = load_text(random_document(random.Random(seed)))
        assert not diags
        text = serialize(kb)
        again, _ = load_text(text)
        assert again == kb and serialize(again) == text


_LINE_PIECES = st.sampled_from(
    ["fact", "individual", "instance_of", "and", "at", "r", "x", "A", "B-1", "(", ")", ",", " ", "  ",
     "\t", "1.5", "-2", "7", "2016-02-10T00:00:00Z", "2016-02-10", "9x", "is_a", "class", "?", "."]
)


@settings(max_examples=400, deadline=None)
@given(st.lists(_LINE_PIECES, max_size=12))
def test_fast_path_agrees_with_general_parser(pieces):
    line = "".join(pieces)
    try:
        expected = parse_tokens(line)
    except DslError as exc:
        expected = exc.code
    try:
        got = parse_line(line)
    except DslError as exc:
        got = exc.code
    assert got == expected


def test_fast_path_on_generated_lines():
    rng = random.Random(11)
    for _ in range(50):
        for line in random_kb(rng).lines:
            assert parse_line(line) == parse_tokens(line)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet='ab(), "#\\\t1.', max_size=30))
def test_tokenizer_paths_agree(text):
    """The no-quote shortcut must agree with the full scanner."""
    if '"' in text or "#" in text:
        return
    from ssao import dsl

    slow = [(m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup) + 1)
            for m in dsl._SCANNER.finditer(text) if m.lastgroup]
    assert [tuple(t) for t in tokenize(text)] == slow
