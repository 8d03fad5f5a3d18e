"""Annotating space-object catalogs: TLE ingestion and cross-catalog reconciliation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence

from .dsl import ParseDiagnostic, format_value, render
from .model import (
    AttributeAssertion,
    ClassAssertion,
    Fact,
    IndividualDecl,
    KnowledgeBase,
    Location,
    RelationAssertion,
    SameIndividual,
    TermKind,
    UnknownTerm,
    ValueTypeMismatch,
    assert_statement,
    check_token,
    parse_timestamp,
)
from .tle import DerivedElements, TleRecord, derive_orbit, iter_tle_text

ORBIT_ATTRIBUTES = (
    "has_orbital_inclination",
    "has_orbital_eccentricity",
    "has_raan",
    "has_arg_perigee",
    "has_mean_motion",
    "has_orbital_period",
    "has_perigee_altitude",
    "has_apogee_altitude",
)


class UnknownSeedTerm(UnknownTerm):
    pass


class AmbiguousKey(Exception):
    pass


@dataclass(frozen=True)
class RegimeThresholds:
    leo_max_period_min: float = 128.0
    geo_band_rev_per_day: tuple[float, float] = (0.99, 1.01)
    geo_max_ecc: float = 0.01
    geo_max_inc_deg: float = 10.0
    heo_min_ecc: float = 0.25

    def __post_init__(self) -> None:
        lo, hi = self.geo_band_rev_per_day
        values = (self.leo_max_period_min, lo, hi, self.geo_max_ecc, self.geo_max_inc_deg, self.heo_min_ecc)
        if any(v <= 0 for v in values):
            raise ValueError("regime thresholds must be positive")
        if not lo < hi:
            raise ValueError("GEO mean-motion band must be ordered (low, high)")


@dataclass(frozen=True)
class IngestConfig:
    satellite_class: str = "Artificial_Satellite"
    create_orbit_individuals: bool = True
    tracked_by_sensor: str | None = None
    satellite_name: str = "SAT-{norad_id}"
    orbit_name: str = "ORBIT-{norad_id}-{element_set_no}"
    tle_name: str = "TLE-{norad_id}-{element_set_no}"
    thresholds: RegimeThresholds = field(default_factory=RegimeThresholds)

    def names(self, rec: TleRecord) -> tuple[str, str, str]:
        values = {"norad_id": rec.norad_id, "element_set_no": rec.element_set_no}
        names = tuple(t.format(**values) for t in (self.satellite_name, self.orbit_name, self.tle_name))
        for n in names:
            check_token(n)
        return names


@dataclass
class IngestReport:
    records_read: int = 0
    records_parsed: int = 0
    records_skipped: int = 0
    facts_added: int = 0
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    individuals: list[IndividualDecl] = field(default_factory=list)
    facts: list[Fact] = field(default_factory=list)

    def to_text(self) -> str:
        return (
            f"records_read\t{self.records_read}\n"
            f"records_parsed\t{self.records_parsed}\n"
            f"records_skipped\t{self.records_skipped}\n"
            f"facts_added\t{self.facts_added}\n"
        )


def classify_regime(d: DerivedElements, rec: TleRecord, th: RegimeThresholds | None = None) -> str:
    """Orbit regime class; GEO, then LEO, then HEO, else MEO."""
    th = th or RegimeThresholds()
    lo, hi = th.geo_band_rev_per_day
    if (
        lo <= rec.mean_motion_rev_per_day <= hi
        and rec.eccentricity <= th.geo_max_ecc
        and rec.inclination_deg <= th.geo_max_inc_deg
    ):
        return "GEO_Orbit"
    if d.period_min <= th.leo_max_period_min:
        return "LEO_Orbit"
    if rec.eccentricity > th.heo_min_ecc:
        return "HEO_Orbit"
    return "MEO_Orbit"


def epoch_timestamp(rec: TleRecord) -> datetime:
    """TLE epoch rounded to the nearest whole second."""
    return (rec.epoch + timedelta(microseconds=500_000)).replace(microsecond=0)


def _required_terms(cfg: IngestConfig) -> list[tuple[str, TermKind]]:
    terms = [
        (cfg.satellite_class, TermKind.CLASS),
        ("Two-Line_Element_Set", TermKind.CLASS),
        ("describes_orbit_of", TermKind.RELATION),
        ("norad_id", TermKind.ATTRIBUTE),
        ("cospar_id", TermKind.ATTRIBUTE),
    ]
    if cfg.create_orbit_individuals:
        terms += [("Orbit", TermKind.CLASS), ("has_orbit", TermKind.RELATION)]
        terms += [(a, TermKind.ATTRIBUTE) for a in ORBIT_ATTRIBUTES]
        terms += [(c, TermKind.CLASS) for c in ("LEO_Orbit", "MEO_Orbit", "GEO_Orbit", "HEO_Orbit")]
    if cfg.tracked_by_sensor is not None:
        terms += [("is_tracked_by", TermKind.RELATION), (cfg.tracked_by_sensor, TermKind.INDIVIDUAL)]
    return terms


def record_statements(rec: TleRecord, cfg: IngestConfig) -> tuple[list[str], list[Fact]]:
    """Individuals and facts annotating one TLE record."""
    sat, orbit, tle = cfg.names(rec)
    epoch = epoch_timestamp(rec)
    individuals = [sat, tle]
    facts: list[Fact] = [
        ClassAssertion(sat, cfg.satellite_class),
        ClassAssertion(tle, "Two-Line_Element_Set"),
        RelationAssertion("describes_orbit_of", tle, sat, epoch),
        AttributeAssertion("norad_id", sat, rec.norad_id),
    ]
    if rec.cospar_id:
        facts.append(AttributeAssertion("cospar_id", sat, rec.cospar_id))
    if cfg.create_orbit_individuals:
        d = derive_orbit(rec)
        individuals.append(orbit)
        values = (
            rec.inclination_deg,
            rec.eccentricity,
            rec.raan_deg,
            rec.arg_perigee_deg,
            rec.mean_motion_rev_per_day,
            d.period_min,
            d.perigee_alt_km,
            d.apogee_alt_km,
        )
        facts += [
            ClassAssertion(orbit, "Orbit"),
            ClassAssertion(orbit, classify_regime(d, rec, cfg.thresholds)),
            RelationAssertion("has_orbit", sat, orbit),
        ]
        facts += [AttributeAssertion(a, orbit, float(v)) for a, v in zip(ORBIT_ATTRIBUTES, values)]
    if cfg.tracked_by_sensor is not None:
        facts.append(RelationAssertion("is_tracked_by", sat, cfg.tracked_by_sensor, epoch))
    return individuals, facts


def ingest_records(
    kb: KnowledgeBase,
    entries: Iterable,
    cfg: IngestConfig | None = None,
    path: str = "<tle>",
) -> IngestReport:
    cfg = cfg or IngestConfig()
    for name, kind in _required_terms(cfg):
        if kb.kind_of(name) is not kind:
            raise UnknownSeedTerm(f"ingest needs {kind.value} {name!r} in the knowledge base")
    report = IngestReport()
    for entry in entries:
        report.records_read += 1
        loc = Location(path, entry.line)
        if entry.record is None:
            report.records_skipped += 1
            report.diagnostics.append(ParseDiagnostic("error", loc, entry.error, "E_TLE"))
            continue
        try:
            individuals, facts = record_statements(entry.record, cfg)
        except ValueError as exc:
            report.records_skipped += 1
            report.diagnostics.append(ParseDiagnostic("error", loc, str(exc), "E_TLE"))
            continue
        report.records_parsed += 1
        for name in individuals:
            decl = IndividualDecl(name)
            if assert_statement(kb, decl, loc):
                report.individuals.append(decl)
        for f in facts:
            if assert_statement(kb, f, loc):
                report.facts.append(f)
    report.facts_added = len(report.facts)
    return report


def ingest_tle_text(
    kb: KnowledgeBase, text: str, cfg: IngestConfig | None = None, path: str = "<tle>"
) -> IngestReport:
    return ingest_records(kb, iter_tle_text(text), cfg, path)


def ingest_tle_file(kb: KnowledgeBase, path: str | Path, cfg: IngestConfig | None = None) -> IngestReport:
    """Annotate every record of a TLE file as individuals of ``kb`` (mutated in place)."""
    text = Path(path).read_text(encoding="utf-8")
    return ingest_tle_text(kb, text, cfg, str(path))


def render_ingest(kb: KnowledgeBase, report: IngestReport) -> str:
    """``.ssao`` text for the statements an ingest added."""
    return render(kb, individuals=report.individuals, facts=report.facts)


# -- reconciliation -------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogRow:
    name: str
    norad_id: int | None = None
    cospar_id: str | None = None
    extra: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Conflict:
    key: str
    attribute: str
    values: tuple[str, ...]
    locations: tuple[Location, ...]


@dataclass
class ReconciliationReport:
    merges: list[tuple[str, str, str]] = field(default_factory=list)
    conflicts: list[Conflict] = field(default_factory=list)
    created: list[str] = field(default_factory=list)
    facts_added: int = 0

    def to_text(self) -> str:
        lines = [f"merge\t{a}\t{b}\t{key}" for a, b, key in self.merges]
        lines += [f"created\t{name}" for name in self.created]
        for c in self.conflicts:
            where = ",".join(str(loc) for loc in c.locations) or "-"
            lines.append(f"conflict\t{c.key}\t{c.attribute}\t{' | '.join(c.values)}\t{where}")
        lines.append(f"facts_added\t{self.facts_added}")
        return "".join(line + "\n" for line in lines)


def read_catalog_csv(text: str) -> list[CatalogRow]:
    """Rows of a ``name,norad_id,cospar_id,...`` CSV; extra columns name attributes."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return []
    header = [h.strip() for h in header]
    if header[:3] != ["name", "norad_id", "cospar_id"]:
        raise ValueError(f"catalog header must start with name,norad_id,cospar_id, got {header[:3]}")
    rows = []
    for lineno, cells in enumerate(reader, start=2):
        if not any(c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} columns, got {len(cells)}")
        name, norad, cospar = (c.strip() for c in cells[:3])
        extra = tuple((h, v) for h, v in zip(header[3:], cells[3:]) if v != "")
        rows.append(CatalogRow(name, int(norad) if norad else None, cospar or None, extra))
    return rows


def _coerce_cell(kb: KnowledgeBase, attribute: str, text: str) -> object:
    decl = kb.attributes.get(attribute)
    if decl is None:
        raise UnknownTerm(f"catalog column {attribute!r} is not a declared attribute")
    kind = decl.valuetype.kind
    try:
        if kind == "decimal":
            return float(text)
        if kind == "integer":
            return int(text)
        if kind == "timestamp":
            return parse_timestamp(text)
    except ValueError as exc:
        raise ValueTypeMismatch(f"{attribute}: cannot read {text!r} ({exc})") from None
    return text


class _Groups:
    """Union-find over asserted identity statements."""

    def __init__(self, kb: KnowledgeBase) -> None:
        self.parent: dict[str, str] = {}
        for f in kb.facts:
            if isinstance(f, SameIndividual):
                self.union(f.a, f.b)

    def find(self, x: str) -> str:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        self.parent[x] = root
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def reconcile(
    kb: KnowledgeBase,
    rows: Sequence[CatalogRow],
    new_class: str = "Space_Object",
    path: str = "<catalog>",
) -> ReconciliationReport:
    """Merge external catalog rows into ``kb`` by NORAD id, then COSPAR id.

    Matches become ``same`` facts; attribute disagreements are reported and
    left unasserted. Raises AmbiguousKey (leaving ``kb`` untouched) when a
    row's key matches two individuals not already known to be the same.
    """
    work = kb.copy()
    report = ReconciliationReport()
    groups = _Groups(work)
    values: dict[tuple[str, str], set] = {}
    holders: dict[tuple[str, object], set[str]] = {}
    for f in work.facts:
        if isinstance(f, AttributeAssertion):
            values.setdefault((f.subject, f.attribute), set()).add(f.value)
            holders.setdefault((f.attribute, f.value), set()).add(f.subject)

    def add(stmt, loc: Location) -> None:
        if assert_statement(work, stmt, loc):
            report.facts_added += isinstance(stmt, (AttributeAssertion, ClassAssertion, SameIndividual))
            if isinstance(stmt, AttributeAssertion):
                values.setdefault((stmt.subject, stmt.attribute), set()).add(stmt.value)
                holders.setdefault((stmt.attribute, stmt.value), set()).add(stmt.subject)
            elif isinstance(stmt, SameIndividual):
                groups.union(stmt.a, stmt.b)

    for lineno, row in enumerate(rows, start=2):
        loc = Location(path, lineno)
        check_token(row.name)
        attrs: list[tuple[str, object]] = []
        if row.norad_id is not None:
            attrs.append(("norad_id", row.norad_id))
        if row.cospar_id is not None:
            attrs.append(("cospar_id", row.cospar_id))
        attrs += [(a, _coerce_cell(work, a, v)) for a, v in row.extra]

        target, key = None, None
        for key_attr, key_value in attrs[:2]:
            found = sorted(holders.get((key_attr, key_value), ()))
            if not found:
                continue
            roots = {groups.find(x) for x in found}
            if len(roots) > 1:
                raise AmbiguousKey(
                    f"{row.name}: {key_attr}={key_value} matches distinct individuals {', '.join(found)}"
                )
            target, key = found[0], key_attr
            break

        exists = work.kind_of(row.name) is TermKind.INDIVIDUAL
        if target is None and not exists:
            add(IndividualDecl(row.name), loc)
            add(ClassAssertion(row.name, new_class), loc)
            report.created.append(row.name)
        elif target is not None and groups.find(target) != groups.find(row.name):
            add(IndividualDecl(row.name), loc)
            add(SameIndividual(row.name, target), loc)
            report.merges.append((row.name, target, key))
        elif target is not None:
            report.merges.append((row.name, target, key))

        group = groups.find(row.name)
        members = sorted(x for x in work.individuals if groups.find(x) == group) if target or exists else [row.name]
        for attribute, value in attrs:
            held: set = set()
            for m in members:
                held |= values.get((m, attribute), set())
            if not held:
                add(AttributeAssertion(attribute, row.name, value), loc)
            elif value not in held:
                decl = work.attributes[attribute]
                quoted = decl.valuetype.kind == "text"
                shown = [format_value(value, quoted)] + sorted(format_value(v, quoted) for v in held)
                locs = [loc] + sorted(
                    work.source_map[AttributeAssertion(attribute, m, v)]
                    for m in members
                    for v in values.get((m, attribute), ())
                )
                report.conflicts.append(Conflict(key or "name", attribute, tuple(shown), tuple(locs)))

    kb.__dict__.update(work.__dict__)
    return report
