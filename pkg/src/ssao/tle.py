"""NORAD two-line element sets: fixed-column parsing, checksums, serialization.

Columns below are 1-based and inclusive, as in the published format.
Derived quantities use two-body relations only; there is no propagation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterator

MU_EARTH_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6378.137
MINUTES_PER_DAY = 1440.0
SECONDS_PER_DAY = 86400.0

LINE_LENGTH = 69
MAX_NAME_LENGTH = 24


class TleError(ValueError):
    """Base class for TLE format errors."""


class BadLength(TleError):
    pass


class BadLineNumber(TleError):
    pass


class ChecksumMismatch(TleError):
    def __init__(self, line_no: int, expected: int, found: str) -> None:
        super().__init__(f"line {line_no}: checksum expected {expected}, found {found!r}")
        self.line_no = line_no
        self.expected = expected
        self.found = found


class CatalogNumberMismatch(TleError):
    pass


class FieldParseError(TleError):
    def __init__(self, line_no: int, start: int, end: int, message: str) -> None:
        super().__init__(f"line {line_no} columns {start}-{end}: {message}")
        self.line_no = line_no
        self.span = (start, end)


class FieldOverflow(TleError):
    pass


class HyperbolicUnsupported(TleError):
    pass


@dataclass(frozen=True)
class TleRecord:
    norad_id: int
    classification: str
    cospar_id: str
    epoch_year: int
    epoch_day: float
    mean_motion_dot: float
    mean_motion_ddot: float
    bstar: float
    ephemeris_type: int
    element_set_no: int
    inclination_deg: float
    raan_deg: float
    eccentricity: float
    arg_perigee_deg: float
    mean_anomaly_deg: float
    mean_motion_rev_per_day: float
    rev_number: int
    checksums: tuple[int, int] = field(default=(0, 0), compare=False)
    name: str | None = field(default=None, compare=False)
    # Exact source text; reproduced by serialize_tle while the fields still match it.
    source: tuple[str, str] | None = field(default=None, compare=False, repr=False)

    @property
    def epoch(self) -> datetime:
        start = datetime(self.epoch_year, 1, 1, tzinfo=timezone.utc)
        return start + timedelta(days=self.epoch_day - 1.0)


@dataclass(frozen=True)
class DerivedElements:
    period_min: float
    semi_major_axis_km: float
    perigee_alt_km: float
    apogee_alt_km: float


def checksum(line: str) -> int:
    """Mod-10 checksum of the first 68 columns: digits at face value, '-' as 1."""
    if len(line) != LINE_LENGTH - 1:
        raise BadLength(f"checksum needs a 68-character prefix, got {len(line)}")
    total = 0
    for ch in line:
        if "0" <= ch <= "9":
            total += ord(ch) - 48
        elif ch == "-":
            total += 1
    return total % 10


# -- field decoding -----------------------------------------------------------------

_INT = re.compile(r" *\d+", re.ASCII)
_DEC = re.compile(r" *[-+]?(?:\d+\.\d*|\.\d+|\d+)", re.ASCII)
_SIGNED_FRAC = re.compile(r"[ +-]\.\d{8}", re.ASCII)
_PACKED = re.compile(r"([ +-])(\d{5})([+-])(\d)", re.ASCII)
_EPOCH = re.compile(r"(\d{2})( *\d+\.\d{8})", re.ASCII)


def _span(line: str, start: int, end: int) -> str:
    return line[start - 1 : end]


def _int_field(line: str, line_no: int, start: int, end: int) -> int:
    text = _span(line, start, end)
    if not _INT.fullmatch(text):
        raise FieldParseError(line_no, start, end, f"expected an integer, got {text!r}")
    return int(text)


def _dec_field(line: str, line_no: int, start: int, end: int) -> float:
    text = _span(line, start, end)
    if not _DEC.fullmatch(text):
        raise FieldParseError(line_no, start, end, f"expected a decimal, got {text!r}")
    return float(text)


def _packed_field(line: str, line_no: int, start: int, end: int) -> float:
    """Decode ``±MMMMM±E`` meaning ±0.MMMMM × 10^±E."""
    text = _span(line, start, end)
    m = _PACKED.fullmatch(text)
    if not m:
        raise FieldParseError(line_no, start, end, f"expected a packed exponent field, got {text!r}")
    sign, mant, esign, exp = m.groups()
    value = float(f"0.{mant}e{esign}{exp}")
    return -value if sign == "-" else value


def _frac_field(line: str, line_no: int, start: int, end: int) -> float:
    text = _span(line, start, end)
    if not _SIGNED_FRAC.fullmatch(text):
        raise FieldParseError(line_no, start, end, f"expected ±.NNNNNNNN, got {text!r}")
    value = float(text[1:])
    return -value if text[0] == "-" else value


def _check_range(value: float, lo: float, hi: float, closed_hi: bool, line_no: int, span, what: str) -> None:
    ok = lo <= value <= hi if closed_hi else lo <= value < hi
    if not ok:
        bracket = "]" if closed_hi else ")"
        raise FieldParseError(line_no, *span, f"{what} {value} outside [{lo}, {hi}{bracket}")


def _check_line(line: str, line_no: int) -> None:
    if len(line) != LINE_LENGTH:
        raise BadLength(f"line {line_no} must be {LINE_LENGTH} characters, got {len(line)}")
    if line[0] != str(line_no) or line[1] != " ":
        raise BadLineNumber(f"line {line_no} must start with '{line_no} ', got {line[:2]!r}")
    found = line[68]
    expected = checksum(line[:68])
    if found != str(expected):
        raise ChecksumMismatch(line_no, expected, found)


def _check_blanks(line: str, line_no: int, columns: tuple[int, ...]) -> None:
    for col in columns:
        if line[col - 1] != " ":
            raise FieldParseError(line_no, col, col, f"expected a blank separator, got {line[col - 1]!r}")


def parse_tle_pair(line1: str, line2: str, name: str | None = None) -> TleRecord:
    _check_line(line1, 1)
    _check_line(line2, 2)
    _check_blanks(line1, 1, (9, 18, 33, 44, 53, 62, 64))
    _check_blanks(line2, 2, (8, 17, 26, 34, 43, 52))

    norad = _int_field(line1, 1, 3, 7)
    norad2 = _int_field(line2, 2, 3, 7)
    if norad != norad2:
        raise CatalogNumberMismatch(f"catalog number {norad} on line 1 but {norad2} on line 2")
    if not 1 <= norad <= 99999:
        raise FieldParseError(1, 3, 7, f"catalog number {norad} outside 1-99999")

    classification = line1[7]
    if not ("A" <= classification <= "Z"):
        raise FieldParseError(1, 8, 8, f"bad classification {classification!r}")
    cospar = _span(line1, 10, 17).rstrip()

    epoch_text = _span(line1, 19, 32)
    m = _EPOCH.fullmatch(epoch_text)
    if not m:
        raise FieldParseError(1, 19, 32, f"expected YYDDD.DDDDDDDD, got {epoch_text!r}")
    yy = int(m.group(1))
    epoch_year = 1900 + yy if yy >= 57 else 2000 + yy
    epoch_day = float(m.group(2))
    days_in_year = 366 if _is_leap(epoch_year) else 365
    if not 1.0 <= epoch_day < days_in_year + 1:
        raise FieldParseError(1, 21, 32, f"day of year {epoch_day} outside 1-{days_in_year}")

    ndot = _frac_field(line1, 1, 34, 43)
    nddot = _packed_field(line1, 1, 45, 52)
    bstar = _packed_field(line1, 1, 54, 61)
    eph_text = line1[62]
    if eph_text not in "0123456789":
        raise FieldParseError(1, 63, 63, f"bad ephemeris type {eph_text!r}")
    elset = _int_field(line1, 1, 65, 68)

    inc = _dec_field(line2, 2, 9, 16)
    _check_range(inc, 0.0, 180.0, True, 2, (9, 16), "inclination")
    raan = _dec_field(line2, 2, 18, 25)
    _check_range(raan, 0.0, 360.0, False, 2, (18, 25), "RAAN")
    ecc_text = _span(line2, 27, 33)
    if not re.fullmatch(r"[0-9]{7}", ecc_text):
        raise FieldParseError(2, 27, 33, f"expected 7 eccentricity digits, got {ecc_text!r}")
    ecc = int(ecc_text) / 1e7
    argp = _dec_field(line2, 2, 35, 42)
    _check_range(argp, 0.0, 360.0, False, 2, (35, 42), "argument of perigee")
    ma = _dec_field(line2, 2, 44, 51)
    _check_range(ma, 0.0, 360.0, False, 2, (44, 51), "mean anomaly")
    n = _dec_field(line2, 2, 53, 63)
    if not n > 0:
        raise FieldParseError(2, 53, 63, f"mean motion must be positive, got {n}")
    revs = _int_field(line2, 2, 64, 68)

    return TleRecord(
        norad_id=norad,
        classification=classification,
        cospar_id=cospar,
        epoch_year=epoch_year,
        epoch_day=epoch_day,
        mean_motion_dot=ndot,
        mean_motion_ddot=nddot,
        bstar=bstar,
        ephemeris_type=int(eph_text),
        element_set_no=elset,
        inclination_deg=inc,
        raan_deg=raan,
        eccentricity=ecc,
        arg_perigee_deg=argp,
        mean_anomaly_deg=ma,
        mean_motion_rev_per_day=n,
        rev_number=revs,
        checksums=(int(line1[68]), int(line2[68])),
        name=name,
        source=(line1, line2),
    )


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


# -- serialization ------------------------------------------------------------------


def _fit(text: str, width: int, what: str) -> str:
    if len(text) != width:
        raise FieldOverflow(f"{what} does not fit {width} columns: {text!r}")
    return text


def _format_packed(value: float, what: str) -> str:
    if value == 0.0:
        return ("-" if math.copysign(1.0, value) < 0 else " ") + "00000+0"
    sign = "-" if value < 0 else " "
    mant_text, exp_text = f"{abs(value):.4e}".split("e")
    digits = mant_text.replace(".", "")
    exp = int(exp_text) + 1
    if not -9 <= exp <= 9:
        raise FieldOverflow(f"{what} {value} needs exponent {exp}, outside -9..9")
    return f"{sign}{digits}{'-' if exp < 0 else '+'}{abs(exp)}"


def _format_frac(value: float, what: str) -> str:
    text = f"{abs(value):.8f}"
    if not text.startswith("0."):
        raise FieldOverflow(f"{what} {value} must have magnitude below 1")
    return ("-" if math.copysign(1.0, value) < 0 else " ") + text[1:]


def _format_angle(value: float, what: str) -> str:
    return _fit(f"{value:8.4f}", 8, what)


def format_tle(rec: TleRecord) -> tuple[str, str]:
    """Canonical fixed-column lines for ``rec`` with fresh checksums."""
    if not 0 <= rec.norad_id <= 99999:
        raise FieldOverflow(f"catalog number {rec.norad_id} does not fit 5 columns")
    if len(rec.classification) != 1:
        raise FieldOverflow(f"classification must be one character, got {rec.classification!r}")
    if len(rec.cospar_id) > 8:
        raise FieldOverflow(f"COSPAR designator {rec.cospar_id!r} exceeds 8 columns")
    yy = rec.epoch_year % 100
    if (1900 + yy if yy >= 57 else 2000 + yy) != rec.epoch_year:
        raise FieldOverflow(f"epoch year {rec.epoch_year} outside 1957-2056")
    if not 0 <= rec.ephemeris_type <= 9:
        raise FieldOverflow(f"ephemeris type {rec.ephemeris_type} does not fit 1 column")
    if not 0 <= rec.element_set_no <= 9999:
        raise FieldOverflow(f"element set number {rec.element_set_no} does not fit 4 columns")
    if not 0 <= rec.rev_number <= 99999:
        raise FieldOverflow(f"revolution number {rec.rev_number} does not fit 5 columns")
    ecc = round(rec.eccentricity * 1e7)
    if not 0 <= ecc <= 9999999:
        raise FieldOverflow(f"eccentricity {rec.eccentricity} does not fit 7 columns")

    norad = f"{rec.norad_id:05d}"
    line1 = (
        f"1 {norad}{rec.classification} {rec.cospar_id:<8} "
        f"{yy:02d}{_fit(f'{rec.epoch_day:012.8f}', 12, 'epoch day')} "
        f"{_format_frac(rec.mean_motion_dot, 'mean motion derivative')} "
        f"{_format_packed(rec.mean_motion_ddot, 'mean motion second derivative')} "
        f"{_format_packed(rec.bstar, 'B*')} "
        f"{rec.ephemeris_type} {rec.element_set_no:4d}"
    )
    line2 = (
        f"2 {norad} {_format_angle(rec.inclination_deg, 'inclination')} "
        f"{_format_angle(rec.raan_deg, 'RAAN')} {ecc:07d} "
        f"{_format_angle(rec.arg_perigee_deg, 'argument of perigee')} "
        f"{_format_angle(rec.mean_anomaly_deg, 'mean anomaly')} "
        f"{_fit(f'{rec.mean_motion_rev_per_day:11.8f}', 11, 'mean motion')}"
        f"{rec.rev_number:5d}"
    )
    return line1 + str(checksum(line1)), line2 + str(checksum(line2))


def serialize_tle(rec: TleRecord) -> tuple[str, str]:
    """Lines for ``rec``: the source text while unmodified, else canonical columns."""
    if rec.source is not None:
        try:
            if parse_tle_pair(*rec.source) == rec:
                return rec.source
        except TleError:
            pass
    return format_tle(rec)


# -- derived elements -----------------------------------------------------------------


def derive_orbit(rec: TleRecord) -> DerivedElements:
    e = rec.eccentricity
    n = rec.mean_motion_rev_per_day
    if e >= 1.0:
        raise HyperbolicUnsupported(f"eccentricity {e} is not elliptical")
    if n <= 0:
        raise ValueError(f"mean motion must be positive, got {n}")
    n_rad_s = n * 2.0 * math.pi / SECONDS_PER_DAY
    a = (MU_EARTH_KM3_S2 / (n_rad_s * n_rad_s)) ** (1.0 / 3.0)
    return DerivedElements(
        period_min=MINUTES_PER_DAY / n,
        semi_major_axis_km=a,
        perigee_alt_km=a * (1.0 - e) - EARTH_RADIUS_KM,
        apogee_alt_km=a * (1.0 + e) - EARTH_RADIUS_KM,
    )


# -- files ------------------------------------------------------------------------------


@dataclass(frozen=True)
class TleFileEntry:
    """One record slot in a TLE file: a parsed record or the error that stopped it."""

    line: int
    record: TleRecord | None = None
    error: str | None = None
    name: str | None = None


def iter_tle_text(text: str) -> Iterator[TleFileEntry]:
    """Yield records from 2-line or 3-line (named) TLE text, auto-detected per record."""
    lines = [ln.rstrip("\r\n") for ln in text.splitlines()]
    i = 0
    while i < len(lines):
        ln = lines[i]
        if not ln.strip():
            i += 1
            continue
        start = i + 1
        name = None
        if not ln.startswith(("1 ", "2 ")):
            name = ln.strip()
            if name.startswith("0 "):
                name = name[2:].strip()
            if len(name) > MAX_NAME_LENGTH:
                yield TleFileEntry(start, error=f"name line exceeds {MAX_NAME_LENGTH} characters", name=name)
                i += 1
                continue
            i += 1
        if i >= len(lines):
            yield TleFileEntry(start, error="truncated record", name=name)
            break
        l1 = lines[i]
        if not l1.startswith("1 "):
            yield TleFileEntry(start, error=f"expected line 1, got {l1[:20]!r}", name=name)
            i += 1
            continue
        if i + 1 >= len(lines):
            yield TleFileEntry(start, error="truncated record", name=name)
            break
        l2 = lines[i + 1]
        if not l2.startswith("2 "):
            yield TleFileEntry(start, error=f"expected line 2 after line 1, got {l2[:20]!r}", name=name)
            i += 1
            continue
        try:
            rec = parse_tle_pair(l1, l2, name)
        except TleError as exc:
            yield TleFileEntry(start, error=str(exc), name=name)
        else:
            yield TleFileEntry(start, record=rec, name=name)
        i += 2


def format_tle_file(records, names: bool = False) -> str:
    out = []
    for rec in records:
        if names and rec.name:
            out.append(rec.name)
        out.extend(serialize_tle(rec))
    return "".join(line + "\n" for line in out)

