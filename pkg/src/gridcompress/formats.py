"""Number-format keys, rule-based data types and identical-cell aggregation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .grid import Cell, CellRange, Sheet
from .index import TUPLE_SEPARATORS, ValueIndex, cover_ranges, index_items, index_values, render_tuple, restore
from .xlsx import is_general


class DataType(str, Enum):
    YEAR = "Year"
    INTEGER = "Integer"
    FLOAT = "Float"
    PERCENTAGE = "Percentage"
    SCIENTIFIC = "ScientificNum"
    DATE = "Date"
    TIME = "Time"
    CURRENCY = "Currency"
    EMAIL = "Email"
    OTHERS = "Others"

    def __str__(self) -> str:
        return self.value


# labels used in rendered tuples; see the prompt templates ('IntNum', 'DateData', ...)
TYPE_LABELS = {
    DataType.YEAR: "YearData",
    DataType.INTEGER: "IntNum",
    DataType.FLOAT: "FloatNum",
    DataType.PERCENTAGE: "PercentageNum",
    DataType.SCIENTIFIC: "ScientificNum",
    DataType.DATE: "DateData",
    DataType.TIME: "TimeData",
    DataType.CURRENCY: "CurrencyData",
    DataType.EMAIL: "EmailData",
}

OTHERS = DataType.OTHERS.value

_MONTH = r"(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec)[a-z]*"
_INT = r"(?:\d{1,3}(?:,\d{3})+|\d+)"
_DEC = rf"(?:{_INT}(?:\.\d+)?|\.\d+)"

_EMAIL = re.compile(r"^[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}$")
_PERCENT = re.compile(rf"^[+-]?{_DEC}\s?%$")
_SCI = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)[eE][+-]?\d+$")
_YEAR = re.compile(r"^[12]\d{3}$")
_FLOAT = re.compile(rf"^[+-]?(?:{_INT}\.\d+|\.\d+)$")
_INTEGER = re.compile(rf"^[+-]?{_INT}$")
_TIME = re.compile(r"^(\d{1,2}):([0-5]\d)(?::([0-5]\d)(?:\.\d+)?)?(?:\s?([AaPp])\.?[Mm]\.?)?$")

_YMD = re.compile(r"^(\d{4})([-/.])(\d{1,2})\2(\d{1,2})(?:[ T](\d{1,2}):([0-5]\d)(?::([0-5]\d)(?:\.\d+)?)?)?$")
_DMY_NUM = re.compile(r"^(\d{1,2})([-/.])(\d{1,2})\2(\d{2}|\d{4})(?:\s(\d{1,2}):([0-5]\d)(?::([0-5]\d))?)?$")
_D_MON_Y = re.compile(rf"^(\d{{1,2}})[- ]{_MONTH}[- ,]+(\d{{2}}|\d{{4}})$", re.I)
_D_MON = re.compile(rf"^(\d{{1,2}})[- ]{_MONTH}$", re.I)
_MON_Y = re.compile(rf"^{_MONTH}[- ,]+(\d{{2}}|\d{{4}})$", re.I)
_MON_D_Y = re.compile(rf"^{_MONTH}\.? (\d{{1,2}}),? (\d{{4}})$", re.I)


@dataclass(frozen=True)
class TypeRules:
    """Configurable parts of the recognizer."""

    currency_symbols: tuple[str, ...] = ("$", "€", "£", "¥")
    extra_date_patterns: tuple[str, ...] = ()
    extra_time_patterns: tuple[str, ...] = ()
    _compiled: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "TypeRules":
        known = {"currency_symbols", "extra_date_patterns", "extra_time_patterns"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown type-rule keys {sorted(unknown)}")
        kw = {k: tuple(str(x) for x in doc[k]) for k in known if k in doc}
        for pat in kw.get("extra_date_patterns", ()) + kw.get("extra_time_patterns", ()):
            re.compile(pat)
        return cls(**kw)

    def currency_re(self) -> re.Pattern:
        pat = self._compiled.get("currency")
        if pat is None:
            sym = "|".join(re.escape(s) for s in sorted(self.currency_symbols, key=len, reverse=True))
            pat = re.compile(rf"^(?:[+-]?(?:{sym})\s?[+-]?{_DEC}|[+-]?{_DEC}\s?(?:{sym})|\((?:{sym})\s?{_DEC}\))$")
            self._compiled["currency"] = pat
        return pat

    def extra(self, kind: str) -> list[re.Pattern]:
        key = "extra_" + kind
        pats = self._compiled.get(key)
        if pats is None:
            pats = [re.compile(p) for p in getattr(self, key + "_patterns")]
            self._compiled[key] = pats
        return pats


DEFAULT_RULES = TypeRules()


def _valid_md(month: int, day: int) -> bool:
    return 1 <= month <= 12 and 1 <= day <= 31


def _is_date(s: str, rules: TypeRules) -> bool:
    m = _YMD.match(s)
    if m:
        return _valid_md(int(m.group(3)), int(m.group(4))) and (m.group(5) is None or int(m.group(5)) < 24)
    m = _DMY_NUM.match(s)
    if m:
        a, b = int(m.group(1)), int(m.group(3))
        return _valid_md(a, b) or _valid_md(b, a)
    m = _D_MON_Y.match(s) or _D_MON.match(s)
    if m:
        return 1 <= int(m.group(1)) <= 31
    m = _MON_D_Y.match(s)
    if m:
        return 1 <= int(m.group(1)) <= 31
    if _MON_Y.match(s):
        return True
    return any(p.fullmatch(s) for p in rules.extra("date"))


def _is_time(s: str, rules: TypeRules) -> bool:
    m = _TIME.match(s)
    if m:
        hour = int(m.group(1))
        return 1 <= hour <= 12 if m.group(4) else hour <= 23
    return any(p.fullmatch(s) for p in rules.extra("time"))


def _recognize(s: str, rules: TypeRules) -> DataType:
    s = s.strip()
    if not s:
        return DataType.OTHERS
    if _EMAIL.match(s):
        return DataType.EMAIL
    if _PERCENT.match(s):
        return DataType.PERCENTAGE
    if rules.currency_re().match(s):
        return DataType.CURRENCY
    if _SCI.match(s):
        return DataType.SCIENTIFIC
    if _is_date(s, rules):
        return DataType.DATE
    if _is_time(s, rules):
        return DataType.TIME
    if _YEAR.match(s) and 1000 <= int(s) <= 2999:
        return DataType.YEAR
    if _FLOAT.match(s):
        return DataType.FLOAT
    if _INTEGER.match(s):
        return DataType.INTEGER
    return DataType.OTHERS


@lru_cache(maxsize=65536)
def _recognize_default(s: str) -> DataType:
    return _recognize(s, DEFAULT_RULES)


def recognize_type(value: str, rules: TypeRules | None = None) -> DataType:
    """Classify a cell's text; first matching rule wins.

    Order: Email, Percentage, Currency, ScientificNum, Date, Time, Year,
    Float, Integer, then Others.  Year is a bare four-digit number in
    [1000, 2999]; Integer accepts thousands separators; Float needs a
    decimal point.
    """
    if rules is None or rules == DEFAULT_RULES:
        return _recognize_default(value)
    return _recognize(value, rules)


def resolve_format_key(cell: Cell, rules: TypeRules | None = None) -> str:
    """The cell's number format string when it has one, else its data type tag.

    Empty cells and textual values are always ``Others``: a number format on
    a text cell does not make the text numeric.
    """
    if cell.value == "":
        return OTHERS
    dtype = recognize_type(cell.value, rules)
    if dtype is DataType.OTHERS:
        return OTHERS
    if not is_general(cell.nfs):
        return cell.nfs
    return dtype.value


def render_label(key: str) -> str:
    try:
        return TYPE_LABELS[DataType(key)]
    except (ValueError, KeyError):
        return key


@dataclass(frozen=True)
class TypedArea:
    range: CellRange
    dtype: str
    cells: frozenset[tuple[int, int]]

    @property
    def seed(self) -> tuple[int, int]:
        return min(self.cells)


def format_key_grid(sheet: Sheet, rules: TypeRules | None = None) -> list[list[str]]:
    return [[resolve_format_key(c, rules) for c in row] for row in sheet.rows]


def aggregate_keys(keys: list[list[str]]) -> list[TypedArea]:
    lookup: dict[str, int] = {}
    m, n = len(keys), len(keys[0])
    codes = np.empty((m, n), dtype=np.int32)
    for i, row in enumerate(keys):
        for j, k in enumerate(row):
            codes[i, j] = lookup.setdefault(k, len(lookup))
    names = list(lookup)
    labels, boxes = _kernels.label_components(codes)
    members: list[list[tuple[int, int]]] = [[] for _ in range(len(boxes))]
    for (i, j), lab in np.ndenumerate(labels):
        members[lab].append((i, j))
    areas = []
    for lab, (t, l, b, r) in enumerate(boxes):
        seed = members[lab][0]
        areas.append(TypedArea(CellRange(int(t), int(l), int(b), int(r)),
                               names[codes[seed]], frozenset(members[lab])))
    return areas


def aggregate_identical(sheet: Sheet, rules: TypeRules | None = None) -> list[TypedArea]:
    """Partition the grid into 4-connected regions sharing a format key.

    Each area carries the bounding box of its region, which may also enclose
    cells of other regions, and the exact member cells.  Areas come in the
    order their seed cells are met in a row-major scan.
    """
    return aggregate_keys(format_key_grid(sheet, rules))


def typed_tuples(areas: Iterable[TypedArea], values: list[list[str]]) -> list[tuple[tuple[int, int], str, list[CellRange]]]:
    """Tuples for the typed (non-``Others``) areas, blanking their cells in ``values``.

    Each area is rendered through a rectangle cover of its member cells, so
    a non-rectangular region never claims cells outside itself.  Areas that
    share a label are merged into one tuple.
    """
    m, n = len(values), len(values[0])
    ids = np.zeros((m, n), dtype=np.int32)
    labels = [""]
    for area in areas:
        if area.dtype == OTHERS:
            continue
        labels.append(render_label(area.dtype))
        for r, c in area.cells:
            if values[r][c] != "":
                ids[r, c] = len(labels) - 1
                values[r][c] = ""
    typed: dict[str, tuple[tuple[int, int], list[CellRange]]] = {}
    for area_id, rng in cover_ranges(ids):
        label = labels[area_id]
        first, ranges = typed.get(label, ((rng.top, rng.left), []))
        ranges.append(rng)
        typed[label] = (min(first, (rng.top, rng.left)), ranges)
    return [(first, label, sorted(rs, key=lambda r: (r.top, r.left))) for label, (first, rs) in typed.items()]


def render_aggregated(areas: Iterable[TypedArea], index: ValueIndex, style: str = "detection") -> str:
    """Replace typed regions by ``(label|range)`` tuples; other cells keep their index tuples.

    Labels are the number format string for format-keyed areas and a type
    label such as ``IntNum`` or ``DateData`` otherwise.  All tuples are
    ordered by their first cell in a row-major scan.
    """
    sep = TUPLE_SEPARATORS[style]
    values = restore(index).values()
    items = [(first, 0, label, rs) for first, label, rs in typed_tuples(areas, values)]
    items += [(first, 1, v, rs) for first, v, rs in index_items(index_values(values))]
    items.sort(key=lambda it: (it[0], it[1]))
    return sep.join(render_tuple(v, rs) for _, _, v, rs in items)


_CANONICAL = {
    DataType.YEAR: "2000",
    DataType.INTEGER: "0",
    DataType.FLOAT: "0.0",
    DataType.PERCENTAGE: "0%",
    DataType.SCIENTIFIC: "0E+0",
    DataType.DATE: "2000-01-01",
    DataType.TIME: "00:00",
    DataType.CURRENCY: "$0",
    DataType.EMAIL: "a@b.cd",
}


def canonicalize_by_type(sheet: Sheet, rules: TypeRules | None = None) -> Sheet:
    """Replace every typed value by a fixed exemplar of its type."""
    rows = []
    for row in sheet.rows:
        out = []
        for cell in row:
            dtype = recognize_type(cell.value, rules) if cell.value else DataType.OTHERS
            if dtype is DataType.OTHERS:
                out.append(cell)
            else:
                out.append(Cell(_CANONICAL[dtype], cell.nfs, cell.style, cell.merge))
        rows.append(out)
    return Sheet(rows, sheet.name)
