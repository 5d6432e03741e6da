"""Core grid model, A1 addressing and canonical JSON ingestion."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import A1ParseError, IngestionError

MAX_COLS = 16384
MAX_ROWS = 1048576

SIDES = ("top", "bottom", "left", "right")

_A1_RE = re.compile(r"^\$?([A-Za-z]{1,3})\$?([0-9]+)$")


def column_letters(col: int) -> str:
    """Bijective base-26 rendering of a zero-based column index (0 -> A, 26 -> AA)."""
    if col < 0:
        raise ValueError(f"negative column index {col}")
    n = col + 1
    out = []
    while n:
        n, rem = divmod(n - 1, 26)
        out.append(chr(ord("A") + rem))
    return "".join(reversed(out))


def column_index(letters: str) -> int:
    n = 0
    for ch in letters.upper():
        if not "A" <= ch <= "Z":
            raise A1ParseError(f"bad column letters {letters!r}")
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n - 1


@dataclass(frozen=True, order=True)
class CellAddress:
    row: int
    col: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError(f"address out of range: ({self.row}, {self.col})")

    def __str__(self) -> str:
        return render_a1(self)


def parse_a1(text: str) -> CellAddress:
    """Parse ``"AB5"`` into a zero-based :class:`CellAddress` (row 4, col 27)."""
    m = _A1_RE.match(text.strip()) if isinstance(text, str) else None
    if not m:
        raise A1ParseError(f"malformed A1 address {text!r}")
    letters, digits = m.groups()
    row = int(digits)
    if row < 1:
        raise A1ParseError(f"row number must be >= 1 in {text!r}")
    col = column_index(letters)
    if col >= MAX_COLS or row > MAX_ROWS:
        raise A1ParseError(f"address {text!r} outside the worksheet limits")
    return CellAddress(row - 1, col)


def render_a1(addr: CellAddress) -> str:
    return f"{column_letters(addr.col)}{addr.row + 1}"


@dataclass(frozen=True, order=True)
class CellRange:
    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        if self.top < 0 or self.left < 0:
            raise ValueError(f"negative range bound in {self!r}")
        if self.top > self.bottom or self.left > self.right:
            raise ValueError(f"inverted range {self!r}")

    @classmethod
    def cell(cls, row: int, col: int) -> "CellRange":
        return cls(row, col, row, col)

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def is_cell(self) -> bool:
        return self.top == self.bottom and self.left == self.right

    def contains(self, row: int, col: int) -> bool:
        return self.top <= row <= self.bottom and self.left <= col <= self.right

    def overlaps(self, other: "CellRange") -> bool:
        return not (
            other.left > self.right
            or other.right < self.left
            or other.top > self.bottom
            or other.bottom < self.top
        )

    def cells(self) -> Iterator[tuple[int, int]]:
        for r in range(self.top, self.bottom + 1):
            for c in range(self.left, self.right + 1):
                yield r, c

    def __str__(self) -> str:
        return render_range(self)


def parse_range(text: str) -> CellRange:
    """Parse ``"A2:D5"`` or a bare address into a :class:`CellRange`."""
    if not isinstance(text, str):
        raise A1ParseError(f"range must be text, got {type(text).__name__}")
    parts = text.strip().split(":")
    if len(parts) == 1:
        a = parse_a1(parts[0])
        return CellRange(a.row, a.col, a.row, a.col)
    if len(parts) != 2:
        raise A1ParseError(f"malformed range {text!r}")
    a, b = parse_a1(parts[0]), parse_a1(parts[1])
    return CellRange(min(a.row, b.row), min(a.col, b.col), max(a.row, b.row), max(a.col, b.col))


def render_range(rng: CellRange) -> str:
    start = render_a1(CellAddress(rng.top, rng.left))
    if rng.is_cell:
        return start
    return f"{start}:{render_a1(CellAddress(rng.bottom, rng.right))}"


@dataclass(frozen=True, slots=True)
class StyleAttrs:
    fill_color: str | None = None
    bold: bool = False
    borders: frozenset[str] = frozenset()

    def __post_init__(self):
        bad = set(self.borders) - set(SIDES)
        if bad:
            raise ValueError(f"unknown border sides {sorted(bad)}")
        if not isinstance(self.borders, frozenset):
            object.__setattr__(self, "borders", frozenset(self.borders))

    @property
    def is_plain(self) -> bool:
        return self.fill_color is None and not self.bold and not self.borders


PLAIN = StyleAttrs()


@dataclass(frozen=True, slots=True)
class Cell:
    value: str = ""
    nfs: str | None = None
    style: StyleAttrs = PLAIN
    merge: CellRange | None = None

    @property
    def is_empty(self) -> bool:
        return self.value == ""

    @property
    def is_blank(self) -> bool:
        """True when the cell carries nothing at all: no value, format, style or merge."""
        return self.value == "" and self.nfs is None and self.style.is_plain and self.merge is None


EMPTY = Cell()


class Sheet:
    """Immutable dense ``m x n`` grid of :class:`Cell`.

    Construction does not trim; trimming of trailing empty lines happens in
    the ingestion functions.
    """

    __slots__ = ("_rows", "_name", "_m", "_n")

    def __init__(self, rows: Sequence[Sequence[Cell]], name: str = "Sheet1"):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("a sheet needs at least one row and one column")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise ValueError("ragged rows")
        self._rows = rows
        self._name = name
        self._m = len(rows)
        self._n = n

    @classmethod
    def from_values(cls, values: Sequence[Sequence[str]], name: str = "Sheet1") -> "Sheet":
        return cls([[Cell(v) if v else EMPTY for v in row] for row in values], name)

    @property
    def name(self) -> str:
        return self._name

    @property
    def m(self) -> int:
        return self._m

    @property
    def n(self) -> int:
        return self._n

    @property
    def shape(self) -> tuple[int, int]:
        return self._m, self._n

    @property
    def rows(self) -> tuple[tuple[Cell, ...], ...]:
        return self._rows

    def cell(self, row: int, col: int) -> Cell:
        return self._rows[row][col]

    def __getitem__(self, key: tuple[int, int]) -> Cell:
        return self._rows[key[0]][key[1]]

    def values(self) -> list[list[str]]:
        return [[c.value for c in row] for row in self._rows]

    def iter_cells(self) -> Iterator[tuple[int, int, Cell]]:
        for i, row in enumerate(self._rows):
            for j, c in enumerate(row):
                yield i, j, c

    def bounds(self) -> CellRange:
        return CellRange(0, 0, self._m - 1, self._n - 1)

    def subsheet(self, rng: CellRange, name: str | None = None) -> "Sheet":
        """Cells inside ``rng``, re-indexed from A1.  Merge spans are clipped."""
        if rng.bottom >= self._m or rng.right >= self._n:
            raise ValueError(f"{rng} outside sheet bounds {self._m}x{self._n}")
        rows = []
        for r in range(rng.top, rng.bottom + 1):
            out = []
            for c in range(rng.left, rng.right + 1):
                cell = self._rows[r][c]
                if cell.merge is not None:
                    mr = cell.merge
                    clipped = CellRange(
                        mr.top - rng.top,
                        mr.left - rng.left,
                        min(mr.bottom, rng.bottom) - rng.top,
                        min(mr.right, rng.right) - rng.left,
                    )
                    cell = Cell(cell.value, cell.nfs, cell.style, clipped)
                out.append(cell)
            rows.append(out)
        return Sheet(rows, name or self._name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sheet):
            return NotImplemented
        return self._name == other._name and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._name, self._rows))

    def __repr__(self) -> str:
        return f"Sheet(name={self._name!r}, m={self._m}, n={self._n})"


def build_sheet(cells: Mapping[tuple[int, int], Cell], name: str = "Sheet1") -> Sheet:
    """Densify a sparse cell mapping and trim trailing empty rows/columns.

    Bounds come from cells holding a value; a merge span anchored on such a
    cell extends the bounds so the span stays inside the grid.
    """
    max_r = max_c = 0
    for (r, c), cell in cells.items():
        if cell.value != "":
            rr, cc = (cell.merge.bottom, cell.merge.right) if cell.merge else (r, c)
            max_r = max(max_r, r, rr)
            max_c = max(max_c, c, cc)
    m, n = max_r + 1, max_c + 1
    rows = [[EMPTY] * n for _ in range(m)]
    for (r, c), cell in cells.items():
        if r < m and c < n:
            if cell.merge is not None and (cell.merge.bottom >= m or cell.merge.right >= n):
                mr = cell.merge
                cell = Cell(cell.value, cell.nfs, cell.style,
                            CellRange(mr.top, mr.left, min(mr.bottom, m - 1), min(mr.right, n - 1)))
            rows[r][c] = cell
    return Sheet(rows, name)


def _cell_from_json(obj: object, path: str) -> tuple[CellAddress, Cell]:
    if not isinstance(obj, dict):
        raise IngestionError(f"{path}: expected an object")
    unknown = set(obj) - {"addr", "v", "nfs", "fill", "bold", "borders", "merge"}
    if unknown:
        raise IngestionError(f"{path}: unknown keys {sorted(unknown)}")
    if "addr" not in obj:
        raise IngestionError(f"{path}.addr: missing")
    try:
        addr = parse_a1(obj["addr"])
    except A1ParseError as exc:
        raise IngestionError(f"{path}.addr: {exc}") from None
    value = obj.get("v", "")
    if not isinstance(value, str):
        raise IngestionError(f"{path}.v: expected a string")
    nfs = obj.get("nfs")
    if nfs is not None and not isinstance(nfs, str):
        raise IngestionError(f"{path}.nfs: expected a string")
    fill = obj.get("fill")
    if fill is not None and not isinstance(fill, str):
        raise IngestionError(f"{path}.fill: expected a string")
    bold = obj.get("bold", False)
    if not isinstance(bold, bool):
        raise IngestionError(f"{path}.bold: expected a boolean")
    borders = obj.get("borders", [])
    if not isinstance(borders, list) or any(b not in SIDES for b in borders):
        raise IngestionError(f"{path}.borders: expected a list drawn from {list(SIDES)}")
    merge = None
    if obj.get("merge") is not None:
        try:
            merge = parse_range(obj["merge"])
        except A1ParseError as exc:
            raise IngestionError(f"{path}.merge: {exc}") from None
        if (merge.top, merge.left) != (addr.row, addr.col):
            raise IngestionError(f"{path}.merge: range must start at the cell's own address")
    style = StyleAttrs(fill, bold, frozenset(borders))
    return addr, Cell(value, nfs, PLAIN if style.is_plain else style, merge)


def sheet_from_dict(doc: object) -> Sheet:
    if not isinstance(doc, dict):
        raise IngestionError("$: expected an object")
    name = doc.get("name", "Sheet1")
    if not isinstance(name, str):
        raise IngestionError("$.name: expected a string")
    cells_in = doc.get("cells")
    if not isinstance(cells_in, list):
        raise IngestionError("$.cells: expected an array")
    cells: dict[tuple[int, int], Cell] = {}
    for i, obj in enumerate(cells_in):
        path = f"$.cells[{i}]"
        addr, cell = _cell_from_json(obj, path)
        key = (addr.row, addr.col)
        if key in cells:
            raise IngestionError(f"{path}.addr: duplicate address {render_a1(addr)}")
        cells[key] = cell
    return build_sheet(cells, name)


def ingest_json(data: bytes | str) -> Sheet:
    """Build a :class:`Sheet` from the canonical JSON format."""
    if isinstance(data, bytes):
        if data.startswith(b"\xef\xbb\xbf"):
            raise IngestionError("$: UTF-8 BOM is not allowed")
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestionError(f"$: not UTF-8 ({exc})") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise IngestionError(f"$: invalid JSON ({exc})") from None
    return sheet_from_dict(doc)


def sheet_to_dict(sheet: Sheet) -> dict:
    cells = []
    for r, c, cell in sheet.iter_cells():
        if cell.is_blank:
            continue
        obj: dict = {"addr": render_a1(CellAddress(r, c)), "v": cell.value}
        if cell.nfs is not None:
            obj["nfs"] = cell.nfs
        if cell.style.fill_color is not None:
            obj["fill"] = cell.style.fill_color
        if cell.style.bold:
            obj["bold"] = True
        if cell.style.borders:
            obj["borders"] = [s for s in SIDES if s in cell.style.borders]
        if cell.merge is not None:
            obj["merge"] = render_range(cell.merge)
        cells.append(obj)
    return {"name": sheet.name, "cells": cells}


def dump_json(sheet: Sheet, indent: int | None = None) -> str:
    return json.dumps(sheet_to_dict(sheet), ensure_ascii=False, indent=indent)

