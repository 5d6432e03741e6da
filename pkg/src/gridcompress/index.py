"""Lossless value -> ranges dictionary for a sheet, and its inverse."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrityError
from .grid import EMPTY, Cell, CellRange, Sheet, parse_range, render_range

TUPLE_SEPARATORS = {"detection": "\n", "qa": ", "}


@dataclass(frozen=True)
class ValueIndex:
    """Ordered mapping value -> ranges, plus the source grid bounds.

    Entry order is the first occurrence of each value in a row-major scan.
    """

    entries: dict[str, list[CellRange]]
    bounds: tuple[int, int]
    first_seen: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps(
            {
                "bounds": list(self.bounds),
                "entries": {v: [render_range(r) for r in rs] for v, rs in self.entries.items()},
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> "ValueIndex":
        doc = json.loads(text)
        entries = {v: [parse_range(r) for r in rs] for v, rs in doc["entries"].items()}
        m, n = doc["bounds"]
        return cls(entries, (int(m), int(n)))


def encode_values(values: list[list[str]]) -> tuple[np.ndarray, list[str]]:
    """Integer codes for a value grid; 0 is the empty string."""
    lookup: dict[str, int] = {"": 0}
    m, n = len(values), len(values[0])
    codes = np.zeros((m, n), dtype=np.int32)
    for i, row in enumerate(values):
        for j, v in enumerate(row):
            if v:
                code = lookup.get(v)
                if code is None:
                    code = lookup[v] = len(lookup)
                codes[i, j] = code
    names = [""] * len(lookup)
    for v, code in lookup.items():
        names[code] = v
    return codes, names


def cover_ranges(codes: np.ndarray) -> list[tuple[int, CellRange]]:
    rects = _kernels.greedy_rect_cover(np.ascontiguousarray(codes, dtype=np.int32))
    return [(int(v), CellRange(int(t), int(l), int(b), int(r))) for v, t, l, b, r in rects]


def index_values(values: list[list[str]]) -> ValueIndex:
    codes, names = encode_values(values)
    entries: dict[str, list[CellRange]] = {}
    first: dict[str, tuple[int, int]] = {}
    for code, rng in cover_ranges(codes):
        v = names[code]
        if v not in entries:
            entries[v] = []
            first[v] = (rng.top, rng.left)
        entries[v].append(rng)
    return ValueIndex(entries, (len(values), len(values[0])), first)


def invert(sheet: Sheet) -> ValueIndex:
    """Group non-empty cells by exact value and cover each group with rectangles.

    Styles, number formats and merges are not part of the index.
    """
    return index_values(sheet.values())


def restore(index: ValueIndex, name: str = "Sheet1") -> Sheet:
    m, n = index.bounds
    if m < 1 or n < 1:
        raise IntegrityError(f"invalid bounds {index.bounds}")
    grid: list[list[Cell]] = [[EMPTY] * n for _ in range(m)]
    owner = np.zeros((m, n), dtype=np.bool_)
    for value, ranges in index.entries.items():
        if value == "":
            raise IntegrityError("index has an entry for the empty string")
        cell = Cell(value)
        for rng in ranges:
            if rng.bottom >= m or rng.right >= n:
                raise IntegrityError(f"{render_range(rng)} for {value!r} lies outside {m}x{n}")
            block = owner[rng.top:rng.bottom + 1, rng.left:rng.right + 1]
            if block.any():
                raise IntegrityError(f"{render_range(rng)} for {value!r} overlaps another range")
            block[...] = True
            for r in range(rng.top, rng.bottom + 1):
                row = grid[r]
                for c in range(rng.left, rng.right + 1):
                    row[c] = cell
    return Sheet(grid, name)


def _first_cell(index: ValueIndex, value: str) -> tuple[int, int]:
    if value in index.first_seen:
        return index.first_seen[value]
    return min((r.top, r.left) for r in index.entries[value])


def index_items(index: ValueIndex) -> list[tuple[tuple[int, int], str, list[CellRange]]]:
    items = [(_first_cell(index, v), v, sorted(rs, key=lambda r: (r.top, r.left))) for v, rs in index.entries.items()]
    items.sort(key=lambda it: it[0])
    return items


def render_tuple(value: str, ranges: list[CellRange]) -> str:
    return f"({value}|{','.join(render_range(r) for r in ranges)})"


def render_index(index: ValueIndex, style: str = "detection") -> str:
    """``(value|range,...)`` tuples in first-occurrence order.

    ``detection`` puts one tuple per line; ``qa`` keeps a single line with
    tuples separated by ``", "``.
    """
    try:
        sep = TUPLE_SEPARATORS[style]
    except KeyError:
        raise ValueError(f"unknown render style {style!r}") from None
    return sep.join(render_tuple(v, rs) for _, v, rs in index_items(index))
