"""Deterministic synthetic spreadsheets for tests, benchmarks and reports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .grid import Cell, CellRange, StyleAttrs, Sheet, EMPTY, ingest_json

_PRODUCTS = ["Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel", "India",
             "Juliet", "Kilo", "Lima", "Mike", "November", "Oscar", "Papa"]
_REGIONS = ["North", "South", "East", "West"]
_CHANNELS = ["Direct", "Partner", "Online"]
_OWNERS = ["Avery", "Blake", "Casey", "Devon", "Emery", "Finley", "Harper", "Jordan", "Kendall", "Logan",
           "Morgan", "Parker", "Quinn", "Riley", "Rowan", "Sawyer", "Skyler", "Taylor"]
_SEGMENTS = ["Consumer", "Enterprise", "Public Sector", "Education", "Healthcare", "Retail",
             "Energy", "Logistics", "Media", "Finance", "Travel", "Telecom"]

HEADER = StyleAttrs(fill_color="FFD9E1F2", bold=True, borders=frozenset({"top", "bottom"}))
BOLD = StyleAttrs(bold=True)


def _int_text(x: int) -> str:
    return f"{x:,}"


def lookalike_sheet(seed: int = 7, seg_every: int = 64, values=(0, 0, 0, 0, 100, 500), scale: int = 4) -> Sheet:
    """A 576 x 23 two-table report: long numeric runs under hierarchical headers.

    Each table has a title, a merged year row over a quarter row and
    segment heading rows.  Five descriptor columns (product code, region,
    channel, account id, owner) precede three six-column year groups.
    Most rows are homogeneous numeric filler.
    """
    rng = np.random.RandomState(seed)
    m, n = 576, 23
    grid = [[EMPTY] * n for _ in range(m)]

    def put(r, c, v, **kw):
        grid[r][c] = Cell(v, **kw)

    quarters = ["Q1", "Q2", "Q3", "Q4", "H1", "H2"]
    descriptors = ["Product", "Region", "Channel", "Account", "Owner"]
    first = len(descriptors)

    def table(title_row: int, last_row: int, years: list[str], title: str):
        put(title_row, 0, title, style=BOLD)
        h1, h2 = title_row + 2, title_row + 3
        for j, label in enumerate(descriptors):
            put(h1, j, label, style=HEADER, merge=CellRange(h1, j, h2, j))
        for g, year in enumerate(years):
            c0 = first + 6 * g
            put(h1, c0, year, style=HEADER, merge=CellRange(h1, c0, h1, c0 + 5))
            for q, label in enumerate(quarters):
                put(h2, c0 + q, label, style=HEADER)
        r = h2 + 1
        seg = 0
        while r <= last_row:
            if (r - h2 - 1) % seg_every == 0:
                put(r, 0, f"Segment: {_SEGMENTS[seg % len(_SEGMENTS)]}", style=BOLD)
                seg += 1
                r += 1
                continue
            put(r, 0, f"{_PRODUCTS[rng.randint(len(_PRODUCTS))]} {rng.randint(100, 1000)}")
            put(r, 1, _REGIONS[((r - h2) // 6) % len(_REGIONS)])
            put(r, 2, _CHANNELS[rng.randint(len(_CHANNELS))])
            put(r, 3, f"AC-{rng.randint(10000, 100000)}")
            put(r, 4, _OWNERS[rng.randint(len(_OWNERS))])
            for g in range(len(years)):
                c0 = first + 6 * g
                base = rng.randint(0, scale)
                qs = [0 if base == 0 else int(rng.choice(values) * base) for _ in range(4)]
                for q, v in enumerate(qs + [qs[0] + qs[1], qs[2] + qs[3]]):
                    put(r, c0 + q, _int_text(v), nfs="#,##0")
            r += 1

    table(0, 292, ["FY2021", "FY2022", "FY2023"], "Table 4: Sell-in billed revenue by product")
    table(296, m - 2, ["FY2018", "FY2019", "FY2020"], "Table 5: Sell-in billed revenue, prior years")
    put(m - 1, 0, "Source: internal sales ledger; figures in USD thousands.")
    return Sheet(grid, "Sales")


def load_lookalike() -> Sheet:
    """The bundled copy of :func:`lookalike_sheet`."""
    data = resources.files("gridcompress").joinpath("data", "lookalike_576x23.json").read_bytes()
    return ingest_json(data)


@dataclass(frozen=True)
class LabeledSheet:
    sheet: Sheet
    tables: tuple[CellRange, ...]
    filler_fraction: float

    def boundary_rows(self) -> set[int]:
        return {x for t in self.tables for x in (t.top, t.bottom)}

    def boundary_cols(self) -> set[int]:
        return {x for t in self.tables for x in (t.left, t.right)}


def _place(rng, occupied: np.ndarray, h: int, w: int) -> tuple[int, int] | None:
    m, n = occupied.shape
    for _ in range(200):
        if m - h < 0 or n - w < 0:
            return None
        t = rng.randint(0, m - h + 1)
        l = rng.randint(0, n - w + 1)
        # one free line of margin around every table
        if not occupied[max(0, t - 1):t + h + 1, max(0, l - 1):l + w + 1].any():
            return t, l
    return None


def boundary_sheet(seed: int, tall: bool = False) -> LabeledSheet:
    """A sheet holding 1-3 tables whose edges are type or format discontinuities.

    Tables have a bold, bordered text header row, an optional text label
    column and a dense numeric body; every table is surrounded by empty
    cells.  With ``tall`` the tables are stacked and their bodies dominate
    the sheet, so most of it is homogeneous filler.
    """
    rng = np.random.RandomState(seed)
    if tall:
        n = int(rng.randint(6, 16))
        count = int(rng.randint(1, 3))
        heights = [int(rng.randint(60, 160)) for _ in range(count)]
        m = sum(heights) + 2 * count + 1
    else:
        m, n = int(rng.randint(12, 60)), int(rng.randint(6, 25))
        count = int(rng.randint(1, 4))
    grid = [[EMPTY] * n for _ in range(m)]
    occupied = np.zeros((m, n), dtype=np.bool_)
    tables = []
    body_cells = 0
    row_cursor = 1
    for t_idx in range(count):
        if tall:
            h = heights[t_idx]
            w = int(rng.randint(3, n + 1))
            top, left = row_cursor, int(rng.randint(0, n - w + 1))
            row_cursor += h + 2
        else:
            h, w = int(rng.randint(3, max(4, m // 2))), int(rng.randint(2, max(3, n // 2)))
            spot = _place(rng, occupied, h, w)
            if spot is None:
                continue
            top, left = spot
        occupied[top:top + h, left:left + w] = True
        labels = w >= 3 and rng.rand() < 0.5
        kind = rng.choice(["int", "float", "pct"])
        for j in range(w):
            grid[top][left + j] = Cell(f"Col {j + 1}", style=HEADER)
        for i in range(1, h):
            for j in range(w):
                if labels and j == 0:
                    v = f"Item {i}"
                elif kind == "int":
                    v = _int_text(int(rng.randint(0, 100000)))
                elif kind == "float":
                    v = f"{rng.uniform(0, 1000):.2f}"
                else:
                    v = f"{rng.uniform(0, 100):.1f}%"
                grid[top + i][left + j] = Cell(v)
        body_cells += (h - 1) * w
        tables.append(CellRange(top, left, top + h - 1, left + w - 1))
    if not tables:
        return boundary_sheet(seed + 10_000, tall)
    if tall:
        filler = sum(t.height - 1 for t in tables) / m
    else:
        filler = body_cells / (m * n)
    return LabeledSheet(Sheet(grid, f"gen{seed}"), tuple(tables), filler)


def random_value_sheet(rng: np.random.RandomState, m: int, n: int, dup_rate: float, empty_rate: float) -> Sheet:
    """Random values with controllable duplication and emptiness.

    Duplicates copy the left or upper neighbour (building runs) or draw
    from a small pool; unique values mix digits, letters, punctuation and
    non-ASCII text.
    """
    pool = ["x", "0", "N/A", "Total", "1,000", " ", "é", "A|B", "(x)", "2024-02-14"]
    vals = [[""] * n for _ in range(m)]
    counter = 0
    for i in range(m):
        for j in range(n):
            u = rng.rand()
            if u < empty_rate:
                continue
            if rng.rand() < dup_rate:
                choice = rng.randint(3)
                if choice == 0 and j > 0 and vals[i][j - 1]:
                    vals[i][j] = vals[i][j - 1]
                elif choice == 1 and i > 0 and vals[i - 1][j]:
                    vals[i][j] = vals[i - 1][j]
                else:
                    vals[i][j] = pool[rng.randint(len(pool))]
            else:
                counter += 1
                vals[i][j] = f"v{counter}-{rng.randint(1_000_000)}" + ("ü" if counter % 7 == 0 else "")
    return Sheet.from_values(vals)


def write_lookalike(path) -> None:
    from .grid import sheet_to_dict

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sheet_to_dict(lookalike_sheet()), fh, ensure_ascii=False, separators=(",", ":"))
