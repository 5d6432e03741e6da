"""Structural anchors: heterogeneous rows/columns and the skeleton they keep.

The chain is: per-line profiles -> anchor lines (lines that differ from a
neighbour) -> candidate table boundaries from anchor pairs -> heuristic
filtering -> pairwise overlap resolution.  Anchors plus a ``k``-line
neighbourhood are kept; everything else is dropped and the survivors are
re-indexed contiguously, with a :class:`CoordinateMap` to translate back.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import MappingError
from .formats import DataType, TypeRules, recognize_type
from .grid import Cell, CellRange, Sheet

log = logging.getLogger(__name__)

EMPTY, NUMERIC, TEXT = 0, 1, 2

# everything the recognizer types except Email counts as numeric content
_NUMERIC_TYPES = frozenset(DataType) - {DataType.OTHERS, DataType.EMAIL}
_HEADERISH_TYPES = frozenset({DataType.OTHERS, DataType.EMAIL, DataType.YEAR, DataType.DATE})

MAX_CANDIDATES = 20_000_000


@dataclass(frozen=True)
class AnchorConfig:
    k: int = 4
    theta: float = 0.3  # heterogeneity threshold on profile fraction deltas
    delta: float = 0.1  # minimum non-empty fraction inside a candidate
    eta: float = 0.5  # minimum header-like fraction of a top row / left column
    closure: float = 0.5  # max non-empty fraction of the line just outside a candidate edge
    source: Literal["both", "lines", "candidates"] = "both"

    def __post_init__(self):
        for name in ("theta", "delta", "eta", "closure"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.source not in ("both", "lines", "candidates"):
            raise ValueError(f"unknown anchor source {self.source!r}")


@dataclass(frozen=True)
class RowColProfile:
    axis: Literal["row", "col"]
    index: int
    frac_empty: float
    frac_numeric: float
    frac_text: float
    border_count: int
    fill_signature: tuple[tuple[str, int], ...]
    merge_spans: int
    bold_count: int
    kinds: tuple[int, ...] = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class AnchorSet:
    rows: tuple[int, ...]
    cols: tuple[int, ...]

    @classmethod
    def of(cls, rows: Iterable[int], cols: Iterable[int]) -> "AnchorSet":
        return cls(tuple(sorted(set(rows))), tuple(sorted(set(cols))))


@dataclass(frozen=True)
class CandidateBoundary:
    range: CellRange
    header_likeness: float = 0.0
    interior_density: float = 0.0


@dataclass(frozen=True)
class CoordinateMap:
    kept_rows: tuple[int, ...]
    kept_cols: tuple[int, ...]

    def __post_init__(self):
        for name in ("kept_rows", "kept_cols"):
            seq = getattr(self, name)
            if not seq or any(b <= a for a, b in zip(seq, seq[1:])) or seq[0] < 0:
                raise ValueError(f"{name} must be a non-empty strictly increasing sequence")

    @classmethod
    def identity(cls, m: int, n: int) -> "CoordinateMap":
        return cls(tuple(range(m)), tuple(range(n)))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.kept_rows), len(self.kept_cols)

    @property
    def is_identity(self) -> bool:
        return self.kept_rows[-1] == len(self.kept_rows) - 1 and self.kept_cols[-1] == len(self.kept_cols) - 1


@dataclass(frozen=True)
class MappedRange:
    range: CellRange
    noncontiguous: bool


def cell_kinds(sheet: Sheet, rules: TypeRules | None = None) -> np.ndarray:
    kinds = np.zeros(sheet.shape, dtype=np.int8)
    for i, row in enumerate(sheet.rows):
        for j, cell in enumerate(row):
            if cell.value:
                kinds[i, j] = NUMERIC if recognize_type(cell.value, rules) in _NUMERIC_TYPES else TEXT
    return kinds


def headerish_mask(sheet: Sheet, rules: TypeRules | None = None) -> np.ndarray:
    """Cells that look like header content: text, years or dates."""
    mask = np.zeros(sheet.shape, dtype=np.bool_)
    for i, row in enumerate(sheet.rows):
        for j, cell in enumerate(row):
            if cell.value:
                mask[i, j] = recognize_type(cell.value, rules) in _HEADERISH_TYPES
    return mask


def _line_profile(axis, index, cells: Sequence[Cell], kinds: np.ndarray, merges: int) -> RowColProfile:
    total = len(cells)
    n_num = int(np.count_nonzero(kinds == NUMERIC))
    n_text = int(np.count_nonzero(kinds == TEXT))
    fills = Counter(c.style.fill_color for c in cells if c.style.fill_color is not None)
    return RowColProfile(
        axis=axis,
        index=index,
        frac_empty=(total - n_num - n_text) / total,
        frac_numeric=n_num / total,
        frac_text=n_text / total,
        border_count=sum(len(c.style.borders) for c in cells),
        fill_signature=tuple(sorted(fills.items())),
        merge_spans=merges,
        bold_count=sum(1 for c in cells if c.style.bold),
        kinds=tuple(int(k) for k in kinds),
    )


def profile_lines(sheet: Sheet, rules: TypeRules | None = None) -> list[RowColProfile]:
    """One profile per row (in order) followed by one per column."""
    kinds = cell_kinds(sheet, rules)
    merges = [c.merge for _, _, c in sheet.iter_cells() if c.merge is not None]
    row_merges = np.zeros(sheet.m, dtype=np.int64)
    col_merges = np.zeros(sheet.n, dtype=np.int64)
    for mr in merges:
        row_merges[mr.top:mr.bottom + 1] += 1
        col_merges[mr.left:mr.right + 1] += 1
    out = [_line_profile("row", i, sheet.rows[i], kinds[i], int(row_merges[i])) for i in range(sheet.m)]
    columns = list(zip(*sheet.rows))
    out += [_line_profile("col", j, columns[j], kinds[:, j], int(col_merges[j])) for j in range(sheet.n)]
    return out


def kind_discrepancy(a: RowColProfile, b: RowColProfile) -> float:
    """Share of occupied positions whose content kind differs between two lines."""
    ka = np.asarray(a.kinds, dtype=np.int8)
    kb = np.asarray(b.kinds, dtype=np.int8)
    if ka.size == 0 or ka.size != kb.size:
        return 0.0
    occupied = (ka != EMPTY) | (kb != EMPTY)
    denom = int(np.count_nonzero(occupied))
    if denom == 0:
        return 0.0
    return int(np.count_nonzero(ka != kb)) / denom


def segment_discrepancy(a: RowColProfile, b: RowColProfile, min_width: int = 2) -> float:
    """Worst kind discrepancy over runs of positions occupied in either line.

    Catches a narrow table ending beside a wider one, where the change is
    too small a share of the whole line to register.  Runs shorter than
    ``min_width`` are ignored so isolated cells do not trigger it.
    """
    ka = np.asarray(a.kinds, dtype=np.int8)
    kb = np.asarray(b.kinds, dtype=np.int8)
    if ka.size == 0 or ka.size != kb.size:
        return 0.0
    occupied = np.concatenate(([False], (ka != EMPTY) | (kb != EMPTY), [False]))
    edges = np.flatnonzero(occupied[1:] != occupied[:-1])
    worst = 0.0
    for start, stop in zip(edges[::2], edges[1::2]):
        if stop - start >= min_width:
            worst = max(worst, int(np.count_nonzero(ka[start:stop] != kb[start:stop])) / (stop - start))
    return worst


def heterogeneous(a: RowColProfile, b: RowColProfile, theta: float = 0.3) -> bool:
    return (
        abs(a.frac_empty - b.frac_empty) > theta
        or abs(a.frac_numeric - b.frac_numeric) > theta
        or abs(a.frac_text - b.frac_text) > theta
        or kind_discrepancy(a, b) > theta
        or segment_discrepancy(a, b) > theta
        or a.border_count != b.border_count
        or a.fill_signature != b.fill_signature
        or a.merge_spans != b.merge_spans
        or a.bold_count != b.bold_count
    )


def _axis_anchors(profiles: list[RowColProfile], theta: float) -> list[int]:
    if not profiles:
        return []
    out = {profiles[0].index, profiles[-1].index}
    for prev, cur in zip(profiles, profiles[1:]):
        if heterogeneous(prev, cur, theta):
            out.add(prev.index)
            out.add(cur.index)
    return sorted(out)


def detect_anchor_lines(profiles: Iterable[RowColProfile], theta: float = 0.3) -> AnchorSet:
    """A line is an anchor if it differs from either neighbour; first and last lines always are."""
    profiles = list(profiles)
    rows = sorted((p for p in profiles if p.axis == "row"), key=lambda p: p.index)
    cols = sorted((p for p in profiles if p.axis == "col"), key=lambda p: p.index)
    return AnchorSet.of(_axis_anchors(rows, theta), _axis_anchors(cols, theta))


def _pairs(idx: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(idx, dtype=np.int64)
    lo, hi = np.triu_indices(len(a), k=1)
    return a[lo], a[hi]


def _candidate_arrays(anchors: AnchorSet) -> tuple[np.ndarray, ...]:
    tops, bottoms = _pairs(anchors.rows)
    lefts, rights = _pairs(anchors.cols)
    nr, nc = len(tops), len(lefts)
    if nr * nc > MAX_CANDIDATES:
        log.warning("%d candidate boundaries exceed the enumeration limit; skipping", nr * nc)
        nr = nc = 0
        tops = bottoms = lefts = rights = np.zeros(0, dtype=np.int64)
    return (np.repeat(tops, nc), np.tile(lefts, nr), np.repeat(bottoms, nc), np.tile(rights, nr))


def propose_candidates(anchors: AnchorSet) -> list[CandidateBoundary]:
    """Every rectangle whose top < bottom come from anchor rows and left < right from anchor columns."""
    t, l, b, r = _candidate_arrays(anchors)
    return [CandidateBoundary(CellRange(int(t[i]), int(l[i]), int(b[i]), int(r[i]))) for i in range(len(t))]


class _Counts:
    """Prefix sums answering rectangle and line-segment counts in O(1)."""

    def __init__(self, mask: np.ndarray):
        m, n = mask.shape
        x = mask.astype(np.int64)
        self.p = np.zeros((m + 1, n + 1), dtype=np.int64)
        self.p[1:, 1:] = x.cumsum(0).cumsum(1)

    def rect(self, t, l, b, r):
        p = self.p
        return p[b + 1, r + 1] - p[t, r + 1] - p[b + 1, l] + p[t, l]


def _score(sheet: Sheet, t, l, b, r, cfg: AnchorConfig, rules=None):
    """Vectorised filter predicates; returns (keep mask, header likeness, density)."""
    m, n = sheet.shape
    occ = _Counts(cell_kinds(sheet, rules) != EMPTY)
    hdr = _Counts(headerish_mask(sheet, rules))
    h = b - t + 1
    w = r - l + 1
    count = occ.rect(t, l, b, r)
    density = count / (h * w)

    top_occ, bot_occ = occ.rect(t, l, t, r), occ.rect(b, l, b, r)
    left_occ, right_occ = occ.rect(t, l, b, l), occ.rect(t, r, b, r)
    top_hdr = hdr.rect(t, l, t, r) / np.maximum(top_occ, 1)
    left_hdr = hdr.rect(t, l, b, l) / np.maximum(left_occ, 1)
    header = np.maximum(top_hdr, left_hdr)

    keep = (h >= 2) & (w >= 2)
    keep &= density >= cfg.delta
    keep &= (top_occ > 0) & (bot_occ > 0) & (left_occ > 0) & (right_occ > 0)
    keep &= (top_hdr >= cfg.eta) | (left_hdr >= cfg.eta)

    # the line just outside each edge must not continue the table
    above = np.where(t > 0, occ.rect(np.maximum(t - 1, 0), l, np.maximum(t - 1, 0), r), 0) / w
    below = np.where(b < m - 1, occ.rect(np.minimum(b + 1, m - 1), l, np.minimum(b + 1, m - 1), r), 0) / w
    before = np.where(l > 0, occ.rect(t, np.maximum(l - 1, 0), b, np.maximum(l - 1, 0)), 0) / h
    after = np.where(r < n - 1, occ.rect(t, np.minimum(r + 1, n - 1), b, np.minimum(r + 1, n - 1)), 0) / h
    keep &= (above <= cfg.closure) & (below <= cfg.closure) & (before <= cfg.closure) & (after <= cfg.closure)
    return keep, header, density


def filter_candidates(sheet: Sheet, candidates: Sequence[CandidateBoundary],
                      config: AnchorConfig = AnchorConfig(), rules: TypeRules | None = None) -> list[CandidateBoundary]:
    """Drop candidates that cannot be tables.

    Rejected: smaller than 2x2; non-empty fraction below ``delta``; any fully
    empty edge; neither the top row nor the left column header-like (share
    of text/year/date cells below ``eta``); or a neighbouring line outside
    an edge more than ``closure`` full, meaning the table is cut short.
    Survivors carry their top-row header likeness and density.
    """
    if not candidates:
        return []
    t = np.array([c.range.top for c in candidates], dtype=np.int64)
    l = np.array([c.range.left for c in candidates], dtype=np.int64)
    b = np.array([c.range.bottom for c in candidates], dtype=np.int64)
    r = np.array([c.range.right for c in candidates], dtype=np.int64)
    if b.max() >= sheet.m or r.max() >= sheet.n:
        raise ValueError("candidate outside sheet bounds")
    keep, header, density = _score(sheet, t, l, b, r, config, rules)
    return [replace(candidates[i], header_likeness=float(header[i]), interior_density=float(density[i]))
            for i in np.flatnonzero(keep)]


def _rank(c: CandidateBoundary):
    rg = c.range
    # raw scores last so candidates that only differ below the rounding still order totally
    return (-round(c.header_likeness, 9), rg.area, rg.top, rg.left, rg.bottom, rg.right,
            -c.header_likeness, -c.interior_density)


def resolve_overlaps(candidates: Iterable[CandidateBoundary]) -> list[CandidateBoundary]:
    """Settle overlapping pairs until none overlap.

    Between two overlapping candidates the one with the more header-like
    top row wins; on a tie the smaller one wins.  That preference is a total
    order, so candidates are accepted best-first whenever they do not
    overlap anything already accepted.  Output is in row-major order.
    """
    accepted: list[CandidateBoundary] = []
    for cand in sorted(candidates, key=_rank):
        if not any(cand.range.overlaps(a.range) for a in accepted):
            accepted.append(cand)
    return sorted(accepted, key=lambda c: (c.range.top, c.range.left, c.range.bottom, c.range.right))


def candidate_boundaries(sheet: Sheet, config: AnchorConfig = AnchorConfig(),
                         rules: TypeRules | None = None) -> list[CandidateBoundary]:
    lines = detect_anchor_lines(profile_lines(sheet, rules), config.theta)
    t, l, b, r = _candidate_arrays(lines)
    if len(t) == 0:
        return []
    keep, header, density = _score(sheet, t, l, b, r, config, rules)
    survivors = [CandidateBoundary(CellRange(int(t[i]), int(l[i]), int(b[i]), int(r[i])),
                                   float(header[i]), float(density[i]))
                 for i in np.flatnonzero(keep)]
    return resolve_overlaps(survivors)


def derive_anchors(sheet: Sheet, config: AnchorConfig = AnchorConfig(), rules: TypeRules | None = None) -> AnchorSet:
    """Anchor lines for extraction.

    ``lines`` uses the discrepancy lines; ``candidates`` uses the edges of the
    candidate boundaries that survive filtering and overlap resolution;
    ``both`` is their union, which equals the discrepancy lines because every
    candidate edge is one.
    """
    lines = detect_anchor_lines(profile_lines(sheet, rules), config.theta)
    if config.source in ("both", "lines"):
        return lines
    boxes = candidate_boundaries(sheet, config, rules)
    if not boxes:
        log.warning("no candidate boundary survived; falling back to discrepancy lines")
        return lines
    return AnchorSet.of(
        [x for c in boxes for x in (c.range.top, c.range.bottom)],
        [x for c in boxes for x in (c.range.left, c.range.right)],
    )


def _neighbourhood(anchors: Sequence[int], k: int, size: int) -> np.ndarray:
    keep = np.zeros(size, dtype=np.bool_)
    for p in anchors:
        if not 0 <= p < size:
            raise ValueError(f"anchor {p} outside 0..{size - 1}")
        keep[max(0, p - k):min(size, p + k + 1)] = True
    return np.flatnonzero(keep)


def extract_skeleton(sheet: Sheet, anchors: AnchorSet, k: int = 4) -> tuple[Sheet, CoordinateMap]:
    """Keep lines within ``k`` of an anchor and re-index them contiguously."""
    if k < 0:
        raise ValueError("k must be >= 0")
    rows = _neighbourhood(anchors.rows, k, sheet.m)
    cols = _neighbourhood(anchors.cols, k, sheet.n)
    if rows.size == 0 or cols.size == 0:
        raise ValueError("anchor set keeps no rows or no columns")
    out = []
    for r in rows:
        src = sheet.rows[r]
        line = []
        for c in cols:
            cell = src[c]
            if cell.merge is not None:
                mr = cell.merge
                nb = int(np.searchsorted(rows, mr.bottom, side="right")) - 1
                nr = int(np.searchsorted(cols, mr.right, side="right")) - 1
                nt = int(np.searchsorted(rows, r))
                nl = int(np.searchsorted(cols, c))
                cell = Cell(cell.value, cell.nfs, cell.style, CellRange(nt, nl, nb, nr))
            line.append(cell)
        out.append(line)
    cmap = CoordinateMap(tuple(int(x) for x in rows), tuple(int(x) for x in cols))
    return Sheet(out, sheet.name), cmap


def map_range_to_original(rng: CellRange, cmap: CoordinateMap) -> MappedRange:
    """Translate an extracted-space range back to the source sheet.

    When the range spans a gap of dropped lines the rectangular hull is
    returned with ``noncontiguous`` set.
    """
    mr, mc = cmap.shape
    if rng.bottom >= mr or rng.right >= mc:
        raise MappingError(f"{rng} lies outside the extracted {mr}x{mc} grid")
    kr, kc = cmap.kept_rows, cmap.kept_cols
    out = CellRange(kr[rng.top], kc[rng.left], kr[rng.bottom], kc[rng.right])
    gap = (out.bottom - out.top != rng.bottom - rng.top) or (out.right - out.left != rng.right - rng.left)
    return MappedRange(out, gap)


def map_range_to_extracted(rng: CellRange, cmap: CoordinateMap) -> CellRange:
    """Forward mapping for a range whose corner lines were all kept."""
    try:
        return CellRange(cmap.kept_rows.index(rng.top), cmap.kept_cols.index(rng.left),
                         cmap.kept_rows.index(rng.bottom), cmap.kept_cols.index(rng.right))
    except ValueError:
        raise MappingError(f"{rng} has a corner on a dropped line") from None
