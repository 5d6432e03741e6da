"""Compose the three compression modules into one encoder.

Module 1 is anchor-based extraction, module 2 the inverted index, module 3
format-aware aggregation.  Any subset may be enabled; extraction always
runs first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .anchors import AnchorConfig, derive_anchors, extract_skeleton
from .encoding import DEFAULT_TOKENIZER, EncodedSheet, Tokenizer, encode_vanilla, vanilla_text
from .formats import OTHERS, TypeRules, aggregate_identical, render_aggregated, typed_tuples
from .grid import Sheet, column_letters
from .index import TUPLE_SEPARATORS, invert, render_index, render_tuple

ALL_MODULES = frozenset({1, 2, 3})

# the eight combinations in report order: none, 1, 2, 3, 1&2, 1&3, 2&3, 1&2&3
MODULE_COMBINATIONS: list[frozenset[int]] = [
    frozenset(c) for size in range(4) for c in combinations(sorted(ALL_MODULES), size)
]


def parse_modules(text: str | Iterable[int]) -> frozenset[int]:
    if isinstance(text, str):
        parts = [p for p in text.replace("&", ",").split(",") if p.strip()]
        try:
            mods = frozenset(int(p) for p in parts)
        except ValueError:
            raise ValueError(f"bad module list {text!r}") from None
    else:
        mods = frozenset(int(x) for x in text)
    if not mods <= ALL_MODULES:
        raise ValueError(f"modules must be drawn from 1, 2, 3; got {sorted(mods)}")
    return mods


def modules_label(mods: Iterable[int]) -> str:
    mods = sorted(mods)
    return "Module " + "&".join(map(str, mods)) if mods else "No Modules"


@dataclass(frozen=True)
class CompressConfig:
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    rules: TypeRules | None = None
    style: str = "detection"


def _aggregated_vanilla(sheet: Sheet, rules: TypeRules | None, style: str) -> str:
    """Aggregation without the index: untyped cells stay in grid form."""
    values = sheet.values()
    areas = aggregate_identical(sheet, rules)
    typed = set()
    for a in areas:
        if a.dtype != OTHERS:
            typed.update((r, c) for r, c in a.cells if values[r][c] != "")
    tuples = typed_tuples(areas, values)
    letters = [column_letters(j) for j in range(sheet.n)]
    lines = []
    for i, row in enumerate(sheet.rows):
        parts = [f"|{letters[j]}{i + 1},{cell.value}" for j, cell in enumerate(row) if (i, j) not in typed]
        if parts:
            lines.append("".join(parts) + "\n")
    sep = TUPLE_SEPARATORS[style]
    return "".join(lines) + sep.join(render_tuple(label, rs) for _, label, rs in tuples)


def encode_compressed(sheet: Sheet, modules: Iterable[int] = ALL_MODULES, config: CompressConfig = CompressConfig(),
                      tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> EncodedSheet:
    """Encode ``sheet`` with the chosen modules.

    The coordinate map is set whenever extraction ran; addresses in the text
    then refer to the re-indexed skeleton.
    """
    mods = parse_modules(modules)
    cmap = None
    work = sheet
    if 1 in mods:
        anchors = derive_anchors(sheet, config.anchors, config.rules)
        work, cmap = extract_skeleton(sheet, anchors, config.anchors.k)
    if 2 in mods and 3 in mods:
        text = render_aggregated(aggregate_identical(work, config.rules), invert(work), config.style)
    elif 2 in mods:
        text = render_index(invert(work), config.style)
    elif 3 in mods:
        text = _aggregated_vanilla(work, config.rules, config.style)
    else:
        text = vanilla_text(work)
    return EncodedSheet(text, tokenizer(text), cmap)


def module_token_counts(sheet: Sheet, config: CompressConfig = CompressConfig(),
                        tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> dict[frozenset[int], int]:
    """Token count of every module combination (the empty set is vanilla)."""
    out = {}
    for mods in MODULE_COMBINATIONS:
        if mods:
            out[mods] = encode_compressed(sheet, mods, config, tokenizer).token_count
        else:
            out[mods] = encode_vanilla(sheet, tokenizer=tokenizer).token_count
    return out
