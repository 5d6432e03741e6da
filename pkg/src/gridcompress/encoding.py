"""Cell-per-tuple text encoding and token counting."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from .errors import ConfigError, UndefinedRatioError
from .grid import CellAddress, Sheet, column_letters

if TYPE_CHECKING:
    from .anchors import CoordinateMap

_ALNUM_RUN = re.compile(r"[^\W_]+")
_WS = re.compile(r"\s")


def default_token_estimate(text: str) -> int:
    """Deterministic stand-in for a BPE tokenizer.

    Each maximal alphanumeric run of length L costs ceil(L/4) tokens, every
    other non-whitespace character costs one, and whitespace is free.
    """
    if not text:
        return 0
    total = 0
    covered = 0
    for m in _ALNUM_RUN.finditer(text):
        total += math.ceil((m.end() - m.start()) / 4)
        covered += m.end() - m.start()
    rest = len(text) - covered - len(_WS.findall(text))
    return total + rest


@dataclass(frozen=True)
class Tokenizer:
    name: str
    count: Callable[[str], int]

    def __call__(self, text: str) -> int:
        return self.count(text)


DEFAULT_TOKENIZER = Tokenizer("default", default_token_estimate)

_TOKENIZERS: dict[str, Tokenizer] = {"default": DEFAULT_TOKENIZER}


def register_tokenizer(tok: Tokenizer) -> None:
    _TOKENIZERS[tok.name] = tok


def get_tokenizer(name: str) -> Tokenizer:
    try:
        return _TOKENIZERS[name]
    except KeyError:
        raise ConfigError(f"unknown tokenizer {name!r}; known: {sorted(_TOKENIZERS)}") from None


@dataclass(frozen=True)
class EncodedSheet:
    text: str
    token_count: int
    coord_map: "CoordinateMap | None" = None


FORMAT_TOKENS = (
    ("top", "Top Border"),
    ("bottom", "Bottom Border"),
    ("left", "Left Border"),
    ("right", "Right Border"),
)


def style_tokens(cell) -> list[str]:
    out = [label for side, label in FORMAT_TOKENS if side in cell.style.borders]
    if cell.style.fill_color is not None:
        out.append("Fill Color")
    if cell.style.bold:
        out.append("Font Bold")
    return out


def vanilla_text(sheet: Sheet, include_format: bool = False, origin: CellAddress | None = None) -> str:
    r0, c0 = (origin.row, origin.col) if origin else (0, 0)
    letters = [column_letters(c0 + j) for j in range(sheet.n)]
    lines = []
    for i, row in enumerate(sheet.rows):
        rn = r0 + i + 1
        lines.append("".join(f"|{letters[j]}{rn},{cell.value}" for j, cell in enumerate(row)) + "\n")
    text = "".join(lines)
    if include_format:
        fmt = []
        for i, row in enumerate(sheet.rows):
            rn = r0 + i + 1
            fmt.append("".join(f"|{letters[j]}{rn}," + ",".join(style_tokens(cell))
                               for j, cell in enumerate(row)) + "\n")
        text += "\n" + "".join(fmt)
    return text


def encode_vanilla(sheet: Sheet, include_format: bool = False, tokenizer: Tokenizer = DEFAULT_TOKENIZER,
                   origin: CellAddress | None = None) -> EncodedSheet:
    """Row-major ``|A1,value`` encoding, one line per sheet row.

    With ``include_format`` a blank line and a second block follow, listing
    per-cell style tokens (``Top Border``, ``Fill Color``, ``Font Bold`` ...).
    ``origin`` shifts the rendered addresses, for encoding a region of a
    larger sheet under its original coordinates.
    """
    text = vanilla_text(sheet, include_format, origin)
    return EncodedSheet(text, tokenizer(text))


def compression_ratio(n_before: int, n_after: int) -> float:
    if n_after == 0:
        raise UndefinedRatioError("compression ratio undefined for a zero-token encoding")
    if n_after < 0 or n_before < 0:
        raise ValueError("token counts must be non-negative")
    return n_before / n_after
