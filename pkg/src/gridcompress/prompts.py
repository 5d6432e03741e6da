"""Prompt templates loaded from editable text files.

Each template is an instruction block followed by one bracketed input slot.
Rendering substitutes the slot and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ConfigError

TEMPLATE_IDS = ("detect", "detect_vanilla", "cos_stage1", "cos_stage2")

_SLOTS = {
    "detect": "[Encoded Spreadsheet]",
    "detect_vanilla": "[Encoded Spreadsheet]",
    "cos_stage1": "[Encoded Spreadsheet with compression]",
    "cos_stage2": "[Encoded Spreadsheet without compression]",
}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    instruction: str
    slot: str

    def render(self, payload: str) -> str:
        return self.instruction.replace(self.slot, payload, 1)


def _check(tid: str, text: str) -> PromptTemplate:
    slot = _SLOTS[tid]
    if text.count(slot) != 1:
        raise ConfigError(f"template {tid!r} must contain the slot {slot} exactly once")
    return PromptTemplate(tid, text, slot)


@lru_cache(maxsize=None)
def _bundled(tid: str) -> PromptTemplate:
    text = resources.files("gridcompress").joinpath("prompts", f"{tid}.txt").read_text(encoding="utf-8")
    return _check(tid, text)


def load_template(tid: str, directory: str | Path | None = None) -> PromptTemplate:
    """Load template ``tid``; ``directory`` overrides the bundled copies."""
    if tid not in _SLOTS:
        raise ConfigError(f"unknown template {tid!r}; expected one of {', '.join(TEMPLATE_IDS)}")
    if directory is None:
        return _bundled(tid)
    path = Path(directory) / f"{tid}.txt"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read template {path}: {exc}") from None
    return _check(tid, text)


def with_question(encoded: str, question: str) -> str:
    """Slot payload for the QA stages: the encoding, then the question."""
    return f"{encoded.rstrip(chr(10))}\n\nQUESTION: {question}"
