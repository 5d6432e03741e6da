"""Detection and QA metrics, size buckets, cost and compression reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .compress import CompressConfig, MODULE_COMBINATIONS, modules_label, module_token_counts
from .encoding import DEFAULT_TOKENIZER, Tokenizer, compression_ratio, encode_vanilla
from .errors import A1ParseError, InputError
from .grid import CellRange, Sheet, parse_range

log = logging.getLogger(__name__)

BUCKETS = ("Small", "Medium", "Large", "Huge")
# half-open upper edges: [0,4k) [4k,8k) [8k,32k) [32k,inf)
BUCKET_EDGES = (4000, 8000, 32000)


def eob0_match(pred: CellRange, gold: CellRange) -> bool:
    return (pred.top, pred.left, pred.bottom, pred.right) == (gold.top, gold.left, gold.bottom, gold.right)


@dataclass(frozen=True)
class DetectionGold:
    sheet: str
    tables: tuple[CellRange, ...]
    alt_labelings: tuple[tuple[CellRange, ...], ...] = ()

    def __post_init__(self):
        if not self.tables or any(not alt for alt in self.alt_labelings):
            raise InputError(f"{self.sheet}: every labeling needs at least one table")

    @property
    def labelings(self) -> list[tuple[CellRange, ...]]:
        return [self.tables, *self.alt_labelings]


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


@dataclass
class ScoreReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    buckets: dict[str, "ScoreReport"] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]

    def add(self, other: "ScoreReport") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    def row(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": round(self.precision, 6),
                "recall": round(self.recall, 6), "f1": round(self.f1, 6)}

    def to_dict(self) -> dict:
        out = self.row()
        if self.buckets:
            out["buckets"] = {b: r.row() for b, r in self.buckets.items()}
        return out


def _match_count(preds: Sequence[CellRange], gold: Sequence[CellRange]) -> int:
    # exact equality makes greedy one-to-one matching a multiset intersection
    key = lambda r: (r.top, r.left, r.bottom, r.right)
    return sum((Counter(map(key, preds)) & Counter(map(key, gold))).values())


def score_detection(preds: Sequence[CellRange], gold: DetectionGold) -> ScoreReport:
    """Score against every labeling and keep the one with the best F1."""
    best = None
    for labeling in gold.labelings:
        tp = _match_count(preds, labeling)
        rep = ScoreReport(tp, len(preds) - tp, len(labeling) - tp)
        if best is None or rep.f1 > best.f1:
            best = rep
    return best


def bucket_for_tokens(tokens: int) -> str:
    if tokens < 0:
        raise ValueError("token count must be non-negative")
    for name, edge in zip(BUCKETS, BUCKET_EDGES):
        if tokens < edge:
            return name
    return BUCKETS[-1]


def bucketize(sheet: Sheet, tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> str:
    return bucket_for_tokens(encode_vanilla(sheet, tokenizer=tokenizer).token_count)


def estimate_cost(token_count: float, price_per_1k: float) -> float:
    if token_count < 0 or price_per_1k < 0:
        raise ValueError("token count and price must be non-negative")
    return token_count * price_per_1k / 1000


# QA answer normalization

COMMUTATIVE = frozenset({"SUM", "AVG", "AVERAGE", "MIN", "MAX", "COUNT"})
_CALL = re.compile(r"^([A-Z][A-Z0-9.]*)\((.*)\)$")


def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _balanced(inner: str) -> bool:
    depth = 0
    for ch in inner:
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            return False
    return depth == 0


def _canon(expr: str) -> str:
    m = _CALL.match(expr)
    if m and _balanced(m.group(2)):
        name = m.group(1)
        args = [_canon(a) for a in _split_top(m.group(2))]
        if name in COMMUTATIVE:
            args.sort()
        return f"{name}({','.join(args)})"
    return expr


def normalize_answer(text: str) -> frozenset[str]:
    """Canonical form of an answer: a set of AND-joined canonical expressions."""
    text = text.strip()
    m = re.fullmatch(r"\{\[(.*)\]\}", text, re.DOTALL)
    if m:
        text = m.group(1)
    parts = re.split(r"\s+AND\s+", text, flags=re.IGNORECASE)
    out = set()
    for p in parts:
        p = re.sub(r"\s+", "", p).upper().replace("$", "")
        if p:
            out.add(_canon(p))
    return frozenset(out)


def score_qa(answer, gold: str) -> bool:
    """``answer`` is a QaAnswer or a plain expression string."""
    if not gold.strip():
        raise ValueError("gold answer must be non-empty")
    expr = getattr(answer, "expression", answer)
    got = normalize_answer(expr)
    return bool(got) and got == normalize_answer(gold)


# compression report

@dataclass(frozen=True)
class CompressionRow:
    modules: frozenset[int]
    tokens: int
    ratio: float

    @property
    def label(self) -> str:
        return modules_label(self.modules)


@dataclass(frozen=True)
class CompressionReport:
    sheets: int
    rows: tuple[CompressionRow, ...]

    def ratio(self, mods: Iterable[int]) -> float:
        key = frozenset(mods)
        return next(r.ratio for r in self.rows if r.modules == key)

    def to_records(self) -> list[dict]:
        return [{"modules": r.label, "tokens": r.tokens, "ratio": round(r.ratio, 4)} for r in self.rows]

    def to_json(self) -> str:
        return json.dumps({"sheets": self.sheets, "combinations": self.to_records()}, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["modules", "tokens", "ratio"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.to_records())
        return buf.getvalue()


def compression_report(corpus: Iterable[Sheet], config: CompressConfig = CompressConfig(),
                       tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> CompressionReport:
    """Corpus-wide token totals per module combination, ratio against vanilla totals."""
    totals = {mods: 0 for mods in MODULE_COMBINATIONS}
    count = 0
    for sheet in corpus:
        count += 1
        for mods, t in module_token_counts(sheet, config, tokenizer).items():
            totals[mods] += t
    base = totals[frozenset()]
    rows = tuple(CompressionRow(mods, totals[mods], compression_ratio(base, totals[mods]) if count else 1.0)
                 for mods in MODULE_COMBINATIONS)
    return CompressionReport(count, rows)


# gold and prediction files

def _ranges(items, where: str) -> tuple[CellRange, ...]:
    if not isinstance(items, list):
        raise InputError(f"{where}: expected a list of ranges")
    try:
        return tuple(parse_range(str(x)) for x in items)
    except A1ParseError as exc:
        raise InputError(f"{where}: {exc}") from None


def _load_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def parse_detection_gold(data) -> list[DetectionGold]:
    if not isinstance(data, list):
        raise InputError("detection gold must be a JSON array")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "sheet" not in item or "tables" not in item:
            raise InputError(f"gold[{i}] needs 'sheet' and 'tables'")
        alt = tuple(_ranges(a, f"gold[{i}].alt") for a in item.get("alt", []) or [])
        out.append(DetectionGold(str(item["sheet"]), _ranges(item["tables"], f"gold[{i}].tables"), alt))
    return out


def load_detection_gold(path: str | Path) -> list[DetectionGold]:
    return parse_detection_gold(_load_json(path))


def parse_predictions(data) -> dict[str, tuple[CellRange, ...]]:
    """``[{sheet, ranges}]`` (``tables`` accepted as an alias)."""
    if not isinstance(data, list):
        raise InputError("predictions must be a JSON array")
    out = {}
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "sheet" not in item:
            raise InputError(f"preds[{i}] needs 'sheet'")
        items = item.get("ranges", item.get("tables"))
        out[str(item["sheet"])] = _ranges(items if items is not None else [], f"preds[{i}].ranges")
    return out


def load_predictions(path: str | Path) -> dict[str, tuple[CellRange, ...]]:
    return parse_predictions(_load_json(path))


@dataclass(frozen=True)
class QaGold:
    sheet: str
    question: str
    answer: str


def load_qa_gold(path: str | Path) -> list[QaGold]:
    data = _load_json(path)
    if not isinstance(data, list):
        raise InputError("QA gold must be a JSON array")
    try:
        return [QaGold(str(d["sheet"]), str(d["question"]), str(d["answer"])) for d in data]
    except (KeyError, TypeError):
        raise InputError("QA gold entries need 'sheet', 'question' and 'answer'") from None


@dataclass
class DetectionEvaluation:
    overall: ScoreReport
    per_sheet: dict[str, ScoreReport]
    excluded: list[str]

    def to_dict(self) -> dict:
        return {"overall": self.overall.to_dict(),
                "sheets": {k: v.row() for k, v in sorted(self.per_sheet.items())},
                "excluded": sorted(self.excluded)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "tp", "fp", "fn", "precision", "recall", "f1"])
        def put(scope, rep):
            r = rep.row()
            w.writerow([scope, r["tp"], r["fp"], r["fn"], r["precision"], r["recall"], r["f1"]])
        put("overall", self.overall)
        for b, rep in self.overall.buckets.items():
            put(f"bucket:{b}", rep)
        for k in sorted(self.per_sheet):
            put(f"sheet:{k}", self.per_sheet[k])
        return buf.getvalue()


def evaluate_detection(gold: Sequence[DetectionGold], preds: Mapping[str, Sequence[CellRange]],
                       buckets: Mapping[str, str] | None = None) -> DetectionEvaluation:
    """Micro-averaged scores over the sheets present in both files.

    Sheets missing from either side are excluded and listed.  ``buckets``
    maps sheet ids to size buckets for the per-bucket breakdown.
    """
    gold_ids = {g.sheet for g in gold}
    excluded = sorted((gold_ids ^ set(preds)))
    if excluded:
        log.warning("excluding %d sheet(s) not present in both files: %s", len(excluded), ", ".join(excluded))
    overall = ScoreReport()
    if buckets is not None:
        overall.buckets = {b: ScoreReport() for b in BUCKETS}
    per_sheet = {}
    for g in sorted(gold, key=lambda g: g.sheet):
        if g.sheet not in preds:
            continue
        rep = score_detection(list(preds[g.sheet]), g)
        per_sheet[g.sheet] = rep
        overall.add(rep)
        if buckets is not None:
            overall.buckets[buckets[g.sheet]].add(rep)
    return DetectionEvaluation(overall, per_sheet, excluded)
