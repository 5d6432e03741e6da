"""Two-stage spreadsheet QA and table detection against a model client.

Detection sends the fully compressed encoding and maps the returned
ranges back to the source sheet.  QA first asks which table holds the
answer (compressed input), then asks the question over that table's plain
encoding, splitting it into header-plus-chunk pieces when it is too large.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .anchors import cell_kinds, headerish_mask, map_range_to_original, NUMERIC
from .compress import ALL_MODULES, CompressConfig, encode_compressed
from .encoding import DEFAULT_TOKENIZER, Tokenizer, encode_vanilla
from .errors import A1ParseError, ConfigError, MappingError, PipelineError
from .grid import Cell, CellAddress, CellRange, Sheet, column_index, column_letters, parse_range
from .llm import LlmClient, LlmRequest
from .prompts import load_template, with_question

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    compress: CompressConfig = field(default_factory=CompressConfig)
    tokenizer: Tokenizer = DEFAULT_TOKENIZER
    request: LlmRequest = LlmRequest("")
    gate: int = 4096
    window: int = 3
    stride: int = 3
    parallelism: int = 1
    template_dir: str | None = None

    def __post_init__(self):
        if self.gate < 1:
            raise ValueError("gate must be >= 1")
        if self.window < 1 or self.stride < 1:
            raise ValueError("window and stride must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class DetectionResult:
    ranges: tuple[CellRange, ...]
    raw_response: str
    noncontiguous: tuple[bool, ...] = ()
    dropped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "ranges": [str(r) for r in self.ranges],
            "noncontiguous": list(self.noncontiguous),
            "dropped": list(self.dropped),
            "raw_response": self.raw_response,
        }


@dataclass(frozen=True)
class QaAnswer:
    expression: str
    raw_response: str

    @property
    def ok(self) -> bool:
        return bool(self.expression)


@dataclass(frozen=True)
class ChunkAnswer:
    """One split-path answer; ``body_rows`` are region-relative, 0-based, inclusive."""
    chunk: int
    body_rows: tuple[int, int]
    answer: QaAnswer


@dataclass(frozen=True)
class QaOutcome:
    answer: QaAnswer
    region: CellRange
    region_tokens: int
    split: bool
    chunks: tuple[ChunkAnswer, ...] = ()
    stage1_raw: str = ""

    def to_dict(self) -> dict:
        return {
            "answer": self.answer.expression,
            "raw_response": self.answer.raw_response,
            "region": str(self.region),
            "region_tokens": self.region_tokens,
            "split": self.split,
            "stage1_raw": self.stage1_raw,
            "chunks": [{"chunk": c.chunk, "body_rows": list(c.body_rows), "answer": c.answer.expression,
                        "raw_response": c.answer.raw_response} for c in self.chunks],
        }


_RANGE_ENTRY = re.compile(r"""['"]range['"]\s*:\s*['"]\s*([^'"]*?)\s*['"]""")
_BRACKETED = re.compile(r"\[([^\[\]]*)\]")
_ANSWER = re.compile(r"\{\[(.*?)\]\}", re.DOTALL)


def parse_ranges(raw: str) -> tuple[list[CellRange], list[str]]:
    """Ranges from ``[{'range': 'A1:F9'}, ...]`` or a bare ``[A1:F9,A12:F18]`` list.

    Returns the parsed ranges and the entries that failed to parse.
    """
    entries = _RANGE_ENTRY.findall(raw)
    if not entries:
        for body in _BRACKETED.findall(raw):
            parts = [p.strip().strip("'\"") for p in body.split(",") if p.strip()]
            if parts and all(re.fullmatch(r"\$?[A-Za-z]+\$?\d+(:\$?[A-Za-z]+\$?\d+)?", p) for p in parts):
                entries = parts
                break
    ranges, bad = [], []
    for e in entries:
        try:
            ranges.append(parse_range(e.upper()))
        except A1ParseError:
            bad.append(e)
    return ranges, bad


def parse_answer(raw: str) -> QaAnswer:
    """The ``{[...]}`` payload of a stage-2 reply; empty expression when absent."""
    m = _ANSWER.search(raw)
    return QaAnswer(m.group(1).strip() if m else "", raw)


def _ask(client: LlmClient | None, config: PipelineConfig, prompt: str) -> str:
    if client is None:
        raise ConfigError("no model client configured")
    return client.complete(replace(config.request, prompt=prompt))


def _compressed(sheet: Sheet, config: PipelineConfig, style: str):
    # each prompt fixes its own tuple separator
    return encode_compressed(sheet, ALL_MODULES, replace(config.compress, style=style), config.tokenizer)


def run_detection(sheet: Sheet, config: PipelineConfig = PipelineConfig(), client: LlmClient | None = None) -> DetectionResult:
    enc = _compressed(sheet, config, "detection")
    prompt = load_template("detect", config.template_dir).render(enc.text)
    raw = _ask(client, config, prompt)
    ranges, bad = parse_ranges(raw)
    out, flags, dropped = [], [], list(bad)
    for rng in ranges:
        try:
            mapped = map_range_to_original(rng, enc.coord_map)
        except MappingError:
            dropped.append(str(rng))
            continue
        out.append(mapped.range)
        flags.append(mapped.noncontiguous)
    if dropped:
        log.warning("dropped %d unusable range(s): %s", len(dropped), ", ".join(dropped))
    return DetectionResult(tuple(out), raw, tuple(flags), tuple(dropped))


def predict_header(region: Sheet, rules=None) -> int:
    """Number of leading header rows.

    The longest leading run of rows that are at least half header-like
    (text, years, dates), provided the row after it is at least half
    numeric.  Fractions are over the non-empty cells of each row.  Falls
    back to 1.
    """
    kinds = cell_kinds(region, rules)
    hdr = headerish_mask(region, rules)
    occupied = (kinds != 0).sum(axis=1)
    denom = occupied.clip(min=1)
    text_frac = hdr.sum(axis=1) / denom
    num_frac = (kinds == NUMERIC).sum(axis=1) / denom
    run = 0
    while run < region.m and occupied[run] and text_frac[run] >= 0.5:
        run += 1
    for h in range(run, 0, -1):
        if h < region.m and num_frac[h] >= 0.5:
            return h
    return 1


def _plain_rows(sheet: Sheet, rows) -> Sheet:
    # chunk sheets are rendered as plain grids; merges would point outside them
    return Sheet([[Cell(c.value, c.nfs, c.style) for c in sheet.rows[i]] for i in rows], sheet.name)


_ADDRESS = re.compile(r"(?<![A-Za-z0-9_$])(\$?)([A-Za-z]{1,3})(\$?)(\d+)(?![A-Za-z0-9_(])")


def translate_expression(expr: str, row_map: list[int], origin: CellAddress) -> str:
    """Rewrite chunk-local addresses to sheet addresses.

    ``row_map[i]`` is the region row of chunk row ``i``; addresses outside
    the chunk are left untouched.
    """
    def sub(m):
        d1, letters, d2, digits = m.groups()
        r = int(digits) - 1
        if not 0 <= r < len(row_map):
            return m.group(0)
        col = column_index(letters.upper()) + origin.col
        return f"{d1}{column_letters(col)}{d2}{row_map[r] + origin.row + 1}"
    return _ADDRESS.sub(sub, expr)


def chunk_windows(n_body: int, window: int = 3, stride: int = 3) -> list[tuple[int, int]]:
    """Half-open body-row windows ``[start, stop)``."""
    return [(i, min(i + window, n_body)) for i in range(0, n_body, stride)]


def split_and_answer(question: str, region: Sheet, client: LlmClient, config: PipelineConfig = PipelineConfig(),
                     origin: CellAddress = CellAddress(0, 0)) -> list[ChunkAnswer]:
    """Answer over header-plus-chunk tables and translate each answer back."""
    h = predict_header(region, config.compress.rules)
    if h >= region.m:
        log.warning("header prediction covered the whole region; using the first row")
        h = 1
    template = load_template("cos_stage2", config.template_dir)
    body = list(range(h, region.m))
    jobs = []
    for idx, (a, b) in enumerate(chunk_windows(len(body), config.window, config.stride)):
        rows = list(range(h)) + body[a:b]
        text = encode_vanilla(_plain_rows(region, rows), tokenizer=config.tokenizer).text
        jobs.append((idx, (body[a], body[b - 1]), rows, template.render(with_question(text, question))))

    def run(job):
        idx, span, rows, prompt = job
        ans = parse_answer(_ask(client, config, prompt))
        expr = translate_expression(ans.expression, rows, origin)
        return ChunkAnswer(idx, span, QaAnswer(expr, ans.raw_response))

    if config.parallelism > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def first_answer(chunks: list[ChunkAnswer]) -> QaAnswer:
    """Convenience fusion: the first chunk answer with a non-empty expression."""
    for c in chunks:
        if c.answer.ok:
            return c.answer
    return QaAnswer("", "")


def run_cos_qa(sheet: Sheet, question: str, config: PipelineConfig = PipelineConfig(),
               client: LlmClient | None = None) -> QaOutcome:
    if not question.strip():
        raise ValueError("question must be non-empty")
    enc = _compressed(sheet, config, "qa")
    prompt = load_template("cos_stage1", config.template_dir).render(with_question(enc.text, question))
    raw1 = _ask(client, config, prompt)
    ranges, _ = parse_ranges(raw1)
    if not ranges:
        raise PipelineError("stage1", f"no table range in response {raw1[:120]!r}")
    try:
        region_rng = map_range_to_original(ranges[0], enc.coord_map).range
    except MappingError as exc:
        raise PipelineError("stage1", str(exc)) from None
    if region_rng.bottom >= sheet.m or region_rng.right >= sheet.n:
        raise PipelineError("stage1", f"range {region_rng} lies outside the sheet")

    region = sheet.subsheet(region_rng)
    origin = CellAddress(region_rng.top, region_rng.left)
    enc2 = encode_vanilla(region, tokenizer=config.tokenizer, origin=origin)
    if enc2.token_count <= config.gate:
        prompt2 = load_template("cos_stage2", config.template_dir).render(with_question(enc2.text, question))
        answer = parse_answer(_ask(client, config, prompt2))
        return QaOutcome(answer, region_rng, enc2.token_count, False, (), raw1)
    chunks = split_and_answer(question, region, client, config, origin)
    return QaOutcome(first_answer(chunks), region_rng, enc2.token_count, True, tuple(chunks), raw1)
