"""Command-line entry point: encode, detect, qa and eval.

Exit codes: 0 success, 1 pipeline failure, 2 bad input, 3 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .compress import encode_compressed, modules_label, parse_modules
from .config import Config, load_config, with_overrides
from .encoding import compression_ratio, encode_vanilla, get_tokenizer
from .errors import ConfigError, GridCompressError, InputError, PipelineError
from .evaluation import (bucketize, compression_report, evaluate_detection, load_detection_gold,
                         load_predictions)
from .grid import Sheet, ingest_json
from .llm import HttpClient, MockClient
from .pipeline import run_cos_qa, run_detection
from .xlsx import ingest_xlsx

log = logging.getLogger("gridcompress")


def read_sheet(path: str | Path, sheet: str | None = None) -> Sheet:
    """Load a .json sheet or one worksheet of an .xlsx workbook.

    ``sheet`` selects a worksheet by name or 0-based index; default first.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    suffix = path.suffix.lower()
    if suffix == ".json":
        if sheet is not None:
            raise InputError("--sheet applies to .xlsx input only")
        return ingest_json(data)
    if suffix in (".xlsx", ".xlsm"):
        sheets = ingest_xlsx(data)
        if not sheets:
            raise InputError(f"{path} has no worksheets")
        if sheet is None:
            return sheets[0]
        for s in sheets:
            if s.name == sheet:
                return s
        if sheet.isdigit() and int(sheet) < len(sheets):
            return sheets[int(sheet)]
        raise InputError(f"{path} has no worksheet {sheet!r}; found {', '.join(s.name for s in sheets)}")
    raise InputError(f"unsupported input type {path.suffix or '(none)'}; expected .json or .xlsx")


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def _client(args, cfg: Config):
    if args.mock:
        return MockClient.from_file(args.mock)
    return HttpClient(cfg.llm.endpoint, cfg.llm.model, timeout=cfg.llm.timeout, attempts=cfg.llm.attempts)


def cmd_encode(args, cfg: Config) -> int:
    sheet = read_sheet(args.input, args.sheet)
    tok = get_tokenizer(cfg.tokenizer)
    before = encode_vanilla(sheet, include_format=args.format, tokenizer=tok)
    if args.compress:
        mods = parse_modules(args.modules)
        enc = encode_compressed(sheet, mods, cfg.compress_config(), tok)
    else:
        mods = frozenset()
        enc = before
    sys.stdout.write(enc.text)
    if args.stats is not None:
        stats = {
            "sheet": sheet.name,
            "shape": list(sheet.shape),
            "mode": "compress" if args.compress else "vanilla",
            "modules": sorted(mods),
            "label": modules_label(mods),
            "include_format": bool(args.format),
            "tokenizer": tok.name,
            "tokens_before": before.token_count,
            "tokens_after": enc.token_count,
            "ratio": compression_ratio(before.token_count, enc.token_count) if enc.token_count else None,
            "kept_rows": list(enc.coord_map.kept_rows) if enc.coord_map else None,
            "kept_cols": list(enc.coord_map.kept_cols) if enc.coord_map else None,
        }
        text = _dump(stats)
        if args.stats == "-":
            sys.stderr.write(text)
        else:
            Path(args.stats).write_text(text, encoding="utf-8")
    return 0


def cmd_detect(args, cfg: Config) -> int:
    sheet = read_sheet(args.input, args.sheet)
    result = run_detection(sheet, cfg.pipeline_config(), _client(args, cfg))
    sys.stdout.write(_dump({"sheet": sheet.name, **result.to_dict()}))
    return 0


def cmd_qa(args, cfg: Config) -> int:
    if not args.question.strip():
        raise InputError("--question must be non-empty")
    sheet = read_sheet(args.input, args.sheet)
    outcome = run_cos_qa(sheet, args.question, cfg.pipeline_config(), _client(args, cfg))
    sys.stdout.write(_dump({"sheet": sheet.name, "question": args.question, **outcome.to_dict()}))
    return 0


def cmd_eval(args, cfg: Config) -> int:
    gold_path = Path(args.gold)
    gold = load_detection_gold(gold_path)
    tok = get_tokenizer(cfg.tokenizer)
    base = gold_path.parent
    sheets = {}
    for g in gold:
        sheets[g.sheet] = read_sheet(base / g.sheet)
    if args.run_mock:
        client = MockClient.from_file(args.run_mock)
        pcfg = cfg.pipeline_config()
        preds = {sid: run_detection(sheets[sid], pcfg, client).ranges for sid in sorted(sheets)}
    elif args.preds:
        preds = load_predictions(args.preds)
    else:
        raise InputError("eval needs a predictions file or --run-mock")
    buckets = {sid: bucketize(s, tok) for sid, s in sheets.items()}
    ev = evaluate_detection(gold, preds, buckets)
    comp = compression_report((sheets[sid] for sid in sorted(sheets)), cfg.compress_config(), tok)
    report = {**ev.to_dict(), "buckets_by_sheet": dict(sorted(buckets.items())),
              "compression": json.loads(comp.to_json())}
    json_path, csv_path = Path(f"{args.out}.json"), Path(f"{args.out}.csv")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(_dump(report), encoding="utf-8")
    csv_path.write_text(ev.to_csv() + "\n" + comp.to_csv(), encoding="utf-8")
    sys.stdout.write(_dump({"f1": report["overall"]["f1"], "excluded": report["excluded"],
                            "json": str(json_path), "csv": str(csv_path)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridcompress", description="Spreadsheet encoding, compression and LLM pipelines.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--k", type=int, help="anchor neighbourhood radius (overrides config)")
    p.add_argument("--tokenizer", help="tokenizer name (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="print a sheet encoding")
    e.add_argument("input")
    mode = e.add_mutually_exclusive_group()
    mode.add_argument("--vanilla", action="store_true", help="plain row-major encoding (default)")
    mode.add_argument("--compress", action="store_true", help="apply compression modules")
    e.add_argument("--modules", default="1,2,3", help="modules for --compress, e.g. 1,2,3 or 1&2")
    e.add_argument("--format", action="store_true", help="append the cell format block (vanilla only)")
    e.add_argument("--stats", nargs="?", const="-", metavar="FILE",
                   help="write token statistics JSON to FILE, or stderr when no FILE is given")
    e.add_argument("--sheet", help="worksheet name or index for .xlsx input")
    e.set_defaults(func=cmd_encode)

    for name, func, helptext in (("detect", cmd_detect, "detect table ranges"),
                                 ("qa", cmd_qa, "answer a question over a sheet")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("input")
        s.add_argument("--sheet", help="worksheet name or index for .xlsx input")
        if name == "qa":
            s.add_argument("--question", required=True)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--mock", metavar="RESPONSES", help="JSON file of scripted model responses")
        src.add_argument("--live", action="store_true", help="call the configured endpoint")
        s.add_argument("--gate", type=int, help="stage-2 token gate (overrides config)")
        s.set_defaults(func=func)

    v = sub.add_parser("eval", help="score detection predictions against gold labels")
    v.add_argument("gold", help="gold JSON: [{sheet, tables, alt}]")
    v.add_argument("preds", nargs="?", help="predictions JSON: [{sheet, ranges}]")
    v.add_argument("--run-mock", metavar="RESPONSES", help="produce predictions with a scripted mock model")
    v.add_argument("--out", default="report", help="output path prefix for .json and .csv")
    v.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "format", False) and getattr(args, "compress", False):
            raise InputError("--format applies to the vanilla encoding only")
        cfg = with_overrides(load_config(args.config), k=args.k, tokenizer=args.tokenizer,
                             gate=getattr(args, "gate", None))
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 1
    except GridCompressError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
