"""Compact spreadsheet encodings for language-model prompts.

The public surface covers the grid model, the vanilla and compressed
encoders, the value index, the two-stage model pipeline and evaluation.
"""

__version__ = "0.1.0"

from .anchors import AnchorConfig, AnchorSet, CoordinateMap, derive_anchors, extract_skeleton, map_range_to_original
from .compress import CompressConfig, MODULE_COMBINATIONS, encode_compressed, module_token_counts
from .encoding import DEFAULT_TOKENIZER, EncodedSheet, Tokenizer, compression_ratio, encode_vanilla, get_tokenizer
from .errors import (ConfigError, GridCompressError, InputError, IntegrityError, LlmError, PipelineError,
                     UndefinedRatioError)
from .evaluation import bucketize, compression_report, eob0_match, estimate_cost, score_detection, score_qa
from .formats import DataType, aggregate_identical, recognize_type
from .grid import Cell, CellAddress, CellRange, Sheet, StyleAttrs, ingest_json, parse_a1, parse_range
from .index import ValueIndex, invert, restore
from .llm import HttpClient, LlmRequest, MockClient
from .pipeline import PipelineConfig, predict_header, run_cos_qa, run_detection, split_and_answer
from .xlsx import ingest_xlsx

__all__ = [
    "AnchorConfig", "AnchorSet", "Cell", "CellAddress", "CellRange", "CompressConfig", "ConfigError",
    "CoordinateMap", "DEFAULT_TOKENIZER", "DataType", "EncodedSheet", "GridCompressError", "HttpClient",
    "InputError", "IntegrityError", "LlmError", "LlmRequest", "MODULE_COMBINATIONS", "MockClient",
    "PipelineConfig", "PipelineError", "Sheet", "StyleAttrs", "Tokenizer", "UndefinedRatioError", "ValueIndex",
    "aggregate_identical", "bucketize", "compression_ratio", "compression_report", "derive_anchors",
    "encode_compressed", "encode_vanilla", "eob0_match", "estimate_cost", "extract_skeleton", "get_tokenizer",
    "ingest_json", "ingest_xlsx", "invert", "map_range_to_original", "module_token_counts", "parse_a1",
    "parse_range", "predict_header", "recognize_type", "restore", "run_cos_qa", "run_detection", "score_detection",
    "score_qa", "split_and_answer",
]
