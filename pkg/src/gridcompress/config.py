"""Run configuration read from a TOML file.

Example::

    tokenizer = "default"

    [anchors]
    k = 4
    theta = 0.3
    delta = 0.1
    eta = 0.5
    closure = 0.5
    source = "both"

    [llm]
    endpoint = "https://example.invalid/v1/complete"
    model = "my-model"
    temperature = 0.0
    max_tokens = 300
    top_p = 0.95
    timeout = 60
    attempts = 3

    [split]
    gate = 4096
    window = 3
    stride = 3
    parallelism = 1

    [types]
    currency_symbols = ["$", "€"]
    extra_date_patterns = ['^\\d{8}$']

    [prompts]
    dir = "my_templates"

Every key is optional.  Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from .anchors import AnchorConfig
from .compress import CompressConfig
from .encoding import get_tokenizer
from .errors import ConfigError
from .formats import TypeRules
from .llm import LlmRequest
from .pipeline import PipelineConfig


@dataclass(frozen=True)
class LlmSettings:
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_tokens: int = 300
    top_p: float = 0.95
    timeout: float = 60.0
    attempts: int = 3

    def __post_init__(self):
        if self.temperature < 0 or not 0 < self.top_p <= 1 or self.max_tokens < 1:
            raise ValueError("need temperature >= 0, 0 < top_p <= 1 and max_tokens >= 1")
        if self.timeout <= 0 or self.attempts < 1:
            raise ValueError("need timeout > 0 and attempts >= 1")


@dataclass(frozen=True)
class SplitSettings:
    gate: int = 4096
    window: int = 3
    stride: int = 3
    parallelism: int = 1

    def __post_init__(self):
        if self.gate < 1:
            raise ValueError("split.gate must be >= 1")
        if self.window < 1 or self.stride < 1 or self.parallelism < 1:
            raise ValueError("split.window, split.stride and split.parallelism must be >= 1")


@dataclass(frozen=True)
class Config:
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    tokenizer: str = "default"
    llm: LlmSettings = field(default_factory=LlmSettings)
    split: SplitSettings = field(default_factory=SplitSettings)
    types: TypeRules | None = None
    prompts_dir: str | None = None

    def compress_config(self) -> CompressConfig:
        return CompressConfig(anchors=self.anchors, rules=self.types)

    def pipeline_config(self) -> PipelineConfig:
        req = LlmRequest("", self.llm.temperature, self.llm.max_tokens, self.llm.top_p)
        return PipelineConfig(self.compress_config(), get_tokenizer(self.tokenizer), req, self.split.gate,
                              self.split.window, self.split.stride, self.split.parallelism, self.prompts_dir)


def _section(cls, doc, name: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from None


def config_from_dict(doc: dict, base_dir: Path | None = None) -> Config:
    top = {"tokenizer", "anchors", "llm", "split", "types", "prompts"}
    unknown = set(doc) - top
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    cfg = Config()
    if "anchors" in doc:
        cfg = replace(cfg, anchors=_section(AnchorConfig, doc["anchors"], "anchors"))
    if "llm" in doc:
        cfg = replace(cfg, llm=_section(LlmSettings, doc["llm"], "llm"))
    if "split" in doc:
        cfg = replace(cfg, split=_section(SplitSettings, doc["split"], "split"))
    if "types" in doc:
        try:
            cfg = replace(cfg, types=TypeRules.from_mapping(doc["types"]))
        except Exception as exc:
            raise ConfigError(f"[types]: {exc}") from None
    if "prompts" in doc:
        p = doc["prompts"]
        if not isinstance(p, dict) or set(p) - {"dir"}:
            raise ConfigError("[prompts] accepts only 'dir'")
        d = Path(str(p["dir"]))
        if base_dir is not None and not d.is_absolute():
            d = base_dir / d
        cfg = replace(cfg, prompts_dir=str(d))
    if "tokenizer" in doc:
        cfg = replace(cfg, tokenizer=str(doc["tokenizer"]))
    get_tokenizer(cfg.tokenizer)
    return cfg


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        doc = tomli.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc, path.parent)


def with_overrides(cfg: Config, k: int | None = None, tokenizer: str | None = None, gate: int | None = None) -> Config:
    """Apply command-line flags on top of file values."""
    try:
        if k is not None:
            cfg = replace(cfg, anchors=replace(cfg.anchors, k=k))
        if gate is not None:
            cfg = replace(cfg, split=replace(cfg.split, gate=gate))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if tokenizer is not None:
        get_tokenizer(tokenizer)
        cfg = replace(cfg, tokenizer=tokenizer)
    return cfg
