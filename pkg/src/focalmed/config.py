"""Plain-text configuration: one INI-style file drives CLI and service.

Sections:
  [service]    addr=127.0.0.1:8080, data_dir=...
  [retrieval]  key=value overrides for RetrievalConfig (see from_mapping)
  [engine]     expand_depth=1
  [intents]    <phrase>=<RELATION_TYPE> lines replacing the built-in table
  [cohorts]    one keyword per line replacing the built-in cohort keywords

Environment variables FOCALMED_ADDR and FOCALMED_DATA_DIR override the
[service] section.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .kg import RelationType
from .parser import DEFAULT_COHORT_KEYWORDS, DEFAULT_EXPANSION_DEPTH, IntentPhraseTable
from .retrieval import RetrievalConfig

DEFAULT_ADDR = "127.0.0.1:8080"

ENV_ADDR = "FOCALMED_ADDR"
ENV_DATA_DIR = "FOCALMED_DATA_DIR"


@dataclass
class AppConfig:
    addr: str = DEFAULT_ADDR
    data_dir: Path = Path("data")
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    intents: IntentPhraseTable = field(default_factory=IntentPhraseTable.default)
    cohort_keywords: frozenset[str] = DEFAULT_COHORT_KEYWORDS
    expand_depth: int = DEFAULT_EXPANSION_DEPTH

    @property
    def kg_path(self) -> Path:
        return self.data_dir / "kg.jsonl"

    @property
    def tagged_path(self) -> Path:
        return self.data_dir / "tagged.jsonl"

    @property
    def index_path(self) -> Path:
        return self.data_dir / "index.fmix"


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> AppConfig:
    """Read the config file (when given) and apply environment overrides."""
    env = os.environ if env is None else env
    cfg = AppConfig()

    if path is not None:
        ini = configparser.ConfigParser(
            delimiters=("=",), allow_no_value=True, interpolation=None
        )
        ini.optionxform = str  # keep phrase case; normalization happens below
        ini.read(path, encoding="utf-8")

        if ini.has_section("service"):
            cfg.addr = ini.get("service", "addr", fallback=cfg.addr)
            raw_dir = ini.get("service", "data_dir", fallback=None)
            if raw_dir:
                cfg.data_dir = Path(raw_dir)
        if ini.has_section("retrieval"):
            cfg.retrieval = RetrievalConfig.from_mapping(dict(ini.items("retrieval")))
        if ini.has_section("engine"):
            cfg.expand_depth = ini.getint("engine", "expand_depth", fallback=DEFAULT_EXPANSION_DEPTH)
        if ini.has_section("intents"):
            mapping = {
                phrase: RelationType(value.strip()) for phrase, value in ini.items("intents")
            }
            cfg.intents = IntentPhraseTable.from_mapping(mapping)
        if ini.has_section("cohorts"):
            cfg.cohort_keywords = frozenset(k.strip().lower() for k, _ in ini.items("cohorts"))

    if env.get(ENV_ADDR):
        cfg.addr = env[ENV_ADDR]
    if env.get(ENV_DATA_DIR):
        cfg.data_dir = Path(env[ENV_DATA_DIR])
    return cfg


def split_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"listen address must look like host:port, got {addr!r}")
    return host, int(port)
