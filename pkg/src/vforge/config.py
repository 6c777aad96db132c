"""Pipeline configuration (``pipeline.toml``).

Example::

    [paths]
    artists = "discogs_artists.xml.gz"
    releases = "discogs_releases.xml.gz"
    candidates = "candidates.jsonl"     # optional, enables match/dedupe
    external_refs = "reserved.jsonl"    # optional, pins cliques to test
    work_dir = "work"

    [normalize]
    articles = ["the", "a", "an"]
    strip_brackets = true

    [cliques]
    merge_overlapping = false

    [match]
    official_markers = ["Provided to YouTube by"]
    max_duration_s = 1200

    [split]
    seed = 42
    source = "dataset"                  # or "cliques"

    [stats]
    duration_bin_s = 30

    [eval]
    embeddings = "emb.npy"              # or: similarity = "sim.npy"
    labels = "labels.txt"
    noise_label = "noise"

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .matcher import DEFAULT_DECORATION_TOKENS, DEFAULT_OFFICIAL_MARKERS, MAX_DURATION_S, MatchConfig
from .normalize import DEFAULT_ARTICLES, Normalizer


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Paths:
    artists: Path | None = None
    releases: Path | None = None
    candidates: Path | None = None
    external_refs: Path | None = None
    work_dir: Path = Path("work")


@dataclass
class NormalizeSection:
    articles: list[str] = field(default_factory=lambda: list(DEFAULT_ARTICLES))
    strip_brackets: bool = True


@dataclass
class CliquesSection:
    merge_overlapping: bool = False


@dataclass
class MatchSection:
    official_markers: list[str] = field(default_factory=lambda: list(DEFAULT_OFFICIAL_MARKERS))
    decoration_tokens: list[str] = field(default_factory=lambda: list(DEFAULT_DECORATION_TOKENS))
    max_duration_s: int = MAX_DURATION_S


@dataclass
class SplitSection:
    seed: int = 0
    test_fraction: float = 0.10
    val_fraction: float = 0.10
    sample_size_range: list[int] = field(default_factory=lambda: [2, 6])
    source: str = "dataset"


@dataclass
class StatsSection:
    duration_bin_s: float = 30.0


@dataclass
class EvalSection:
    embeddings: Path | None = None
    similarity: Path | None = None
    labels: Path | None = None
    noise_label: str | None = None
    self_mask: bool = True


@dataclass
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    normalize: NormalizeSection = field(default_factory=NormalizeSection)
    cliques: CliquesSection = field(default_factory=CliquesSection)
    match: MatchSection = field(default_factory=MatchSection)
    split: SplitSection = field(default_factory=SplitSection)
    stats: StatsSection = field(default_factory=StatsSection)
    eval: EvalSection = field(default_factory=EvalSection)

    @property
    def normalizer(self) -> Normalizer:
        return Normalizer(tuple(self.normalize.articles), self.normalize.strip_brackets)

    @property
    def match_config(self) -> MatchConfig:
        return MatchConfig(
            official_markers=tuple(self.match.official_markers),
            decoration_tokens=tuple(self.match.decoration_tokens),
            max_duration_s=self.match.max_duration_s,
            normalizer=self.normalizer,
        )

    def section_hash(self, *sections: str) -> str:
        """Hash of the named sections; paths never enter it."""
        payload = {s: asdict(getattr(self, s)) for s in sections}
        blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTIONS = {
    "paths": Paths,
    "normalize": NormalizeSection,
    "cliques": CliquesSection,
    "match": MatchSection,
    "split": SplitSection,
    "stats": StatsSection,
    "eval": EvalSection,
}

_PATH_FIELDS = {
    ("paths", "artists"), ("paths", "releases"), ("paths", "candidates"),
    ("paths", "external_refs"), ("paths", "work_dir"),
    ("eval", "embeddings"), ("eval", "similarity"), ("eval", "labels"),
}


def _check(path: str, value, kind):
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is str:
        ok = isinstance(value, str)
    elif kind == "str-list":
        ok = isinstance(value, list) and all(isinstance(v, str) for v in value)
    elif kind == "int-list":
        ok = isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    else:
        ok = True
    if not ok:
        raise ConfigError(path, f"expected {kind if isinstance(kind, str) else kind.__name__}, "
                                f"got {type(value).__name__}")
    return float(value) if kind is float else value


_KINDS = {
    ("normalize", "articles"): "str-list",
    ("normalize", "strip_brackets"): bool,
    ("cliques", "merge_overlapping"): bool,
    ("match", "official_markers"): "str-list",
    ("match", "decoration_tokens"): "str-list",
    ("match", "max_duration_s"): int,
    ("split", "seed"): int,
    ("split", "test_fraction"): float,
    ("split", "val_fraction"): float,
    ("split", "sample_size_range"): "int-list",
    ("split", "source"): str,
    ("stats", "duration_bin_s"): float,
    ("eval", "noise_label"): str,
    ("eval", "self_mask"): bool,
}


def from_dict(raw: dict, base_dir: Path | str = ".") -> PipelineConfig:
    base_dir = Path(base_dir)
    cfg = PipelineConfig()
    for section, values in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section")
        if not isinstance(values, dict):
            raise ConfigError(section, "expected a table")
        target = getattr(cfg, section)
        for key, value in values.items():
            fpath = f"{section}.{key}"
            if not hasattr(target, key):
                raise ConfigError(fpath, "unknown key")
            if (section, key) in _PATH_FIELDS:
                value = base_dir / _check(fpath, value, str)
            else:
                value = _check(fpath, value, _KINDS.get((section, key)))
            setattr(target, key, value)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig) -> None:
    if cfg.match.max_duration_s < 0:
        raise ConfigError("match.max_duration_s", "must be >= 0")
    for name in ("test_fraction", "val_fraction"):
        value = getattr(cfg.split, name)
        if not 0.0 <= value < 1.0:
            raise ConfigError(f"split.{name}", "must be in [0, 1)")
    rng = cfg.split.sample_size_range
    if len(rng) != 2 or rng[0] > rng[1] or rng[0] < 1:
        raise ConfigError("split.sample_size_range", "expected [lo, hi] with 1 <= lo <= hi")
    if cfg.split.source not in ("dataset", "cliques"):
        raise ConfigError("split.source", "expected 'dataset' or 'cliques'")
    if cfg.stats.duration_bin_s <= 0:
        raise ConfigError("stats.duration_bin_s", "must be > 0")
    if not (0 <= cfg.split.seed < 2**64):
        raise ConfigError("split.seed", "must be a 64-bit unsigned integer")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return from_dict(raw, path.parent)
