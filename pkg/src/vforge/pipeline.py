"""Stage runner with checksum-based caching.

Stages and their artifacts (all under ``paths.work_dir``)::

    parse        dumps                      -> artists.jsonl, releases.jsonl
    occurrences  artists, releases          -> occurrences.jsonl
    cliques      occurrences                -> cliques.jsonl, cliques.stats.json
    queries      cliques, artists           -> queries.txt
    match        cliques, artists, captures -> matches.jsonl
    dedupe       cliques, matches           -> dataset.jsonl
    split        dataset|cliques, artists   -> splits.json
    stats        cliques [+dataset, splits] -> stats/*.json, stats/*.csv
    eval         embeddings|similarity      -> eval.json

``manifest.json`` records, per stage, the checksums of inputs and outputs,
the hash of the config sections the stage reads, and its counters. A stage
whose record still matches is skipped and reported as ``cached``.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytics, ingest, matcher, metrics, splitter
from .artist_graph import ArtistGraph, file_checksum, load_graph, save_graph
from .cliques import Clique, TrackOccurrence, build_cliques, extract_occurrences
from .config import ConfigError, PipelineConfig

logger = logging.getLogger(__name__)

STAGES = ("parse", "occurrences", "cliques", "queries", "match", "dedupe", "split", "stats", "eval")
MANIFEST = "manifest.json"


class MissingInputError(FileNotFoundError):
    def __init__(self, artifact):
        super().__init__(f"missing input artifact: {artifact}")
        self.artifact = str(artifact)


@dataclass
class StageReport:
    stage: str
    status: str
    outputs: list[str] = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "status": self.status, "outputs": self.outputs, "counters": self.counters}


@dataclass
class StageSpec:
    inputs: Callable[[PipelineConfig], dict]
    optional: Callable[[PipelineConfig], dict]
    sections: tuple[str, ...]
    run: Callable


@dataclass
class Context:
    config: PipelineConfig
    jobs: int = 1
    graph_cache: Path | None = None

    @property
    def work(self) -> Path:
        return Path(self.config.paths.work_dir)

    def artifact(self, name: str) -> Path:
        return self.work / name


def _meta(stage: str, config_hash: str) -> dict:
    return {"stage": stage, "config_hash": config_hash}


def _load_cliques(path) -> list[Clique]:
    return [Clique.from_dict(d) for d in ingest.read_jsonl(path)]


def load_graph_cached(ctx: Context, artists_path: Path) -> ArtistGraph:
    checksum = file_checksum(artists_path)
    cache = ctx.graph_cache
    if cache is None:
        cache_dir = os.environ.get("VFORGE_CACHE_DIR")
        if cache_dir:
            cache = Path(cache_dir) / f"artist_graph-{checksum[:16]}.pickle"
    if cache is not None:
        graph = load_graph(cache, checksum)
        if graph is not None:
            return graph
    graph = ArtistGraph.from_records(ingest.parse_artists(artists_path, "jsonl"))
    if cache is not None:
        Path(cache).parent.mkdir(parents=True, exist_ok=True)
        save_graph(graph, cache, checksum)
    return graph


# -- stages -----------------------------------------------------------------


def _run_parse(ctx: Context, h: str) -> dict:
    paths = ctx.config.paths
    counters = {}
    for kind, src, parse in (("artists", paths.artists, ingest.parse_artists),
                             ("releases", paths.releases, ingest.parse_releases)):
        stats = ingest.ParseStats()
        records = parse(src, ingest.detect_format(src), stats)
        ingest.write_jsonl(records, ctx.artifact(f"{kind}.jsonl"), _meta("parse", h))
        counters[kind] = stats.to_dict()
    _write_json(ctx.artifact("parse.stats.json"), dict(counters, config_hash=h))
    return counters


def _run_occurrences(ctx: Context, h: str) -> dict:
    graph = load_graph_cached(ctx, ctx.artifact("artists.jsonl"))
    drops: Counter = Counter()
    tracks = 0

    def releases():
        nonlocal tracks
        for rel in ingest.parse_releases(ctx.artifact("releases.jsonl"), "jsonl"):
            tracks += len(rel.tracks)
            yield rel

    n = ingest.write_jsonl(extract_occurrences(releases(), graph, ctx.config.normalizer, drops),
                           ctx.artifact("occurrences.jsonl"), _meta("occurrences", h))
    counters = {"tracks": tracks, "occurrences": n, "drops": dict(sorted(drops.items())),
                "dangling_lookups": graph.lookups["dangling"]}
    _write_json(ctx.artifact("occurrences.stats.json"), dict(counters, config_hash=h))
    return counters


def _run_cliques(ctx: Context, h: str) -> dict:
    occs = [TrackOccurrence.from_dict(d) for d in ingest.read_jsonl(ctx.artifact("occurrences.jsonl"))]
    graph = None
    if ctx.config.cliques.merge_overlapping:
        graph = load_graph_cached(ctx, ctx.artifact("artists.jsonl"))
    drops: Counter = Counter()
    cliques = build_cliques(occs, ctx.config.cliques.merge_overlapping, graph, drops, jobs=ctx.jobs)
    ingest.write_jsonl(cliques, ctx.artifact("cliques.jsonl"), _meta("cliques", h))
    upstream = json.loads(ctx.artifact("occurrences.stats.json").read_text()) \
        if ctx.artifact("occurrences.stats.json").exists() else {}
    counters = {
        "occurrences_in": len(occs),
        "occurrences_in_cliques": sum(1 for c in cliques for _ in c.occurrences()),
        "cliques": len(cliques),
        "versions": sum(c.size for c in cliques),
        "drops": dict(sorted(drops.items())),
        "extraction_drops": upstream.get("drops", {}),
    }
    _write_json(ctx.artifact("cliques.stats.json"), dict(counters, config_hash=h))
    return counters


def _run_queries(ctx: Context, h: str) -> dict:
    graph = load_graph_cached(ctx, ctx.artifact("artists.jsonl"))
    n = 0
    with open(ctx.artifact("queries.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# stage=queries config_hash={h}\n")
        for clique in _load_cliques(ctx.artifact("cliques.jsonl")):
            for v in clique.versions:
                fh.write(f"{v.version_id}\t{matcher.build_query(v, graph)}\n")
                n += 1
    return {"queries": n}


def _read_candidates(path) -> dict[str, list[matcher.VideoCandidate]]:
    out = {}
    for rec in ingest.read_jsonl(path):
        out[rec["version_id"]] = [matcher.VideoCandidate.from_dict(c) for c in rec.get("candidates") or []]
    return out


def _run_match(ctx: Context, h: str) -> dict:
    graph = load_graph_cached(ctx, ctx.artifact("artists.jsonl"))
    captures = _read_candidates(ctx.config.paths.candidates)
    cfg = ctx.config.match_config
    status: Counter = Counter()
    reasons: Counter = Counter()

    def records():
        for clique in _load_cliques(ctx.artifact("cliques.jsonl")):
            for v in clique.versions:
                cands = captures.get(v.version_id, [])[:5]
                accepted, decisions = matcher.match_version(v, cands, graph, cfg)
                state = "no-candidates" if not cands else ("matched" if accepted else "unmatched")
                status[state] += 1
                reasons.update(d.reason for d in decisions)
                yield {
                    "version_id": v.version_id,
                    "clique_id": clique.clique_id,
                    "status": state,
                    "accepted": accepted,
                    "durations": {c.video_id: c.duration_s for c in cands if c.video_id in accepted},
                    "decisions": [d.to_dict() for d in decisions],
                }

    ingest.write_jsonl(records(), ctx.artifact("matches.jsonl"), _meta("match", h))
    return {"versions": dict(sorted(status.items())), "reasons": dict(sorted(reasons.items()))}


def _run_dedupe(ctx: Context, h: str) -> dict:
    urls = {r["version_id"]: r["accepted"] for r in ingest.read_jsonl(ctx.artifact("matches.jsonl"))}
    cliques = _load_cliques(ctx.artifact("cliques.jsonl"))
    for c in cliques:
        for v in c.versions:
            v.urls = list(urls.get(v.version_id, []))
    report: dict = {}
    kept = matcher.dedupe_urls(cliques, report)
    ingest.write_jsonl(kept, ctx.artifact("dataset.jsonl"), _meta("dedupe", h))
    counters = dict(report, cliques_in=len(cliques), cliques_out=len(kept),
                    versions_out=sum(c.size for c in kept))
    _write_json(ctx.artifact("dedupe.stats.json"), dict(counters, config_hash=h))
    return counters


def _split_source(cfg: PipelineConfig) -> str:
    return "dataset.jsonl" if cfg.split.source == "dataset" else "cliques.jsonl"


def _run_split(ctx: Context, h: str) -> dict:
    cfg = ctx.config
    cliques = _load_cliques(ctx.artifact(_split_source(cfg)))
    reserved: set[str] = set()
    if cfg.paths.external_refs is not None:
        graph = load_graph_cached(ctx, ctx.artifact("artists.jsonl"))
        refs = [splitter.ExternalRef.from_dict(d) for d in ingest.read_jsonl(cfg.paths.external_refs)]
        reserved = splitter.find_reserved(cliques, refs, graph, cfg.normalizer)
    plan = splitter.make_splits(cliques, reserved, cfg.split.seed, cfg.split.test_fraction,
                                cfg.split.val_fraction, tuple(cfg.split.sample_size_range))
    payload = dict(plan.to_dict(), config_hash=h, source=_split_source(cfg))
    _write_json(ctx.artifact("splits.json"), payload)
    return {"counts": plan.counts(), "reserved": len(plan.reserved_ids), "warnings": plan.warnings}


def _run_stats(ctx: Context, h: str) -> dict:
    cfg = ctx.config
    out_dir = ctx.artifact("stats")
    counters = {}
    cliques = _load_cliques(ctx.artifact("cliques.jsonl"))
    analytics.write_report(analytics.dataset_report(cliques), out_dir, "cliques", h)
    counters["cliques"] = len(cliques)
    if ctx.artifact("dataset.jsonl").exists():
        dataset = _load_cliques(ctx.artifact("dataset.jsonl"))
        keep = {v.version_id for c in dataset for v in c.versions}
        durations = None
        if ctx.artifact("matches.jsonl").exists():
            durations = analytics.primary_durations(ingest.read_jsonl(ctx.artifact("matches.jsonl")), keep)
        if dataset:
            report = analytics.dataset_report(dataset, durations, cfg.stats.duration_bin_s)
            analytics.write_report(report, out_dir, "dataset", h)
        counters["dataset"] = len(dataset)
        if ctx.artifact("splits.json").exists():
            plan = json.loads(ctx.artifact("splits.json").read_text())
            split_of = plan["assignments"]
            by_split: dict[str, list[Clique]] = {}
            source = dataset if plan.get("source", "dataset.jsonl") == "dataset.jsonl" else cliques
            for c in source:
                if c.clique_id in split_of:
                    by_split.setdefault(split_of[c.clique_id], []).append(c)
            table = {s: vars(analytics.clique_size_stats(cs)) for s, cs in sorted(by_split.items())}
            _write_json(out_dir / "splits.json", {"splits": table, "config_hash": h})
    return counters


def _load_matrix(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path, ndmin=2)


def _run_eval(ctx: Context, h: str) -> dict:
    cfg = ctx.config.eval
    labels = [line.strip() for line in Path(cfg.labels).read_text(encoding="utf-8").splitlines() if line.strip()]
    if cfg.embeddings is not None:
        result = metrics.evaluate_embeddings(_load_matrix(cfg.embeddings), labels, cfg.noise_label, cfg.self_mask)
    else:
        sim = _load_matrix(cfg.similarity)
        mask = np.eye(len(labels), dtype=bool) if cfg.self_mask else np.zeros(sim.shape, dtype=bool)
        inst = metrics.EvalInstance(sim, labels, labels, mask, cfg.noise_label)
        result = metrics.evaluate(inst)
    _write_json(ctx.artifact("eval.json"), dict(result, config_hash=h))
    return result


def _eval_inputs(cfg: PipelineConfig) -> dict:
    if cfg.eval.labels is None:
        raise ConfigError("eval.labels", "required for the eval stage")
    source = cfg.eval.embeddings if cfg.eval.embeddings is not None else cfg.eval.similarity
    if source is None:
        raise ConfigError("eval.embeddings", "set eval.embeddings or eval.similarity")
    return {"matrix": source, "labels": cfg.eval.labels}


def _required(cfg: PipelineConfig, key: str) -> Path:
    value = getattr(cfg.paths, key)
    if value is None:
        raise ConfigError(f"paths.{key}", "required for this stage")
    return value


def _w(cfg: PipelineConfig, *names) -> dict:
    return {n: Path(cfg.paths.work_dir) / n for n in names}


SPECS: dict[str, StageSpec] = {
    "parse": StageSpec(
        lambda c: {"artists_dump": _required(c, "artists"), "releases_dump": _required(c, "releases")},
        lambda c: {}, (), _run_parse),
    "occurrences": StageSpec(
        lambda c: _w(c, "artists.jsonl", "releases.jsonl"), lambda c: {}, ("normalize",), _run_occurrences),
    "cliques": StageSpec(
        lambda c: _w(c, "occurrences.jsonl", *(("artists.jsonl",) if c.cliques.merge_overlapping else ())),
        lambda c: {}, ("cliques",), _run_cliques),
    "queries": StageSpec(
        lambda c: _w(c, "cliques.jsonl", "artists.jsonl"), lambda c: {}, (), _run_queries),
    "match": StageSpec(
        lambda c: dict(_w(c, "cliques.jsonl", "artists.jsonl"), candidates=_required(c, "candidates")),
        lambda c: {}, ("normalize", "match"), _run_match),
    "dedupe": StageSpec(
        lambda c: _w(c, "cliques.jsonl", "matches.jsonl"), lambda c: {}, (), _run_dedupe),
    "split": StageSpec(
        lambda c: dict(_w(c, _split_source(c)),
                       **(dict(_w(c, "artists.jsonl"), external_refs=c.paths.external_refs)
                          if c.paths.external_refs is not None else {})),
        lambda c: {}, ("normalize", "split"), _run_split),
    "stats": StageSpec(
        lambda c: _w(c, "cliques.jsonl"),
        lambda c: _w(c, "dataset.jsonl", "matches.jsonl", "splits.json"), ("stats",), _run_stats),
    "eval": StageSpec(_eval_inputs, lambda c: {}, ("eval",), _run_eval),
}


# -- manifest ---------------------------------------------------------------


def _write_json(path, payload) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def _read_manifest(work: Path) -> dict:
    try:
        return json.loads((work / MANIFEST).read_text())
    except (OSError, json.JSONDecodeError):
        return {}


def _output_files(ctx: Context, before: set[Path]) -> dict[str, str]:
    out = {}
    for path in sorted(ctx.work.rglob("*")):
        if path.is_file() and path.name != MANIFEST and path not in before:
            out[str(path.relative_to(ctx.work))] = file_checksum(path)
    return out


def _snapshot(ctx: Context) -> dict[Path, float]:
    return {p: p.stat().st_mtime_ns for p in ctx.work.rglob("*") if p.is_file()}


def run_stage(stage: str, config: PipelineConfig, force: bool = False, jobs: int = 1,
              graph_cache: Path | None = None) -> StageReport:
    """Run one stage, or skip it when the manifest says nothing changed.

    Raises :class:`MissingInputError` when an upstream artifact is absent
    and :class:`ConfigError` when the config lacks something the stage needs.
    """
    if stage not in SPECS:
        raise ConfigError("stage", f"unknown stage {stage!r}")
    spec = SPECS[stage]
    ctx = Context(config, jobs=jobs, graph_cache=graph_cache)
    ctx.work.mkdir(parents=True, exist_ok=True)

    inputs = {k: Path(v) for k, v in spec.inputs(config).items()}
    for name, path in inputs.items():
        if not path.exists():
            raise MissingInputError(path)
    inputs.update({k: Path(v) for k, v in spec.optional(config).items() if Path(v).exists()})
    checksums = {k: file_checksum(p) for k, p in sorted(inputs.items())}
    config_hash = config.section_hash(*spec.sections)

    manifest = _read_manifest(ctx.work)
    entry = manifest.get(stage)
    if not force and entry and entry.get("config_hash") == config_hash and entry.get("inputs") == checksums:
        outputs = entry.get("outputs", {})
        if outputs and all((ctx.work / p).exists() and file_checksum(ctx.work / p) == s
                           for p, s in outputs.items()):
            logger.info("%s: cached", stage)
            return StageReport(stage, "cached", sorted(outputs), entry.get("counters", {}))

    before = _snapshot(ctx)
    counters = spec.run(ctx, config_hash)
    after = _snapshot(ctx)
    written = {p for p, m in after.items() if before.get(p) != m}
    outputs = {str(p.relative_to(ctx.work)): file_checksum(p) for p in sorted(written)
               if p.name != MANIFEST}

    manifest = _read_manifest(ctx.work)
    manifest[stage] = {"config_hash": config_hash, "inputs": checksums, "outputs": outputs,
                       "counters": counters}
    _write_json(ctx.work / MANIFEST, manifest)
    return StageReport(stage, "ran", sorted(outputs), counters)
