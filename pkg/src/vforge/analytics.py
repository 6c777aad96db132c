"""Dataset statistics: clique sizes, genre/style and duration histograms,
artist counts.

Genres and styles are release-level annotations copied onto tracks; they are
an approximation for individual versions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .cliques import Clique, Version

GENRE_NOTE = "genre/style labels are release-level, approximated to tracks"


class EmptyDatasetError(ValueError):
    def __init__(self):
        super().__init__("empty-dataset")


@dataclass(frozen=True)
class CliqueSizeStats:
    count: int
    versions: int
    max: int
    mean: float
    mean_rounded: int
    median: int


def clique_size_stats(cliques: Sequence[Clique]) -> CliqueSizeStats:
    """Sizes are versions per clique; the median is the lower middle."""
    sizes = sorted(c.size for c in cliques)
    if not sizes:
        raise EmptyDatasetError()
    total = sum(sizes)
    mean = total / len(sizes)
    return CliqueSizeStats(
        count=len(sizes),
        versions=total,
        max=sizes[-1],
        mean=mean,
        mean_rounded=math.floor(mean + 0.5),
        median=sizes[(len(sizes) - 1) // 2],
    )


def _term_distribution(versions: Iterable[Version], attr: str) -> list[tuple[str, int]]:
    counts: Counter = Counter()
    for v in versions:
        terms = set()
        for occ in v.occurrences:
            terms.update(getattr(occ, attr))
        counts.update(terms)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def genre_distribution(versions: Iterable[Version]) -> list[tuple[str, int]]:
    """Versions per genre, each version counted once per distinct genre."""
    return _term_distribution(versions, "genres")


def style_distribution(versions: Iterable[Version]) -> list[tuple[str, int]]:
    return _term_distribution(versions, "styles")


@dataclass
class Histogram:
    bin_width: float
    bins: dict[int, int] = field(default_factory=dict)
    skipped: int = 0

    @property
    def total(self) -> int:
        return sum(self.bins.values())


def duration_histogram(durations: Iterable[float], bin_width_s: float) -> Histogram:
    """Fixed-width bins from 0, keyed by bin index; empty bins are omitted."""
    if bin_width_s <= 0:
        raise ValueError("bin width must be positive")
    hist = Histogram(bin_width=bin_width_s)
    counts: Counter = Counter()
    for d in durations:
        if d is None or d < 0:
            hist.skipped += 1
            continue
        counts[int(d // bin_width_s)] += 1
    hist.bins = dict(sorted(counts.items()))
    return hist


def primary_durations(matches: Iterable[dict], keep: set[str] | None = None) -> list[int]:
    """Durations of each version's primary (first accepted) video.

    ``matches`` are records of ``matches.jsonl``; ``keep`` restricts to a set
    of version ids.
    """
    out = []
    for rec in matches:
        if keep is not None and rec["version_id"] not in keep:
            continue
        accepted = rec.get("accepted") or []
        if not accepted:
            continue
        durations = rec.get("durations") or {}
        out.append(durations.get(accepted[0], -1))
    return out


def artist_count(cliques: Iterable[Clique], mode: str = "one-per-version") -> int:
    """Distinct artists when each version contributes one artist.

    The artist of a version is its lowest performer id; group members added
    by writer expansion never enter performer sets.
    """
    if mode != "one-per-version":
        raise ValueError(f"unsupported mode {mode!r}")
    firsts = set()
    for c in cliques:
        for v in c.versions:
            performers = v.performer_ids or v.artist_key
            if performers:
                firsts.add(performers[0])
    return len(firsts)


# -- reports ----------------------------------------------------------------


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def dataset_report(cliques: Sequence[Clique], durations: Sequence[float] | None = None,
                   bin_width_s: float = 30) -> dict:
    versions = [v for c in cliques for v in c.versions]
    stats = clique_size_stats(cliques)
    size_hist = Counter(c.size for c in cliques)
    report = {
        "note": GENRE_NOTE,
        "clique_sizes": asdict(stats),
        "clique_size_histogram": dict(sorted(size_hist.items())),
        "artists": artist_count(cliques),
        "genres": genre_distribution(versions),
        "styles": style_distribution(versions),
    }
    if durations is not None:
        hist = duration_histogram(durations, bin_width_s)
        report["durations"] = {
            "bin_width_s": bin_width_s,
            "bins": hist.bins,
            "skipped": hist.skipped,
        }
    return report


def write_report(report: dict, out_dir, prefix: str, config_hash: str = "") -> list[Path]:
    """Write ``<prefix>.json`` and plot-ready CSVs; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = dict(report, config_hash=config_hash)
    files = {
        f"{prefix}.json": json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        f"{prefix}_clique_sizes.csv": _csv(sorted(report["clique_size_histogram"].items()),
                                           ["versions_per_clique", "cliques"]),
        f"{prefix}_genres.csv": _csv(report["genres"], ["genre", "versions"]),
        f"{prefix}_styles.csv": _csv(report["styles"], ["style", "versions"]),
    }
    if "durations" in report:
        width = report["durations"]["bin_width_s"]
        rows = [(b * width, (b + 1) * width, n) for b, n in report["durations"]["bins"].items()]
        files[f"{prefix}_durations.csv"] = _csv(rows, ["start_s", "end_s", "versions"])
    paths = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
