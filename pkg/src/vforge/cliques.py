"""Clique and version building.

Track occurrences are partitioned twice: first by exact equality of the
full-mode normalized title, then into connected components of the
"expanded writer sets intersect" relation inside each title group. Within a
component, occurrences performed by the same artist set form a version;
components with fewer than two versions are discarded.

Every drop is counted under a reason code, so that::

    sum(len(c.occurrences) for c in cliques) + sum(drops.values()) == n_input
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .artist_graph import ArtistGraph
from .ingest import ReleaseRecord
from .normalize import DEFAULT_NORMALIZER, Normalizer
from .unionfind import UnionFind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrackOccurrence:
    release_id: int
    position: str
    raw_title: str
    normalized_title: str
    performer_ids: tuple[int, ...]
    featuring_ids: tuple[int, ...] = ()
    writer_ids: tuple[int, ...] = ()
    writer_ids_expanded: frozenset = frozenset()
    genres: tuple[str, ...] = ()
    styles: tuple[str, ...] = ()
    year: int | None = None
    country: str | None = None

    @property
    def key(self) -> str:
        return f"{self.release_id}:{self.position}"

    @property
    def sort_key(self) -> tuple:
        return (self.release_id, self.position)

    @property
    def artist_key(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.performer_ids) | set(self.featuring_ids)))

    def to_dict(self) -> dict:
        return {
            "release_id": self.release_id,
            "position": self.position,
            "raw_title": self.raw_title,
            "normalized_title": self.normalized_title,
            "performer_ids": list(self.performer_ids),
            "featuring_ids": list(self.featuring_ids),
            "writer_ids": list(self.writer_ids),
            "writer_ids_expanded": sorted(self.writer_ids_expanded),
            "genres": list(self.genres),
            "styles": list(self.styles),
            "year": self.year,
            "country": self.country,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrackOccurrence":
        return cls(
            release_id=int(d["release_id"]),
            position=d["position"],
            raw_title=d["raw_title"],
            normalized_title=d["normalized_title"],
            performer_ids=tuple(d["performer_ids"]),
            featuring_ids=tuple(d.get("featuring_ids") or ()),
            writer_ids=tuple(d.get("writer_ids") or ()),
            writer_ids_expanded=frozenset(d.get("writer_ids_expanded") or ()),
            genres=tuple(d.get("genres") or ()),
            styles=tuple(d.get("styles") or ()),
            year=d.get("year"),
            country=d.get("country"),
        )


@dataclass
class Version:
    version_id: str
    artist_key: tuple[int, ...]
    occurrences: list[TrackOccurrence]
    urls: list[str] = field(default_factory=list)

    @property
    def performer_ids(self) -> tuple[int, ...]:
        ids = set()
        for occ in self.occurrences:
            ids.update(occ.performer_ids)
        return tuple(sorted(ids))

    @property
    def featuring_ids(self) -> tuple[int, ...]:
        ids = set()
        for occ in self.occurrences:
            ids.update(occ.featuring_ids)
        return tuple(sorted(ids - set(self.performer_ids)))

    def to_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "artist_key": list(self.artist_key),
            "urls": list(self.urls),
            "occurrences": [o.to_dict() for o in self.occurrences],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Version":
        return cls(
            version_id=d["version_id"],
            artist_key=tuple(d["artist_key"]),
            occurrences=[TrackOccurrence.from_dict(o) for o in d["occurrences"]],
            urls=list(d.get("urls") or []),
        )


@dataclass
class Clique:
    clique_id: str
    normalized_title: str
    versions: list[Version]

    @property
    def size(self) -> int:
        return len(self.versions)

    def occurrences(self) -> Iterator[TrackOccurrence]:
        for v in self.versions:
            yield from v.occurrences

    def to_dict(self) -> dict:
        return {
            "clique_id": self.clique_id,
            "normalized_title": self.normalized_title,
            "versions": [v.to_dict() for v in self.versions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Clique":
        return cls(
            clique_id=d["clique_id"],
            normalized_title=d["normalized_title"],
            versions=[Version.from_dict(v) for v in d["versions"]],
        )


def _digest(*parts) -> str:
    return hashlib.sha1("\x1f".join(map(str, parts)).encode("utf-8")).hexdigest()[:16]


def clique_id_for(normalized_title: str, first: TrackOccurrence) -> str:
    return "c" + _digest(normalized_title, first.key)


def version_id_for(clique_id: str, artist_key: Sequence[int]) -> str:
    return "v" + _digest(clique_id, ",".join(map(str, artist_key)))


# -- occurrences ------------------------------------------------------------


def extract_occurrences(
    releases: Iterable[ReleaseRecord],
    graph: ArtistGraph,
    normalizer: Normalizer | None = None,
    drops: Counter | None = None,
) -> Iterator[TrackOccurrence]:
    """One occurrence per (release, track).

    Performers come from the track credits when present, else from the
    release credits; featuring credits are kept separately. Writers come from
    track-level Written-By credits when present, else from release-level
    ones, and are expanded through ``graph``. Tracks are dropped with reason
    ``empty-title``, ``no-performer`` or ``no-writer``.
    """
    norm = normalizer or DEFAULT_NORMALIZER
    drops = drops if drops is not None else Counter()
    for rel in releases:
        release_artists = tuple(rel.release_artist_ids)
        for track in rel.tracks:
            title = norm.full(track.title)
            if not title:
                drops["empty-title"] += 1
                continue
            performers = tuple(track.track_artist_ids) or release_artists
            if not performers:
                drops["no-performer"] += 1
                continue
            writers = tuple(track.track_writer_ids) or tuple(rel.release_writer_ids)
            if not writers:
                drops["no-writer"] += 1
                continue
            yield TrackOccurrence(
                release_id=rel.release_id,
                position=track.position,
                raw_title=track.title,
                normalized_title=title,
                performer_ids=performers,
                featuring_ids=tuple(a for a in track.featuring_artist_ids if a not in performers),
                writer_ids=writers,
                writer_ids_expanded=graph.expand(writers),
                genres=tuple(rel.genres),
                styles=tuple(rel.styles),
                year=rel.year,
                country=rel.country,
            )


# -- versions ---------------------------------------------------------------


def group_versions(
    members: Sequence[TrackOccurrence],
    merge_overlapping: bool = False,
    graph: ArtistGraph | None = None,
    clique_id: str = "",
) -> list[Version]:
    """Group clique members by performing artist set.

    With ``merge_overlapping``, artist keys whose expanded id sets (aliases
    and group members, via ``graph``) intersect are merged into one version,
    so "X" and "The X Quintet" with X as a member end up together.
    """
    by_key: dict[tuple, list[TrackOccurrence]] = defaultdict(list)
    for occ in members:
        by_key[occ.artist_key].append(occ)

    if merge_overlapping and len(by_key) > 1:
        keys = sorted(by_key)
        expanded = {k: (graph.expand(k) if graph is not None else frozenset(k)) for k in keys}
        uf = UnionFind(keys)
        owner: dict[int, tuple] = {}
        for k in keys:
            for aid in expanded[k]:
                if aid in owner:
                    uf.union(owner[aid], k)
                else:
                    owner[aid] = k
        merged: dict[tuple, list[TrackOccurrence]] = {}
        for comp in uf.groups():
            key = tuple(sorted(set().union(*comp)))
            merged[key] = [o for k in comp for o in by_key[k]]
        by_key = merged

    versions = []
    for key, occs in by_key.items():
        versions.append(
            Version(
                version_id=version_id_for(clique_id, key),
                artist_key=key,
                occurrences=sorted(occs, key=lambda o: o.sort_key),
            )
        )
    versions.sort(key=lambda v: v.version_id)
    return versions


# -- cliques ----------------------------------------------------------------


def writer_components(members: Sequence[TrackOccurrence]) -> list[list[TrackOccurrence]]:
    """Connected components under shared expanded writers (inverted index)."""
    uf = UnionFind(range(len(members)))
    first_holder: dict[int, int] = {}
    for i, occ in enumerate(members):
        for w in occ.writer_ids_expanded:
            j = first_holder.setdefault(w, i)
            if j != i:
                uf.union(i, j)
    return [[members[i] for i in comp] for comp in uf.groups()]


def _cliques_for_title(args) -> tuple[list[Clique], int]:
    title, members, merge_overlapping, graph = args
    out, dropped = [], 0
    for comp in writer_components(members):
        comp.sort(key=lambda o: o.sort_key)
        cid = clique_id_for(title, comp[0])
        versions = group_versions(comp, merge_overlapping, graph, cid)
        if len(versions) < 2:
            dropped += len(comp)
            continue
        out.append(Clique(clique_id=cid, normalized_title=title, versions=versions))
    return out, dropped


def build_cliques(
    occurrences: Iterable[TrackOccurrence],
    merge_overlapping: bool = False,
    graph: ArtistGraph | None = None,
    drops: Counter | None = None,
    jobs: int = 1,
) -> list[Clique]:
    """Partition occurrences into cliques, sorted by ``clique_id``.

    Occurrences of components that end up with a single version are counted
    under ``drops["single-version"]``. Title groups are independent, so
    ``jobs > 1`` fans them out to worker processes.
    """
    drops = drops if drops is not None else Counter()
    groups: dict[str, list[TrackOccurrence]] = defaultdict(list)
    seen = set()
    for occ in occurrences:
        if occ.key in seen:
            drops["duplicate-occurrence"] += 1
            continue
        seen.add(occ.key)
        groups[occ.normalized_title].append(occ)

    work = [
        (title, sorted(members, key=lambda o: o.sort_key), merge_overlapping, graph)
        for title, members in sorted(groups.items())
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cliques_for_title, work, chunksize=max(1, len(work) // (jobs * 4))))
    else:
        results = [_cliques_for_title(w) for w in work]

    cliques = []
    for found, dropped in results:
        cliques.extend(found)
        if dropped:
            drops["single-version"] += dropped
    cliques.sort(key=lambda c: c.clique_id)
    return cliques
