"""Artist identity graph: aliases, group memberships and name spellings.

Writer sets are expanded by following alias edges in both directions and
membership edges downward (group -> member), transitively. Membership is never
followed upward: a member's other groups are not pulled in, which would let
one prolific session player glue unrelated works together. Following nested
groups downward keeps the expansion a closure, so it is idempotent and
monotone.

Name variations are spellings, not identities; they only show up in
:meth:`ArtistGraph.name_forms`.
"""

from __future__ import annotations

import hashlib
import logging
import os
import pickle
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .ingest import ArtistRecord
from .normalize import DEFAULT_NORMALIZER, Normalizer, strip_discogs_suffix
from .unionfind import UnionFind

logger = logging.getLogger(__name__)

CACHE_VERSION = 1


@dataclass
class ArtistGraph:
    nodes: dict[int, ArtistRecord] = field(default_factory=dict)
    alias_edges: set[frozenset] = field(default_factory=set)
    membership_edges: set[tuple[int, int]] = field(default_factory=set)
    dangling: set[tuple[str, int, int]] = field(default_factory=set)
    lookups: Counter = field(default_factory=Counter, compare=False, repr=False)
    _frozen: bool = field(default=False, compare=False, repr=False)

    def add(self, record: ArtistRecord) -> None:
        if self._frozen:
            raise RuntimeError("graph is frozen")
        self.nodes[record.artist_id] = record
        aid = record.artist_id
        for other in record.alias_ids:
            if other != aid:
                self.alias_edges.add(frozenset((aid, other)))
        for member in record.member_ids:
            if member != aid:
                self.membership_edges.add((aid, member))
        for group in record.group_ids:
            if group != aid:
                self.membership_edges.add((group, aid))

    def freeze(self) -> "ArtistGraph":
        """Finish construction: index adjacency and record dangling refs."""
        self.dangling = set()
        for edge in self.alias_edges:
            a, b = sorted(edge)
            for src, dst in ((a, b), (b, a)):
                if dst not in self.nodes:
                    self.dangling.add(("alias", src, dst))
        for group, member in self.membership_edges:
            if group not in self.nodes:
                self.dangling.add(("group", member, group))
            if member not in self.nodes:
                self.dangling.add(("member", group, member))

        self._aliases: dict[int, set[int]] = {}
        uf = UnionFind()
        for edge in self.alias_edges:
            a, b = tuple(edge)
            self._aliases.setdefault(a, set()).add(b)
            self._aliases.setdefault(b, set()).add(a)
            uf.union(a, b)
        self._alias_component = {}
        for comp in uf.groups():
            frozen = frozenset(comp)
            for item in comp:
                self._alias_component[item] = frozen
        self._members: dict[int, set[int]] = {}
        for group, member in self.membership_edges:
            self._members.setdefault(group, set()).add(member)
        self._reach: dict[int, frozenset] = {}
        self._frozen = True
        return self

    @classmethod
    def from_records(cls, records: Iterable[ArtistRecord]) -> "ArtistGraph":
        graph = cls()
        for rec in records:
            graph.add(rec)
        return graph.freeze()

    # -- queries -----------------------------------------------------------

    def alias_component(self, artist_id: int) -> frozenset:
        return self._alias_component.get(artist_id, frozenset((artist_id,)))

    def members(self, artist_id: int) -> set[int]:
        return self._members.get(artist_id, set())

    def aliases(self, artist_id: int) -> set[int]:
        return self._aliases.get(artist_id, set())

    def _reachable(self, artist_id: int) -> frozenset:
        cached = self._reach.get(artist_id)
        if cached is not None:
            return cached
        seen = set()
        stack = [artist_id]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self.alias_component(node) - seen)
            stack.extend(self.members(node) - seen)
        out = frozenset(seen)
        self._reach[artist_id] = out
        return out

    def expand(self, ids: Iterable[int]) -> frozenset:
        if not self._frozen:
            raise RuntimeError("freeze() the graph before expanding")
        out = set()
        for aid in ids:
            if aid not in self.nodes:
                self.lookups["dangling"] += 1
            out |= self._reachable(aid)
        return frozenset(out)

    def display_name(self, artist_id: int) -> str:
        rec = self.nodes.get(artist_id)
        if rec is None or not rec.name:
            return f"#{artist_id}"
        return strip_discogs_suffix(rec.name)

    def name_forms(self, artist_id: int, normalizer: Normalizer | None = None) -> set[str]:
        """Matching-mode spellings of an artist and its direct aliases."""
        norm = normalizer or DEFAULT_NORMALIZER
        rec = self.nodes.get(artist_id)
        if rec is None:
            logger.warning("name_forms: unknown artist id %s", artist_id)
            return set()
        out = set()
        for aid in [artist_id, *sorted(self.aliases(artist_id))]:
            node = self.nodes.get(aid)
            if node is None:
                continue
            for name in [node.name, *node.name_variations]:
                form = norm.artist_name(name)
                if form:
                    out.add(form)
        return out


def expand_writer_set(ids, graph: ArtistGraph) -> frozenset:
    """Writer ids plus alias closure and (nested) group members.

    Ids missing from the graph stay in the output and are tallied in
    ``graph.lookups["dangling"]``.
    """
    return graph.expand(ids)


def name_forms(artist_id: int, graph: ArtistGraph, normalizer: Normalizer | None = None) -> set[str]:
    return graph.name_forms(artist_id, normalizer)


# -- on-disk cache -----------------------------------------------------------


def file_checksum(path, algo: str = "sha256") -> str:
    h = hashlib.new(algo)
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def save_graph(graph: ArtistGraph, path, checksum: str) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        pickle.dump({"version": CACHE_VERSION, "checksum": checksum, "graph": graph}, fh,
                    protocol=pickle.HIGHEST_PROTOCOL)
    os.replace(tmp, path)


def load_graph(path, checksum: str) -> ArtistGraph | None:
    """Return the cached graph, or None when missing or stale."""
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError):
        return None
    if payload.get("version") != CACHE_VERSION or payload.get("checksum") != checksum:
        return None
    return payload["graph"]
