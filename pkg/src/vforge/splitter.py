"""Train / validation / test splits at clique level.

Cliques that match an external reference set (by normalized title and a
shared writer name form) are pinned to the test split. Further test cliques
are drawn uniformly among those with 2-6 versions until the test split holds
``ceil(test_fraction * n_cliques)`` cliques; the rest is shuffled and cut
90/10 into train and validation.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``. Candidate
pools are sorted by ``clique_id`` before each ``permutation`` call, so a plan
depends only on the clique ids, their sizes, the reserved set and the seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .artist_graph import ArtistGraph
from .cliques import Clique
from .normalize import DEFAULT_NORMALIZER, Normalizer

logger = logging.getLogger(__name__)

TRAIN, VALIDATION, TEST = "train", "validation", "test"


@dataclass(frozen=True)
class ExternalRef:
    title: str
    writers: tuple[str, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "ExternalRef":
        return cls(title=str(d["title"]), writers=tuple(str(w) for w in d.get("writers") or ()))


@dataclass
class SplitPlan:
    assignments: dict[str, str]
    seed: int
    reserved_ids: frozenset = frozenset()
    target_test_fraction: float = 0.10
    target_val_fraction_of_dev: float = 0.10
    sample_size_range: tuple[int, int] = (2, 6)
    warnings: list[str] = field(default_factory=list)

    def ids(self, split: str) -> list[str]:
        return sorted(cid for cid, s in self.assignments.items() if s == split)

    def counts(self) -> dict[str, int]:
        return {s: len(self.ids(s)) for s in (TRAIN, VALIDATION, TEST)}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "parameters": {
                "target_test_fraction": self.target_test_fraction,
                "target_val_fraction_of_dev": self.target_val_fraction_of_dev,
                "sample_size_range": list(self.sample_size_range),
            },
            "reserved_ids": sorted(self.reserved_ids),
            "counts": self.counts(),
            "warnings": list(self.warnings),
            "assignments": dict(sorted(self.assignments.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def clique_writer_forms(clique: Clique, graph: ArtistGraph, normalizer: Normalizer | None = None) -> set[str]:
    """Name forms of every (expanded) writer credited on the clique."""
    ids = set()
    for occ in clique.occurrences():
        ids.update(occ.writer_ids_expanded or occ.writer_ids)
    forms = set()
    for aid in sorted(ids):
        if aid in graph.nodes:
            forms |= graph.name_forms(aid, normalizer)
    return forms


def match_external_refs(
    cliques: Sequence[Clique],
    refs: Sequence[ExternalRef],
    graph: ArtistGraph,
    normalizer: Normalizer | None = None,
) -> list[set[str]]:
    """For each ref, the ids of the cliques it matches."""
    norm = normalizer or DEFAULT_NORMALIZER
    by_title: dict[str, list[Clique]] = {}
    for c in cliques:
        by_title.setdefault(c.normalized_title, []).append(c)
    forms_cache: dict[str, set[str]] = {}
    out = []
    for ref in refs:
        matched = set()
        ref_forms = {norm.artist_name(w) for w in ref.writers} - {""}
        for c in by_title.get(norm.full(ref.title), ()):
            if c.clique_id not in forms_cache:
                forms_cache[c.clique_id] = clique_writer_forms(c, graph, norm)
            if ref_forms & forms_cache[c.clique_id]:
                matched.add(c.clique_id)
        out.append(matched)
    return out


def find_reserved(
    cliques: Sequence[Clique],
    external_refs: Sequence[ExternalRef],
    graph: ArtistGraph,
    normalizer: Normalizer | None = None,
) -> set[str]:
    """Clique ids matched by any external reference; unmatched refs are logged."""
    hits = match_external_refs(cliques, external_refs, graph, normalizer)
    unmatched = [ref for ref, h in zip(external_refs, hits) if not h]
    if unmatched:
        logger.info("%d of %d external references unmatched", len(unmatched), len(external_refs))
    return set().union(*hits) if hits else set()


def make_splits(
    cliques: Sequence[Clique],
    reserved: Iterable[str] = (),
    seed: int = 0,
    test_fraction: float = 0.10,
    val_fraction: float = 0.10,
    sample_size_range: tuple[int, int] = (2, 6),
) -> SplitPlan:
    sizes = {c.clique_id: c.size for c in cliques}
    reserved = frozenset(reserved)
    missing = reserved - sizes.keys()
    if missing:
        raise KeyError(f"reserved ids not among cliques: {sorted(missing)[:5]}")
    lo, hi = sample_size_range
    rng = np.random.Generator(np.random.PCG64(seed))
    warnings = []

    n_total = len(sizes)
    target = math.ceil(test_fraction * n_total - 1e-9)
    test = set(reserved)
    if len(test) > target:
        warnings.append(f"reserved cliques ({len(test)}) exceed the test target ({target})")
    pool = sorted(cid for cid, n in sizes.items() if cid not in test and lo <= n <= hi)
    need = max(0, target - len(test))
    if need > len(pool):
        warnings.append(f"sampling pool exhausted: {len(pool)} cliques for {need} test slots")
    test.update(pool[i] for i in rng.permutation(len(pool))[:need])

    dev = sorted(cid for cid in sizes if cid not in test)
    if not dev:
        warnings.append("development set is empty")
    order = rng.permutation(len(dev))
    n_val = round(val_fraction * len(dev))
    assignments = {cid: TEST for cid in test}
    for rank, i in enumerate(order):
        assignments[dev[i]] = VALIDATION if rank < n_val else TRAIN
    for w in warnings:
        logger.warning(w)
    return SplitPlan(
        assignments=assignments,
        seed=seed,
        reserved_ids=reserved,
        target_test_fraction=test_fraction,
        target_val_fraction_of_dev=val_fraction,
        sample_size_range=(lo, hi),
        warnings=warnings,
    )
