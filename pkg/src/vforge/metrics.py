"""MAP and MR1 for version retrieval.

Candidates are ranked by descending similarity; equal similarities keep
ascending candidate index order. Queries labelled as noise (works with no
other version) are not evaluated, but noise items stay in every candidate
list as distractors. Older evaluation code averaged MR1 over noise queries
too, which lowers the score without measuring anything.

Sums go through :func:`math.fsum`, which is correctly rounded and therefore
independent of the order in which per-query values arrive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np


class UnanswerableQueryError(ValueError):
    def __init__(self, query_index):
        super().__init__(f"unanswerable-query: query {query_index} has no relevant candidate")
        self.query_index = query_index


@dataclass
class EvalInstance:
    """Similarity matrix (queries x candidates) with clique labels.

    ``self_mask`` is a boolean matrix of excluded pairs. When omitted and the
    query and candidate label lists are the same sequence, the diagonal is
    masked (each item would otherwise retrieve itself).
    """

    similarity: np.ndarray
    query_labels: Sequence[Hashable]
    candidate_labels: Sequence[Hashable]
    self_mask: np.ndarray | None = None
    noise_label: Hashable | None = None

    def __post_init__(self):
        self.similarity = np.asarray(self.similarity, dtype=float)
        n_q, n_c = self.similarity.shape
        if len(self.query_labels) != n_q or len(self.candidate_labels) != n_c:
            raise ValueError("similarity shape does not match label lengths")
        if self.self_mask is None:
            if n_q == n_c and list(self.query_labels) == list(self.candidate_labels):
                self.self_mask = np.eye(n_q, dtype=bool)
            else:
                self.self_mask = np.zeros((n_q, n_c), dtype=bool)
        else:
            self.self_mask = np.asarray(self.self_mask, dtype=bool)
            if self.self_mask.shape != self.similarity.shape:
                raise ValueError("self_mask shape does not match similarity")


def rank_row(scores: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Candidate indices by descending score, ties by ascending index."""
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    if mask is not None:
        order = order[~np.asarray(mask, dtype=bool)[order]]
    return order


def relevant_ranks(scores, query_label, candidate_labels, mask=None, noise_label=None) -> np.ndarray:
    """1-based ranks of the relevant candidates of one query."""
    order = rank_row(scores, mask)
    labels = np.asarray(candidate_labels)[order]
    hits = labels == query_label
    if noise_label is not None:
        hits &= labels != noise_label
    return np.flatnonzero(hits) + 1


def average_precision(ranks: np.ndarray) -> float:
    ranks = np.asarray(ranks)
    return math.fsum((k + 1) / r for k, r in enumerate(ranks.tolist())) / len(ranks)


@dataclass
class RetrievalAccumulator:
    """Streaming evaluation, one query row at a time."""

    average_precisions: list[float] = field(default_factory=list)
    first_ranks: list[int] = field(default_factory=list)
    skipped_noise: int = 0

    def add(self, scores, query_label, candidate_labels, mask=None, noise_label=None, query_index=None):
        if noise_label is not None and query_label == noise_label:
            self.skipped_noise += 1
            return
        ranks = relevant_ranks(scores, query_label, candidate_labels, mask, noise_label)
        if len(ranks) == 0:
            raise UnanswerableQueryError(query_index)
        self.average_precisions.append(average_precision(ranks))
        self.first_ranks.append(int(ranks[0]))

    @property
    def n_queries(self) -> int:
        return len(self.first_ranks)

    def mean_average_precision(self) -> float:
        if not self.average_precisions:
            raise ValueError("no queries evaluated")
        return math.fsum(self.average_precisions) / len(self.average_precisions)

    def mean_rank_first_relevant(self) -> float:
        if not self.first_ranks:
            raise ValueError("no queries evaluated")
        return math.fsum(self.first_ranks) / len(self.first_ranks)


def _accumulate(inst: EvalInstance) -> RetrievalAccumulator:
    acc = RetrievalAccumulator()
    candidate_labels = np.asarray(inst.candidate_labels)
    for i, label in enumerate(inst.query_labels):
        acc.add(inst.similarity[i], label, candidate_labels, inst.self_mask[i],
                inst.noise_label, query_index=i)
    return acc


def mean_average_precision(inst: EvalInstance) -> float:
    return _accumulate(inst).mean_average_precision()


def mean_rank_first_relevant(inst: EvalInstance) -> float:
    return _accumulate(inst).mean_rank_first_relevant()


def evaluate(inst: EvalInstance) -> dict:
    acc = _accumulate(inst)
    return {
        "MAP": acc.mean_average_precision(),
        "MR1": acc.mean_rank_first_relevant(),
        "queries": acc.n_queries,
        "noise_queries_skipped": acc.skipped_noise,
    }


def evaluate_embeddings(embeddings, labels: Sequence[Hashable], noise_label=None,
                        self_mask: bool = True, block: int = 1024) -> dict:
    """Cosine-similarity retrieval over all items, in row blocks.

    Every item is a query against all items, so the dense square matrix is
    never materialized.
    """
    emb = np.asarray(embeddings, dtype=float)
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = emb / np.where(norms == 0, 1.0, norms)
    acc = RetrievalAccumulator()
    n = len(emb)
    labels = np.asarray(labels)
    if len(labels) != n:
        raise ValueError("labels and embeddings differ in length")
    for start in range(0, n, block):
        sims = emb[start:start + block] @ emb.T
        for off, row in enumerate(sims):
            i = start + off
            mask = None
            if self_mask:
                mask = np.zeros(n, dtype=bool)
                mask[i] = True
            acc.add(row, labels[i], labels, mask, noise_label, query_index=i)
    return {
        "MAP": acc.mean_average_precision(),
        "MR1": acc.mean_rank_first_relevant(),
        "queries": acc.n_queries,
        "noise_queries_skipped": acc.skipped_noise,
    }

