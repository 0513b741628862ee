"""Weighted neighbor graph over extractions, pruning, and topic selection.

Neighbors are ranked by cosine similarity of the factorized extraction
embeddings (exact, no approximate search).  Topics are the extractions
that survive four gates: enough high-cosine neighbors that are not mere
rewordings, above-median corpus frequency, and at least one neighbor
more frequent than the extraction itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .factorization import FactorModel
from .opinions import ExtractionVocabulary


@dataclass(frozen=True)
class Neighbor:
    key: str
    weight: float


@dataclass
class NeighborhoodModel:
    neighbors: dict[str, list[Neighbor]] = field(default_factory=dict)

    def keys(self):
        return self.neighbors.keys()

    def __getitem__(self, key: str) -> list[Neighbor]:
        return self.neighbors[key]


@dataclass(frozen=True)
class Topic:
    extraction_key: str
    surviving_neighbors: tuple[str, ...]
    frequency: int

    def __post_init__(self):
        if not self.surviving_neighbors:
            raise ValueError("a topic must keep at least one neighbor")


@dataclass(frozen=True)
class TopicReviewPair:
    topic_key: str
    review_id: str
    matched_neighbor: str


def build_neighborhood(model: FactorModel, k_max: int = 10) -> NeighborhoodModel:
    """Exact top-k cosine neighbors for every extraction.

    Extractions with an all-zero embedding row get an empty neighbor
    list and contribute similarity 0 as candidates.
    """
    E = model.extraction_embeddings
    keys = model.extraction_labels
    norms = np.linalg.norm(E, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = E / safe[:, None]
    sims = unit @ unit.T
    sims[norms == 0, :] = 0.0
    sims[:, norms == 0] = 0.0

    out: dict[str, list[Neighbor]] = {}
    for i, key in enumerate(keys):
        if norms[i] == 0:
            out[key] = []
            continue
        ranked = sorted(
            ((float(sims[i, j]), keys[j]) for j in range(len(keys)) if j != i),
            key=lambda wk: (-wk[0], wk[1]),
        )
        out[key] = [Neighbor(k, w) for w, k in ranked[:k_max]]
    return NeighborhoodModel(neighbors=out)


def jaccard_similarity(key_a: str, key_b: str) -> float:
    """Token-level Jaccard over the lowercased words of two extractions."""
    words_a = set(key_a.replace("|", " ").lower().split())
    words_b = set(key_b.replace("|", " ").lower().split())
    if not words_a and not words_b:
        return 1.0
    union = words_a | words_b
    return len(words_a & words_b) / len(union)


def load_word_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read a text table of word vectors: word then floats, one per line."""
    table: dict[str, np.ndarray] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split()
            if len(parts) < 2:
                continue
            table[parts[0].lower()] = np.array([float(x) for x in parts[1:]])
    return table


def embedding_similarity(table: dict[str, np.ndarray]) -> Callable[[str, str], float]:
    """Cosine over mean-pooled word vectors of the extraction words."""

    def pooled(key: str) -> np.ndarray | None:
        vecs = [table[w] for w in key.replace("|", " ").lower().split() if w in table]
        if not vecs:
            return None
        return np.mean(vecs, axis=0)

    def sim(key_a: str, key_b: str) -> float:
        va, vb = pooled(key_a), pooled(key_b)
        if va is None or vb is None:
            return 0.0
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na == 0 or nb == 0:
            return 0.0
        # clip so fp noise cannot leave [0, 1] for parallel vectors
        return float(min(1.0, max(0.0, np.dot(va, vb) / (na * nb))))

    return sim


def make_semantic_sim(
    word_vectors_path: str | Path | None = None,
) -> Callable[[str, str], float]:
    if word_vectors_path:
        return embedding_similarity(load_word_vectors(word_vectors_path))
    return jaccard_similarity


def prune_neighbors(
    model: NeighborhoodModel,
    cos_min: float = 0.8,
    sem_max: float = 0.975,
    semantic_sim: Callable[[str, str], float] = jaccard_similarity,
) -> NeighborhoodModel:
    """Keep neighbors with weight >= cos_min that are not near-rewordings.

    A neighbor is dropped when its cosine weight is below ``cos_min`` or
    its semantic similarity to the extraction exceeds ``sem_max``.
    Ordering of kept neighbors is preserved.
    """
    pruned: dict[str, list[Neighbor]] = {}
    for key, neighbors in model.neighbors.items():
        pruned[key] = [
            nb
            for nb in neighbors
            if nb.weight >= cos_min and semantic_sim(key, nb.key) <= sem_max
        ]
    return NeighborhoodModel(neighbors=pruned)


def median_frequency(vocab: ExtractionVocabulary) -> int:
    """Lower median over all extraction frequencies in the vocabulary."""
    freqs = sorted(e.review_frequency for e in vocab.entries.values())
    if not freqs:
        raise ValueError("empty vocabulary has no median frequency")
    return freqs[(len(freqs) - 1) // 2]


def select_topics(
    pruned: NeighborhoodModel,
    vocab: ExtractionVocabulary,
    min_neighbors: int = 5,
) -> list[Topic]:
    """Apply the four topic gates and return topics sorted by key."""
    median = median_frequency(vocab)
    topics = []
    for key in sorted(pruned.keys()):
        neighbors = pruned[key]
        if len(neighbors) <= min_neighbors:
            continue
        freq = vocab.frequency(key)
        if freq <= median:
            continue
        if not any(vocab.frequency(nb.key) > freq for nb in neighbors):
            continue
        topics.append(
            Topic(
                extraction_key=key,
                surviving_neighbors=tuple(nb.key for nb in neighbors),
                frequency=freq,
            )
        )
    return topics


def pair_reviews(
    topic: Topic,
    collection,
    vocab: ExtractionVocabulary,
    max_pairs: int,
) -> list[TopicReviewPair]:
    """Pair a topic with reviews that mention one of its neighbors.

    Neighbors are tried in their stored order (descending weight);
    within a neighbor, reviews are taken in ascending review id.  Each
    review is paired at most once, via its strongest matching neighbor.
    """
    pairs: list[TopicReviewPair] = []
    used: set[str] = set()
    for nb_key in topic.surviving_neighbors:
        entry = vocab.entries.get(nb_key)
        if entry is None:
            continue
        for rid in sorted(entry.review_ids):
            if rid in used or rid not in collection:
                continue
            used.add(rid)
            pairs.append(
                TopicReviewPair(
                    topic_key=topic.extraction_key,
                    review_id=rid,
                    matched_neighbor=nb_key,
                )
            )
            if len(pairs) >= max_pairs:
                return pairs
    return pairs


def save_neighborhood(model: NeighborhoodModel, path: str | Path) -> None:
    payload = {
        "format_version": 1,
        "neighbors": {
            key: [[nb.key, nb.weight] for nb in nbs]
            for key, nbs in sorted(model.neighbors.items())
        },
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_neighborhood(path: str | Path) -> NeighborhoodModel:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return NeighborhoodModel(
        neighbors={
            key: [Neighbor(k, float(w)) for k, w in nbs]
            for key, nbs in raw["neighbors"].items()
        }
    )


def write_neighbor_report(model: NeighborhoodModel, path: str | Path) -> None:
    """Tab-separated (extraction, neighbor, weight) listing for inspection."""
    lines = ["extraction\tneighbor\tweight"]
    for key, nbs in sorted(model.neighbors.items()):
        for nb in nbs:
            lines.append(f"{key}\t{nb.key}\t{nb.weight:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_topics(topics: list[Topic], path: str | Path) -> None:
    payload = {
        "format_version": 1,
        "topics": [
            {
                "extraction_key": t.extraction_key,
                "surviving_neighbors": list(t.surviving_neighbors),
                "frequency": t.frequency,
            }
            for t in topics
        ],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_topics(path: str | Path) -> list[Topic]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        Topic(
            extraction_key=t["extraction_key"],
            surviving_neighbors=tuple(t["surviving_neighbors"]),
            frequency=int(t["frequency"]),
        )
        for t in raw["topics"]
    ]
