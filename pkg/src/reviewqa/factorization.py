"""Item x extraction count matrix and its non-negative factorization.

The matrix M holds, for item i and extraction j, the number of distinct
reviews of i that contain j.  Factors are learned with multiplicative
updates minimizing the Frobenius reconstruction error

    M ~ X E^T,   X >= 0, E >= 0

where X rows embed items and E rows embed extractions.  Each full
iteration updates X first (with the current E), then E (with the new
X); both half-steps keep the error non-increasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MatrixEmptyError(ValueError):
    pass


class FactorizationError(RuntimeError):
    """Numerical failure inside the update loop."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass
class ExtractionMatrix:
    """Sparse non-negative count matrix in coordinate form."""

    row_labels: list[str]  # item ids
    col_labels: list[str]  # canonical extraction keys
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if len(set(self.row_labels)) != len(self.row_labels):
            raise ValueError("duplicate row labels")
        if len(set(self.col_labels)) != len(self.col_labels):
            raise ValueError("duplicate column labels")
        if np.any(self.vals <= 0):
            raise ValueError("stored cells must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.row_labels), len(self.col_labels))

    def toarray(self) -> np.ndarray:
        dense = np.zeros(self.shape, dtype=np.float64)
        dense[self.rows, self.cols] = self.vals
        return dense


def build_matrix(
    vocab,
    collection,
    min_item_reviews: int = 10000,
    min_extraction_reviews: int = 5000,
) -> ExtractionMatrix:
    """Restrict to frequent items/extractions and assemble the counts.

    Items must have strictly more than ``min_item_reviews`` reviews and
    extractions strictly more than ``min_extraction_reviews`` distinct
    reviews; cell (i, j) counts distinct reviews of item i containing
    extraction j.
    """
    items = sorted(
        iid
        for iid, rids in collection.index.items()
        if len(rids) > min_item_reviews
    )
    keys = sorted(
        key
        for key, entry in vocab.entries.items()
        if entry.review_frequency > min_extraction_reviews
    )
    row_of = {iid: i for i, iid in enumerate(items)}
    rows, cols, vals = [], [], []
    for j, key in enumerate(keys):
        for iid, count in vocab.entries[key].per_item_counts.items():
            i = row_of.get(iid)
            if i is not None and count > 0:
                rows.append(i)
                cols.append(j)
                vals.append(float(count))
    if not items or not keys or not vals:
        raise MatrixEmptyError(
            "matrix empty after filtering "
            f"(min_item_reviews={min_item_reviews}, "
            f"min_extraction_reviews={min_extraction_reviews})"
        )
    return ExtractionMatrix(items, keys, np.array(rows), np.array(cols), np.array(vals))


@dataclass
class FactorModel:
    item_labels: list[str]
    extraction_labels: list[str]
    item_embeddings: np.ndarray  # (n_items, K)
    extraction_embeddings: np.ndarray  # (n_extractions, K)
    k: int
    seed: int
    loss_history: list[float] = field(default_factory=list)

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if self.item_embeddings.shape != (len(self.item_labels), self.k):
            raise ValueError("item embedding shape mismatch")
        if self.extraction_embeddings.shape != (len(self.extraction_labels), self.k):
            raise ValueError("extraction embedding shape mismatch")
        if np.any(self.item_embeddings < 0) or np.any(self.extraction_embeddings < 0):
            raise ValueError("embeddings must be non-negative")
        if len(set(self.item_labels)) != len(self.item_labels):
            raise ValueError("duplicate item labels")
        if len(set(self.extraction_labels)) != len(self.extraction_labels):
            raise ValueError("duplicate extraction labels")


_DENOM_EPS = 1e-12


def nmf(
    matrix: ExtractionMatrix,
    k: int = 20,
    max_iters: int = 500,
    seed: int = 0,
    tol: float = 1e-5,
) -> FactorModel:
    """Factorize with Lee-Seung multiplicative updates.

    Deterministic given (matrix, k, seed, max_iters, tol).  Stops early
    once the relative improvement of the Frobenius error drops below
    ``tol``; pass ``tol=0`` to always run ``max_iters`` iterations.
    """
    m, n = matrix.shape
    if k < 1 or k > min(m, n):
        raise ValueError(f"K={k} out of range for a {m}x{n} matrix")
    V = matrix.toarray()
    rng = np.random.default_rng(seed)
    scale = np.sqrt(V.mean() / k)
    # 1 - random() is uniform on (0, 1]: no exactly-zero factors at init
    X = (1.0 - rng.random((m, k))) * scale
    E = (1.0 - rng.random((n, k))) * scale

    def frob_err(X, E):
        return float(np.linalg.norm(V - X @ E.T, "fro"))

    history = [frob_err(X, E)]
    for it in range(max_iters):
        X *= (V @ E) / (X @ (E.T @ E) + _DENOM_EPS)
        E *= (V.T @ X) / (E @ (X.T @ X) + _DENOM_EPS)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(E))):
            raise FactorizationError("non-finite factor entries", it)
        if np.any(X < 0) or np.any(E < 0):
            raise FactorizationError("negative factor entries", it)
        err = frob_err(X, E)
        history.append(err)
        prev = history[-2]
        if prev > 0 and (prev - err) / prev < tol:
            break
    model = FactorModel(
        item_labels=list(matrix.row_labels),
        extraction_labels=list(matrix.col_labels),
        item_embeddings=X,
        extraction_embeddings=E,
        k=k,
        seed=seed,
        loss_history=history,
    )
    model.validate()
    return model


def reconstruct(model: FactorModel, i: int, j: int) -> float:
    """Dot product of item row i with extraction row j."""
    if not (0 <= i < model.item_embeddings.shape[0]):
        raise IndexError(f"item index {i} out of range")
    if not (0 <= j < model.extraction_embeddings.shape[0]):
        raise IndexError(f"extraction index {j} out of range")
    return float(np.dot(model.item_embeddings[i], model.extraction_embeddings[j]))


FORMAT_VERSION = 1


def save_model(model: FactorModel, path: str | Path) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "k": model.k,
        "seed": model.seed,
        "item_labels": model.item_labels,
        "extraction_labels": model.extraction_labels,
        "item_embeddings": model.item_embeddings.tolist(),
        "extraction_embeddings": model.extraction_embeddings.tolist(),
        "loss_history": model.loss_history,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> FactorModel:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported factor model version: {raw.get('format_version')}")
    model = FactorModel(
        item_labels=list(raw["item_labels"]),
        extraction_labels=list(raw["extraction_labels"]),
        item_embeddings=np.array(raw["item_embeddings"], dtype=np.float64),
        extraction_embeddings=np.array(raw["extraction_embeddings"], dtype=np.float64),
        k=int(raw["k"]),
        seed=int(raw["seed"]),
        loss_history=[float(x) for x in raw["loss_history"]],
    )
    model.validate()
    return model
