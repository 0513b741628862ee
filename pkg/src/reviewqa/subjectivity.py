"""Sentence subjectivity scoring and the top-N sentiment experiment.

Two scorers: a lexicon baseline (mean word weight, 0.5 when nothing
matches) and a trainable linear bag-of-n-grams classifier.  The
sentiment experiment trains the same classifier class on documents
filtered to their top-N most subjective (or objective) sentences and
compares against the all-sentences baseline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .corpus import tokenize

# ---------------------------------------------------------------- lexicon

def load_subjectivity_lexicon(path: str | Path | None = None) -> dict[str, float]:
    """word<TAB>weight file; weights in [0,1], lowercase keys."""
    if path is None:
        with resources.as_file(
            resources.files("reviewqa.data") / "subjectivity_lexicon.tsv"
        ) as p:
            return load_subjectivity_lexicon(p)
    lexicon: dict[str, float] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].rstrip()
            if not line:
                continue
            word, weight = line.split("\t")
            w = float(weight)
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight out of range for {word!r}: {w}")
            lexicon[word.lower()] = w
    return lexicon


def lexicon_subjectivity(sentence: str, lexicon: dict[str, float]) -> float:
    """Mean lexicon weight over matched tokens; 0.5 when none match."""
    weights = [
        lexicon[t.surface.lower()]
        for t in tokenize(sentence)
        if t.surface.lower() in lexicon
    ]
    if not weights:
        return 0.5
    return sum(weights) / len(weights)


def make_lexicon_scorer(lexicon: dict[str, float]) -> Callable[[str], float]:
    return lambda sentence: lexicon_subjectivity(sentence, lexicon)


# ------------------------------------------------------------- sentences

_ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc", "ltd", "no"}
)

_SENT_END = re.compile(r"[.!?]+[\"')\]]*\s+")


def split_sentences(text: str) -> list[str]:
    """Period/question/exclamation boundaries with an abbreviation guard."""
    sentences = []
    start = 0
    for m in _SENT_END.finditer(text):
        before = text[start : m.start()].rstrip()
        last_word = re.findall(r"[A-Za-z]+", before[-12:] if before else "")
        if last_word and last_word[-1].lower() in _ABBREVIATIONS:
            continue
        chunk = text[start : m.end()].strip()
        if chunk:
            sentences.append(chunk)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# ------------------------------------------------------------ classifier

@dataclass
class ClassifierConfig:
    orders: tuple[int, ...] = (1, 2)
    epochs: int = 100
    lr: float = 1.0
    seed: int = 0


@dataclass
class LinearTextModel:
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float
    orders: tuple[int, ...]
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.vocabulary):
            raise ValueError("weight vector length must match vocabulary size")

    def _features(self, texts: Sequence[str]) -> sparse.csr_matrix:
        return _featurize(texts, self.orders, self.vocabulary)

    def decision(self, texts: Sequence[str]) -> np.ndarray:
        X = self._features(texts)
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict(self, texts: Sequence[str]) -> np.ndarray:
        return (self.decision(texts) >= 0.0).astype(int)

    def accuracy(self, texts: Sequence[str], labels: Sequence[int]) -> float:
        return float(np.mean(self.predict(texts) == np.asarray(labels)))


def _ngrams(text: str, orders: tuple[int, ...]) -> list[str]:
    words = [t.surface.lower() for t in tokenize(text)]
    grams = []
    for n in orders:
        grams.extend(
            " ".join(words[i : i + n]) for i in range(len(words) - n + 1)
        )
    return grams


def _featurize(
    texts: Sequence[str], orders: tuple[int, ...], vocabulary: dict[str, int]
) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for i, text in enumerate(texts):
        counts: dict[int, int] = {}
        for gram in _ngrams(text, orders):
            j = vocabulary.get(gram)
            if j is not None:
                counts[j] = counts.get(j, 0) + 1
        for j, c in counts.items():
            rows.append(i)
            cols.append(j)
            vals.append(float(c))
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(texts), len(vocabulary))
    )


def _logistic_loss(decision: np.ndarray, y: np.ndarray) -> float:
    signed = (2.0 * y - 1.0) * decision
    return float(np.mean(np.logaddexp(0.0, -signed)))


def train_subjectivity_classifier(
    labeled: Sequence[tuple[str, int]], config: ClassifierConfig | None = None
) -> LinearTextModel:
    """Full-batch gradient descent on logistic loss with backtracking.

    The step is halved until the loss does not increase, so the training
    loss is non-increasing across epochs by construction.  Deterministic:
    the vocabulary is sorted and the data order never matters.
    """
    config = config or ClassifierConfig()
    texts = [t for t, _ in labeled]
    y = np.array([int(l) for _, l in labeled], dtype=np.float64)
    classes = set(y.tolist())
    if len(classes) < 2:
        raise ValueError(f"need two classes to train, got labels {sorted(classes)}")
    vocabulary = {
        gram: idx
        for idx, gram in enumerate(
            sorted({g for t in texts for g in _ngrams(t, config.orders)})
        )
    }
    X = _featurize(texts, config.orders, vocabulary)
    n = X.shape[0]
    w = np.zeros(len(vocabulary))
    b = 0.0
    decision = np.asarray(X @ w).ravel() + b
    loss = _logistic_loss(decision, y)
    history = [loss]
    for _ in range(config.epochs):
        p = 1.0 / (1.0 + np.exp(-decision))
        residual = p - y
        grad_w = np.asarray(X.T @ residual).ravel() / n
        grad_b = float(residual.mean())
        step = config.lr
        for _ in range(40):
            w_try = w - step * grad_w
            b_try = b - step * grad_b
            decision_try = np.asarray(X @ w_try).ravel() + b_try
            loss_try = _logistic_loss(decision_try, y)
            if loss_try <= loss:
                break
            step /= 2.0
        else:
            # no step improves: converged
            history.append(loss)
            break
        w, b, decision, loss = w_try, b_try, decision_try, loss_try
        history.append(loss)
    return LinearTextModel(
        vocabulary=vocabulary,
        weights=w,
        bias=b,
        orders=config.orders,
        loss_history=history,
    )


# ---------------------------------------------------------------- top-N

def top_n_filter(
    sentences: Sequence[str],
    n: int,
    mode: str,
    scorer: Callable[[str], float],
) -> list[str]:
    """The n most subjective (or objective) sentences, in document order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode not in ("subjective", "objective"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(sentences) <= n:
        return list(sentences)
    scored = [(scorer(s), i) for i, s in enumerate(sentences)]
    if mode == "subjective":
        ranked = sorted(scored, key=lambda si: (-si[0], si[1]))
    else:
        ranked = sorted(scored, key=lambda si: (si[0], si[1]))
    keep = sorted(i for _, i in ranked[:n])
    return [sentences[i] for i in keep]


# ------------------------------------------------------------ experiment

@dataclass
class SentimentResult:
    rows: list[tuple[int, str, float]]  # (n, mode, accuracy)
    baseline_accuracy: float

    def accuracy(self, n: int, mode: str) -> float:
        for row_n, row_mode, acc in self.rows:
            if row_n == n and row_mode == mode:
                return acc
        raise KeyError((n, mode))


def sentiment_experiment(
    documents: Sequence[tuple[list[str], int]],
    n_values: Sequence[int],
    scorer: Callable[[str], float],
    seed: int = 0,
    config: ClassifierConfig | None = None,
    test_fraction: float = 0.2,
) -> SentimentResult:
    """Train/evaluate sentiment classifiers on top-N filtered documents."""
    if not n_values:
        raise ValueError("n_values must be non-empty")
    if len(documents) < 5:
        raise ValueError("need at least 5 labeled documents")
    config = config or ClassifierConfig()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(documents))
    n_test = max(1, int(len(documents) * test_fraction))
    test_idx = set(order[:n_test].tolist())
    train_docs = [documents[i] for i in range(len(documents)) if i not in test_idx]
    test_docs = [documents[i] for i in range(len(documents)) if i in test_idx]

    def run(filter_n: int | None, mode: str | None) -> float:
        def doc_text(sentences: list[str]) -> str:
            if filter_n is None:
                return " ".join(sentences)
            return " ".join(top_n_filter(sentences, filter_n, mode, scorer))

        train = [(doc_text(s), label) for s, label in train_docs]
        test = [(doc_text(s), label) for s, label in test_docs]
        model = train_subjectivity_classifier(train, config)
        return model.accuracy([t for t, _ in test], [l for _, l in test])

    baseline = run(None, None)
    rows = []
    for n in n_values:
        for mode in ("subjective", "objective"):
            rows.append((n, mode, run(n, mode)))
    return SentimentResult(rows=rows, baseline_accuracy=baseline)


def write_sentiment_table(result: SentimentResult, path: str | Path) -> None:
    import csv

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mode", "accuracy"])
        writer.writerow(["all", "baseline", f"{result.baseline_accuracy:.6f}"])
        for n, mode, acc in result.rows:
            writer.writerow([n, mode, f"{acc:.6f}"])
