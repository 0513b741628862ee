"""Featurization of annotated examples for the QA model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assembly import AnnotatedExample
from ..corpus import tokenize
from ..tasks import Span
from .model import InputFeatures

UNK = "<unk>"


def build_vocab(texts: list[str], min_count: int = 1) -> dict[str, int]:
    counts: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            word = tok.surface.lower()
            counts[word] = counts.get(word, 0) + 1
    vocab = {UNK: 0}
    for word in sorted(w for w, c in counts.items() if c >= min_count):
        vocab[word] = len(vocab)
    return vocab


def _ids(text: str, vocab: dict[str, int]) -> np.ndarray:
    return np.array(
        [vocab.get(t.surface.lower(), 0) for t in tokenize(text)], dtype=np.int64
    )


def featurize(question_text: str, review_text: str, vocab: dict[str, int]) -> InputFeatures:
    review_ids = _ids(review_text, vocab)
    question_ids = _ids(question_text, vocab)
    question_words = {t.surface.lower() for t in tokenize(question_text)}
    wiq = np.array(
        [1.0 if t.surface.lower() in question_words else 0.0 for t in tokenize(review_text)]
    )
    return InputFeatures(
        review_ids=review_ids, question_ids=question_ids, word_in_question=wiq
    )


def span_to_token_target(span: Span, review_text: str) -> tuple[int, int] | None:
    """Byte span -> (start, end) inclusive token indices.

    Prefers exact boundary alignment; falls back to the overlapping
    token range for externally produced spans.
    """
    tokens = tokenize(review_text)
    overlapping = [
        i
        for i, t in enumerate(tokens)
        if t.byte_end > span.byte_start and t.byte_start < span.byte_end
    ]
    if not overlapping:
        return None
    return (overlapping[0], overlapping[-1])


@dataclass(frozen=True)
class MTLExample:
    features: InputFeatures
    span_target: tuple[int, int] | None  # None = UNANSWERABLE
    subj_target: int  # 1 = subjective question
    is_subj_q: bool | None = None
    is_subj_a: bool | None = None


def examples_to_dataset(
    examples: list[AnnotatedExample],
    vocab: dict[str, int],
    subj_threshold: int,
    allow_no_answer: bool,
) -> list[MTLExample]:
    """Featurize assembled examples; unanswerable ones are kept only
    when the model trains a no-answer score."""
    dataset = []
    for e in examples:
        if e.answer is None and not allow_no_answer:
            continue
        target = None
        if e.answer is not None:
            target = span_to_token_target(e.answer, e.review_text)
            if target is None:
                continue
        subj_q = e.question_subj_score >= subj_threshold
        subj_a = (
            e.answer_subj_score >= subj_threshold
            if e.answer_subj_score is not None
            else None
        )
        dataset.append(
            MTLExample(
                features=featurize(e.question_text, e.review_text, vocab),
                span_target=target,
                subj_target=int(subj_q),
                is_subj_q=subj_q,
                is_subj_a=subj_a,
            )
        )
    return dataset
