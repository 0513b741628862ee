"""Extractive-QA metrics with subjectivity strata."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .features import MTLExample
from .model import NO_ANSWER, MTLParams, encode, predict_span, predict_subjectivity


def span_indices(target: tuple[int, int] | None) -> frozenset[int]:
    if target is None:
        return frozenset()
    return frozenset(range(target[0], target[1] + 1))


def token_f1_spans(
    pred: tuple[int, int] | None, gold: tuple[int, int] | None
) -> float:
    """Token-index F1; unanswerable counts as a match only with itself."""
    if pred is None or gold is None:
        return 1.0 if pred is None and gold is None else 0.0
    p, g = span_indices(pred), span_indices(gold)
    overlap = len(p & g)
    if overlap == 0:
        return 0.0
    precision = overlap / len(p)
    recall = overlap / len(g)
    return 2 * precision * recall / (precision + recall)


def exact_match_spans(
    pred: tuple[int, int] | None, gold: tuple[int, int] | None
) -> float:
    return 1.0 if pred == gold else 0.0


def _aggregate(rows: list[tuple[float, float]]) -> dict:
    if not rows:
        return {"f1": None, "em": None, "n": 0}
    f1 = float(np.mean([r[0] for r in rows]))
    em = float(np.mean([r[1] for r in rows]))
    return {"f1": f1, "em": em, "n": len(rows)}


STRATA = ("overall", "subj_q", "fact_q", "subj_a", "fact_a")


def evaluate(params: MTLParams, dataset: list[MTLExample]) -> dict[str, dict]:
    """Token F1 / exact match, overall and per subjectivity stratum."""
    rows: dict[str, list[tuple[float, float]]] = {s: [] for s in STRATA}
    for ex in dataset:
        H = encode(ex.features, params)
        pred = predict_span(H, params, allow_no_answer=params.config.allow_no_answer)
        pred_span = None if pred == NO_ANSWER else (pred.start, pred.end)
        f1 = token_f1_spans(pred_span, ex.span_target)
        em = exact_match_spans(pred_span, ex.span_target)
        pair = (f1, em)
        rows["overall"].append(pair)
        if ex.is_subj_q is not None:
            rows["subj_q" if ex.is_subj_q else "fact_q"].append(pair)
        if ex.is_subj_a is not None:
            rows["subj_a" if ex.is_subj_a else "fact_a"].append(pair)
    return {stratum: _aggregate(pairs) for stratum, pairs in rows.items()}


def subjectivity_accuracy(params: MTLParams, dataset: list[MTLExample]) -> float:
    correct = 0
    for ex in dataset:
        H = encode(ex.features, params)
        probs = predict_subjectivity(H, params)
        correct += int(int(np.argmax(probs)) == ex.subj_target)
    return correct / len(dataset)


def write_metrics_csv(metrics: dict[str, dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stratum", "f1", "em", "n"])
        for stratum in STRATA:
            m = metrics.get(stratum, {"f1": None, "em": None, "n": 0})
            writer.writerow(
                [
                    stratum,
                    "" if m["f1"] is None else f"{m['f1']:.6f}",
                    "" if m["em"] is None else f"{m['em']:.6f}",
                    m["n"],
                ]
            )
