"""Ingest an already-published release of a subjective-QA review dataset
and recompute its headline statistics.

Expected layout under the release root, discovered in this order:

    <root>/<domain>/splits/<split>.csv
    <root>/<domain>_<split>.csv
    <root>/<split>.csv            (rows carry a domain column)

Default column names (override via ``mapping``): ``question``,
``review``, ``domain``, ``human_ans_spans`` for the answer text (the
literal ``ANSWERNOTFOUND`` or an empty cell means unanswerable),
``is_ques_subjective`` / ``is_ans_subjective`` booleans, with
``ques_subj_score`` / ``ans_subj_score`` numeric fallbacks binarized at
``subj_threshold``.  Statistics use the same tokenizer as the rest of
the pipeline; published token counts may differ by about one token per
field depending on the original tokenizer.
"""

from __future__ import annotations

import ast
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

from .corpus import tokenize

SPLITS = ("train", "dev", "test")
UNANSWERABLE_MARKER = "ANSWERNOTFOUND"

DEFAULT_MAPPING = {
    "question": "question",
    "review": "review",
    "domain": "domain",
    "answer": "human_ans_spans",
    "is_subj_q": "is_ques_subjective",
    "is_subj_a": "is_ans_subjective",
    "subj_q_score": "ques_subj_score",
    "subj_a_score": "ans_subj_score",
}


@dataclass(frozen=True)
class ReleasedExample:
    domain: str
    split: str
    question: str
    review: str
    answer_text: str | None  # None = unanswerable
    is_subj_q: bool
    is_subj_a: bool | None


def _parse_bool(raw: str) -> bool | None:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "t"):
        return True
    if lowered in ("false", "0", "no", "f"):
        return False
    return None


def _parse_answer(raw: str) -> str | None:
    text = (raw or "").strip()
    if not text or text == UNANSWERABLE_MARKER:
        return None
    if text.startswith("[") and text.endswith("]"):
        try:
            parsed = ast.literal_eval(text)
            if isinstance(parsed, (list, tuple)):
                parsed = [str(p) for p in parsed if str(p).strip()]
                if not parsed or parsed[0] == UNANSWERABLE_MARKER:
                    return None
                return parsed[0]
        except (ValueError, SyntaxError):
            pass
    return text


def _discover_files(root: Path) -> list[tuple[str | None, str, Path]]:
    """(domain-or-None, split, path) triples for every split CSV found."""
    found = []
    for domain_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for split in SPLITS:
            candidate = domain_dir / "splits" / f"{split}.csv"
            if candidate.exists():
                found.append((domain_dir.name.lower(), split, candidate))
            candidate = domain_dir / f"{split}.csv"
            if candidate.exists():
                found.append((domain_dir.name.lower(), split, candidate))
    for path in sorted(root.glob("*.csv")):
        stem = path.stem.lower()
        for split in SPLITS:
            if stem == split:
                found.append((None, split, path))
            elif stem.endswith(f"_{split}"):
                found.append((stem[: -len(split) - 1], split, path))
    return found


def _subjective(row: dict, bool_col: str, score_col: str, threshold: int) -> bool | None:
    if bool_col in row and row[bool_col] is not None and str(row[bool_col]).strip():
        parsed = _parse_bool(str(row[bool_col]))
        if parsed is not None:
            return parsed
    raw = row.get(score_col)
    if raw is None or not str(raw).strip():
        return None
    try:
        return float(raw) >= threshold
    except ValueError:
        return None


def load_released_dataset(
    root: str | Path,
    mapping: dict[str, str] | None = None,
    subj_threshold: int = 4,
) -> list[ReleasedExample]:
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"release directory not found: {root}")
    cols = {**DEFAULT_MAPPING, **(mapping or {})}
    files = _discover_files(root)
    if not files:
        raise FileNotFoundError(f"no split CSV files found under {root}")
    examples = []
    for domain_hint, split, path in files:
        with path.open("r", encoding="utf-8", newline="") as fh:
            # released files can exceed the default csv field limit
            csv.field_size_limit(sys.maxsize)
            for row in csv.DictReader(fh):
                domain = (row.get(cols["domain"]) or domain_hint or "other").lower()
                answer = _parse_answer(row.get(cols["answer"], ""))
                subj_q = _subjective(
                    row, cols["is_subj_q"], cols["subj_q_score"], subj_threshold
                )
                subj_a = _subjective(
                    row, cols["is_subj_a"], cols["subj_a_score"], subj_threshold
                )
                examples.append(
                    ReleasedExample(
                        domain=domain,
                        split=split,
                        question=row.get(cols["question"], "") or "",
                        review=row.get(cols["review"], "") or "",
                        answer_text=answer,
                        is_subj_q=bool(subj_q),
                        is_subj_a=subj_a if answer is not None else None,
                    )
                )
    return examples


# ----------------------------------------------------------- statistics

def split_counts(examples: list[ReleasedExample]) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = {}
    for e in examples:
        bucket = out.setdefault(e.domain, {s: 0 for s in SPLITS})
        bucket[e.split] += 1
    return out


def domain_percentages(examples: list[ReleasedExample]) -> dict[str, dict[str, float]]:
    """Per-domain %subjective-question, %answerable, %subjective-answer."""
    out: dict[str, dict[str, float]] = {}
    by_domain: dict[str, list[ReleasedExample]] = {}
    for e in examples:
        by_domain.setdefault(e.domain, []).append(e)
    for domain, exs in sorted(by_domain.items()):
        answerable = [e for e in exs if e.answer_text is not None]
        subj_answers = [e for e in answerable if e.is_subj_a]
        out[domain] = {
            "pct_subj_q": 100.0 * sum(e.is_subj_q for e in exs) / len(exs),
            "pct_answerable": 100.0 * len(answerable) / len(exs),
            "pct_subj_a": (
                100.0 * len(subj_answers) / len(answerable) if answerable else None
            ),
        }
    return out


def mean_lengths(examples: list[ReleasedExample]) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    by_domain: dict[str, list[ReleasedExample]] = {}
    for e in examples:
        by_domain.setdefault(e.domain, []).append(e)
    for domain, exs in sorted(by_domain.items()):
        answers = [e.answer_text for e in exs if e.answer_text is not None]
        out[domain] = {
            "review_len": sum(len(tokenize(e.review)) for e in exs) / len(exs),
            "q_len": sum(len(tokenize(e.question)) for e in exs) / len(exs),
            "a_len": (
                sum(len(tokenize(a)) for a in answers) / len(answers)
                if answers
                else None
            ),
        }
    return out


def joint_distribution(examples: list[ReleasedExample]) -> tuple[float, float, float, float]:
    """(subjQ&subjA, factQ&subjA, subjQ&factA, factQ&factA) percentages
    over answerable examples."""
    answerable = [e for e in examples if e.answer_text is not None]
    if not answerable:
        raise ValueError("no answerable examples")
    n = len(answerable)
    cells = [0, 0, 0, 0]
    for e in answerable:
        subj_a = bool(e.is_subj_a)
        if e.is_subj_q and subj_a:
            cells[0] += 1
        elif not e.is_subj_q and subj_a:
            cells[1] += 1
        elif e.is_subj_q and not subj_a:
            cells[2] += 1
        else:
            cells[3] += 1
    return tuple(100.0 * c / n for c in cells)  # type: ignore[return-value]


def how_share(examples: list[ReleasedExample]) -> float:
    """Fraction of questions whose first word token is 'how'."""
    total = 0
    how = 0
    for e in examples:
        words = [t.surface.lower() for t in tokenize(e.question) if t.surface[0].isalnum()]
        if not words:
            continue
        total += 1
        how += int(words[0] == "how")
    if total == 0:
        raise ValueError("no non-empty questions")
    return how / total


def reproduction_report(root: str | Path, subj_threshold: int = 4) -> dict:
    examples = load_released_dataset(root, subj_threshold=subj_threshold)
    return {
        "total": len(examples),
        "split_counts": split_counts(examples),
        "percentages": domain_percentages(examples),
        "lengths": mean_lengths(examples),
        "joint": joint_distribution(examples),
        "how_share": how_share(examples),
    }
