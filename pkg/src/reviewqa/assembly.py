"""Merge accepted annotations into dataset examples, split, and export.

Splits are assigned per topic, never per example, so no topic string
ever appears in two splits.  Gold (quality-control) annotations and
everything from deactivated workers never reach the dataset.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import ReviewCollection
from .store import AnnotationStore
from .tasks import IntegrityError, Span, SpanTask

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class AnnotatedExample:
    domain: str
    question_text: str
    topic_key: str
    review_id: str
    review_text: str
    answer: Span | None  # None = UNANSWERABLE
    answer_text: str | None
    question_subj_score: int
    answer_subj_score: int | None
    split: str | None = None

    @property
    def answerable(self) -> bool:
        return self.answer is not None


@dataclass
class SplitAssignment:
    by_topic: dict[str, str]

    def __getitem__(self, topic_key: str) -> str:
        return self.by_topic[topic_key]


def assemble(store: AnnotationStore, reviews: ReviewCollection) -> list[AnnotatedExample]:
    """One example per accepted span annotation from an active worker.

    Span integrity is re-validated against the review text; a mismatch
    means the store is corrupt and is fatal.
    """
    examples = []
    for record in store.accepted_annotations():
        task = store.task(record["task_id"])
        if not isinstance(task, SpanTask):
            continue
        review = reviews.get(task.review_id)
        answer = record["answer"]
        span = None
        answer_text = None
        if answer is not None:
            span = Span(answer["byte_start"], answer["byte_end"])
            raw = review.text.encode("utf-8")
            if span.byte_end > len(raw):
                raise IntegrityError(
                    f"annotation span ({span.byte_start}, {span.byte_end}) exceeds "
                    f"review {review.review_id} length"
                )
            answer_text = raw[span.byte_start : span.byte_end].decode("utf-8")
        examples.append(
            AnnotatedExample(
                domain=review.domain,
                question_text=task.question_text,
                topic_key=task.topic_key,
                review_id=review.review_id,
                review_text=review.text,
                answer=span,
                answer_text=answer_text,
                question_subj_score=record["question_subj_score"],
                answer_subj_score=record["answer_subj_score"],
            )
        )
    examples.sort(
        key=lambda e: (e.domain, e.topic_key, e.review_id, e.question_text)
    )
    return examples


def split_by_topic(
    examples: list[AnnotatedExample],
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[SplitAssignment, list[AnnotatedExample]]:
    """Shuffle topics by seed and cut at the floor of the cumulative fractions."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    topics = sorted({e.topic_key for e in examples})
    if len(topics) < 3:
        raise ValueError(
            f"need at least 3 topics to make train/dev/test splits, got {len(topics)}"
        )
    rng = random.Random(seed)
    rng.shuffle(topics)
    n = len(topics)
    cut1 = int(fractions[0] * n)
    cut2 = int((fractions[0] + fractions[1]) * n)
    assignment = {}
    for i, topic in enumerate(topics):
        assignment[topic] = "train" if i < cut1 else "dev" if i < cut2 else "test"
    assigned = [replace(e, split=assignment[e.topic_key]) for e in examples]
    return SplitAssignment(by_topic=assignment), assigned


EXPORT_COLUMNS = [
    "domain",
    "question",
    "question_subj_level",
    "review_id",
    "review",
    "answer_start_byte",
    "answer_end_byte",
    "answer_text",
    "is_answerable",
    "answer_subj_level",
    "topic",
    "split",
]


def _example_row(e: AnnotatedExample) -> list:
    return [
        e.domain,
        e.question_text,
        e.question_subj_score,
        e.review_id,
        e.review_text,
        e.answer.byte_start if e.answer else "",
        e.answer.byte_end if e.answer else "",
        e.answer_text if e.answer_text is not None else "",
        "true" if e.answerable else "false",
        e.answer_subj_score if e.answer_subj_score is not None else "",
        e.topic_key,
        e.split,
    ]


def export(
    examples: list[AnnotatedExample],
    out_dir: str | Path,
    seed: int | None = None,
    config_hash: str = "",
) -> dict:
    """Write one CSV per (domain, split) plus a manifest; fully deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if any(e.split is None for e in examples):
        raise ValueError("examples must carry split assignments before export")
    ordered = sorted(
        examples,
        key=lambda e: (e.domain, e.split, e.topic_key, e.review_id, e.question_text),
    )
    domains = sorted({e.domain for e in ordered})
    counts: dict[str, dict[str, int]] = {d: {s: 0 for s in SPLITS} for d in domains}
    files = []
    for domain in domains:
        for split in SPLITS:
            rows = [e for e in ordered if e.domain == domain and e.split == split]
            counts[domain][split] = len(rows)
            name = f"{domain}_{split}.csv"
            files.append(name)
            with (out_dir / name).open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(EXPORT_COLUMNS)
                for e in rows:
                    writer.writerow(_example_row(e))
    manifest = {
        "format_version": 1,
        "total": len(ordered),
        "counts": counts,
        "files": files,
        "seed": seed,
        "config_hash": config_hash,
    }
    manifest_path = out_dir / "dataset_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    return manifest


def load_export(out_dir: str | Path) -> list[AnnotatedExample]:
    """Read exported CSVs back into examples (the export round-trip)."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "dataset_manifest.json").read_text())
    examples = []
    for name in manifest["files"]:
        with (out_dir / name).open("r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                answerable = row["is_answerable"] == "true"
                examples.append(
                    AnnotatedExample(
                        domain=row["domain"],
                        question_text=row["question"],
                        topic_key=row["topic"],
                        review_id=row["review_id"],
                        review_text=row["review"],
                        answer=(
                            Span(int(row["answer_start_byte"]), int(row["answer_end_byte"]))
                            if answerable
                            else None
                        ),
                        answer_text=row["answer_text"] if answerable else None,
                        question_subj_score=int(row["question_subj_level"]),
                        answer_subj_score=(
                            int(row["answer_subj_level"]) if answerable else None
                        ),
                        split=row["split"],
                    )
                )
    return examples


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
