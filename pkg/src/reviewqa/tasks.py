"""Annotation task construction, gold grading, and worker quality control.

Span answers are byte ranges into the review text, aligned to token
boundaries; ``None`` in an answer position means UNANSWERABLE.  Workers
are graded on expert-labeled gold tasks injected one per five served
tasks, and lose access (with all their judgements ignored) once their
gold accuracy drops below the floor after a warm-up.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import tokenize
from .neighborhood import TopicReviewPair

GOLD_ACCURACY_FLOOR = 0.70  # numerator*100 >= denominator*70
GOLD_MIN_SEEN = 5
GOLD_EVERY = 5
SPAN_MATCH_F1 = 0.5


class IntegrityError(RuntimeError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Span:
    byte_start: int
    byte_end: int

    def __post_init__(self):
        if self.byte_start < 0 or self.byte_end <= self.byte_start:
            raise ValueError(f"bad span ({self.byte_start}, {self.byte_end})")


def _task_id(*parts: str) -> str:
    return hashlib.sha1("\x1f".join(parts).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class QuestionTask:
    task_id: str
    topic_key: str
    opinion: str
    aspect: str
    review_id: str
    matched_neighbor: str
    instructions_version: str = "v1"

    kind = "question"


@dataclass(frozen=True)
class SpanTask:
    task_id: str
    question_text: str
    review_id: str
    is_gold: bool = False
    gold_answer: Span | None = None
    gold_unanswerable: bool = False
    topic_key: str = ""

    kind = "span"

    def __post_init__(self):
        if self.is_gold:
            if (self.gold_answer is None) == (not self.gold_unanswerable):
                raise ValueError("gold task needs a span or the unanswerable mark")
        elif self.gold_answer is not None or self.gold_unanswerable:
            raise ValueError("non-gold task cannot carry a gold answer")


@dataclass(frozen=True)
class Annotation:
    task_id: str
    worker_id: str
    question_subj_score: int
    answer: Span | None  # None = UNANSWERABLE
    answer_subj_score: int | None = None


@dataclass(frozen=True)
class WorkerStatus:
    worker_id: str
    gold_seen: int
    gold_correct: int
    active: bool


def make_question_tasks(
    pairs: list[TopicReviewPair], instructions_version: str = "v1"
) -> list[QuestionTask]:
    """One question-writing task per topic/review pair, with stable ids."""
    tasks = []
    for pair in pairs:
        opinion, _, aspect = pair.topic_key.partition("|")
        tasks.append(
            QuestionTask(
                task_id=_task_id("question", pair.topic_key, pair.review_id),
                topic_key=pair.topic_key,
                opinion=opinion,
                aspect=aspect,
                review_id=pair.review_id,
                matched_neighbor=pair.matched_neighbor,
                instructions_version=instructions_version,
            )
        )
    return tasks


def make_span_task(question_text: str, review_id: str, topic_key: str = "") -> SpanTask:
    return SpanTask(
        task_id=_task_id("span", question_text, review_id),
        question_text=question_text,
        review_id=review_id,
        topic_key=topic_key,
    )


def make_gold_task(
    question_text: str,
    review_id: str,
    gold_answer: Span | None,
    topic_key: str = "",
) -> SpanTask:
    return SpanTask(
        task_id=_task_id("gold", question_text, review_id),
        question_text=question_text,
        review_id=review_id,
        is_gold=True,
        gold_answer=gold_answer,
        gold_unanswerable=gold_answer is None,
        topic_key=topic_key,
    )


@dataclass
class SpanTaskStream:
    """Per-worker serving plan: one gold in every five consecutive tasks.

    Each worker gets a fixed seeded offset in [0, gold_every); positions
    congruent to it serve golds (cycling the pool), so every window of
    ``gold_every`` consecutive tasks contains exactly one gold.
    """

    tasks: list[SpanTask]
    gold_pool: list[SpanTask] = field(default_factory=list)
    gold_every: int = GOLD_EVERY
    seed: int = 0
    inject_gold: bool = True

    def __post_init__(self):
        if self.inject_gold and not self.gold_pool:
            raise ConfigurationError("gold injection enabled with an empty gold pool")
        if any(t.is_gold for t in self.tasks):
            raise ConfigurationError("gold tasks belong in the gold pool")
        if any(not t.is_gold for t in self.gold_pool):
            raise ConfigurationError("gold pool may only contain gold tasks")

    def gold_offset(self, worker_index: int) -> int:
        rng = random.Random(f"{self.seed}:{worker_index}")
        return rng.randrange(self.gold_every)

    def is_gold_position(self, worker_index: int, position: int) -> bool:
        if not self.inject_gold:
            return False
        return position % self.gold_every == self.gold_offset(worker_index)


def make_span_tasks(
    questions: list[tuple[str, str]] | list[tuple[str, str, str]],
    gold_pool: list[SpanTask],
    gold_every: int = GOLD_EVERY,
    seed: int = 0,
    inject_gold: bool = True,
) -> SpanTaskStream:
    """Build the span-labeling stream from (question, review_id[, topic]) rows."""
    tasks = [make_span_task(q[0], q[1], q[2] if len(q) > 2 else "") for q in questions]
    return SpanTaskStream(
        tasks=tasks,
        gold_pool=gold_pool,
        gold_every=gold_every,
        seed=seed,
        inject_gold=inject_gold,
    )


def span_token_indices(span: Span, review_text: str) -> frozenset[int]:
    """Indices of the tokens fully covered by a byte span."""
    return frozenset(
        i
        for i, tok in enumerate(tokenize(review_text))
        if tok.byte_start >= span.byte_start and tok.byte_end <= span.byte_end
    )


def token_f1(a: Span | None, b: Span | None, review_text: str) -> float:
    """Token-set F1 between two spans of the same review."""
    if a is None or b is None:
        return 1.0 if a is None and b is None else 0.0
    tokens_a = span_token_indices(a, review_text)
    tokens_b = span_token_indices(b, review_text)
    if not tokens_a and not tokens_b:
        return 1.0
    if not tokens_a or not tokens_b:
        return 0.0
    overlap = len(tokens_a & tokens_b)
    if overlap == 0:
        return 0.0
    precision = overlap / len(tokens_a)
    recall = overlap / len(tokens_b)
    return 2 * precision * recall / (precision + recall)


def grade_gold(annotation: Annotation, gold: SpanTask, review_text: str) -> bool:
    """Grade a worker answer against an expert-labeled gold task.

    UNANSWERABLE only matches UNANSWERABLE; two spans match when their
    token-set F1 reaches SPAN_MATCH_F1.
    """
    if not gold.is_gold:
        raise IntegrityError(f"task {gold.task_id} is not a gold task")
    if annotation.task_id != gold.task_id:
        raise IntegrityError(
            f"annotation for {annotation.task_id} graded against {gold.task_id}"
        )
    gold_answer = None if gold.gold_unanswerable else gold.gold_answer
    if annotation.answer is None or gold_answer is None:
        return annotation.answer is None and gold_answer is None
    return token_f1(annotation.answer, gold_answer, review_text) >= SPAN_MATCH_F1


def evaluate_worker(
    history: list[bool],
    worker_id: str = "",
    min_gold: int = GOLD_MIN_SEEN,
    accuracy_floor: float = GOLD_ACCURACY_FLOOR,
) -> WorkerStatus:
    """Walk graded gold results in order; deactivation is sticky.

    The worker stays active through the warm-up (fewer than ``min_gold``
    golds seen); from then on every prefix must keep running accuracy at
    or above the floor.  Results after the deactivation point are not
    counted: a kicked worker is not served further tasks.
    """
    floor_pct = int(round(accuracy_floor * 100))
    seen = correct = 0
    for result in history:
        seen += 1
        correct += int(result)
        if seen >= min_gold and correct * 100 < seen * floor_pct:
            return WorkerStatus(worker_id, seen, correct, active=False)
    return WorkerStatus(worker_id, seen, correct, active=True)


# --- line-delimited task batch export / import --------------------------

def _span_to_json(span: Span | None):
    return None if span is None else {"byte_start": span.byte_start, "byte_end": span.byte_end}


def _span_from_json(obj) -> Span | None:
    return None if obj is None else Span(obj["byte_start"], obj["byte_end"])


def task_to_record(task: QuestionTask | SpanTask) -> dict:
    if isinstance(task, QuestionTask):
        return {
            "kind": "question",
            "task_id": task.task_id,
            "topic_key": task.topic_key,
            "opinion": task.opinion,
            "aspect": task.aspect,
            "review_id": task.review_id,
            "matched_neighbor": task.matched_neighbor,
            "instructions_version": task.instructions_version,
        }
    return {
        "kind": "span",
        "task_id": task.task_id,
        "question_text": task.question_text,
        "review_id": task.review_id,
        "is_gold": task.is_gold,
        "gold_answer": _span_to_json(task.gold_answer),
        "gold_unanswerable": task.gold_unanswerable,
        "topic_key": task.topic_key,
    }


def task_from_record(rec: dict) -> QuestionTask | SpanTask:
    if rec["kind"] == "question":
        return QuestionTask(
            task_id=rec["task_id"],
            topic_key=rec["topic_key"],
            opinion=rec["opinion"],
            aspect=rec["aspect"],
            review_id=rec["review_id"],
            matched_neighbor=rec["matched_neighbor"],
            instructions_version=rec.get("instructions_version", "v1"),
        )
    if rec["kind"] == "span":
        return SpanTask(
            task_id=rec["task_id"],
            question_text=rec["question_text"],
            review_id=rec["review_id"],
            is_gold=rec["is_gold"],
            gold_answer=_span_from_json(rec["gold_answer"]),
            gold_unanswerable=rec["gold_unanswerable"],
            topic_key=rec.get("topic_key", ""),
        )
    raise ValueError(f"unknown task kind {rec.get('kind')!r}")


def save_tasks(tasks: list, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task_to_record(task), ensure_ascii=False) + "\n")


def load_tasks(path: str | Path) -> list:
    tasks = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                tasks.append(task_from_record(json.loads(line)))
    return tasks
