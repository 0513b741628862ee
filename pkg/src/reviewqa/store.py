"""Append-only annotation store with crash-safe replay.

All state lives in a single log file of checksummed JSON records; the
in-memory view (task registry, per-worker streams, quality-control
statuses, counts) is derived purely by replaying that log, so killing
the process after any acknowledged write and reopening the file lands
in exactly the same state.  Records are CRC32-framed; a torn tail from
a crash mid-write is detected and truncated on open.

Writes are serialized through one lock and fsync'd before they are
acknowledged.  Gold grading and the worker-status effect of a
submission happen inside the same locked write, so a deactivation is
visible to the very next ``next_task`` call.
"""

from __future__ import annotations

import json
import os
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ReviewCollection, tokenize
from .tasks import (
    GOLD_EVERY,
    GOLD_MIN_SEEN,
    Annotation,
    ConfigurationError,
    IntegrityError,
    QuestionTask,
    Span,
    SpanTask,
    evaluate_worker,
    grade_gold,
    task_from_record,
    task_to_record,
)


class StoreError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class Ack:
    revision: int


@dataclass
class _WorkerState:
    worker_id: str
    index: int
    active: bool = True
    inflight: str | None = None  # task_id
    span_position: int = 0  # span tasks served so far (gold windowing)
    golds_served: int = 0
    gold_history: list[bool] = field(default_factory=list)
    completed: int = 0


class _Log:
    """CRC32-framed JSONL append log."""

    def __init__(self, path: Path):
        self.path = path
        self.records: list[dict] = []
        self._fh = None
        self._open_and_replay()

    def _open_and_replay(self) -> None:
        good_bytes = 0
        if self.path.exists():
            raw = self.path.read_bytes()
            pos = 0
            while pos < len(raw):
                nl = raw.find(b"\n", pos)
                if nl == -1:
                    break  # torn tail without newline
                line = raw[pos:nl]
                try:
                    crc_hex, payload = line.split(b" ", 1)
                    if int(crc_hex, 16) != zlib.crc32(payload):
                        break
                    self.records.append(json.loads(payload.decode("utf-8")))
                except (ValueError, json.JSONDecodeError):
                    break
                pos = nl + 1
                good_bytes = pos
            if good_bytes < len(raw):
                # drop the torn tail so future appends stay parseable
                with self.path.open("r+b") as fh:
                    fh.truncate(good_bytes)
        self._fh = self.path.open("ab")

    def append(self, record: dict) -> None:
        payload = json.dumps(record, sort_keys=True, ensure_ascii=False).encode("utf-8")
        line = f"{zlib.crc32(payload):08x} ".encode("ascii") + payload + b"\n"
        self._fh.write(line)
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.records.append(record)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class AnnotationStore:
    def __init__(self, log_path: str | Path, reviews: ReviewCollection):
        self._lock = threading.RLock()
        self.reviews = reviews
        self._tasks: dict[str, QuestionTask | SpanTask] = {}
        self._real_order: list[str] = []  # serving order of non-gold tasks
        self._gold_order: list[str] = []
        self._stream: dict | None = None  # gold_every / seed / inject_gold
        self._workers: dict[str, _WorkerState] = {}
        self._taken: set[str] = set()  # non-gold tasks assigned or done
        self._annotations: list[dict] = []
        self._questions: dict[str, dict] = {}  # task_id -> response record
        self._log = _Log(Path(log_path))
        for record in self._log.records:
            self._apply(record)

    # -- replay / state transition ------------------------------------

    def _apply(self, record: dict) -> None:
        kind = record["type"]
        if kind == "register_tasks":
            for rec in record["tasks"]:
                task = task_from_record(rec)
                if task.task_id in self._tasks:
                    continue
                self._tasks[task.task_id] = task
                if getattr(task, "is_gold", False):
                    self._gold_order.append(task.task_id)
                else:
                    self._real_order.append(task.task_id)
        elif kind == "register_stream":
            self._stream = {
                "gold_every": record["gold_every"],
                "seed": record["seed"],
                "inject_gold": record["inject_gold"],
                "min_gold": record.get("min_gold", GOLD_MIN_SEEN),
                "accuracy_floor": record.get("accuracy_floor", 0.70),
            }
        elif kind == "worker":
            wid = record["worker_id"]
            if wid not in self._workers:
                self._workers[wid] = _WorkerState(wid, index=len(self._workers))
        elif kind == "assign":
            ws = self._workers[record["worker_id"]]
            task = self._tasks[record["task_id"]]
            ws.inflight = task.task_id
            if isinstance(task, SpanTask):
                ws.span_position += 1
                if task.is_gold:
                    ws.golds_served += 1
            if not getattr(task, "is_gold", False):
                self._taken.add(task.task_id)
        elif kind == "annotation":
            ws = self._workers[record["worker_id"]]
            task = self._tasks[record["task_id"]]
            ws.inflight = None
            ws.completed += 1
            self._annotations.append(record)
            if isinstance(task, SpanTask) and task.is_gold:
                correct = self._grade(record, task)
                if record.get("gold_correct") is not None and bool(
                    record["gold_correct"]
                ) != correct:
                    raise IntegrityError(
                        f"stored gold grade disagrees with recomputation "
                        f"for task {task.task_id}"
                    )
                ws.gold_history.append(correct)
                ws.active = evaluate_worker(
                    ws.gold_history,
                    ws.worker_id,
                    min_gold=self._qc_min_gold(),
                    accuracy_floor=self._qc_floor(),
                ).active
        elif kind == "question_response":
            ws = self._workers[record["worker_id"]]
            ws.inflight = None
            ws.completed += 1
            self._questions[record["task_id"]] = record
        else:
            raise IntegrityError(f"unknown log record type {kind!r}")

    def _grade(self, record: dict, task: SpanTask) -> bool:
        ann = Annotation(
            task_id=record["task_id"],
            worker_id=record["worker_id"],
            question_subj_score=record["question_subj_score"],
            answer=(
                None
                if record["answer"] is None
                else Span(record["answer"]["byte_start"], record["answer"]["byte_end"])
            ),
            answer_subj_score=record["answer_subj_score"],
        )
        review = self.reviews.get(task.review_id)
        return grade_gold(ann, task, review.text)

    def _qc_min_gold(self) -> int:
        return self._stream["min_gold"] if self._stream else GOLD_MIN_SEEN

    def _qc_floor(self) -> float:
        return self._stream["accuracy_floor"] if self._stream else 0.70

    def _write(self, record: dict) -> int:
        self._log.append(record)
        self._apply(record)
        return self.revision

    @property
    def revision(self) -> int:
        return len(self._log.records)

    # -- registration --------------------------------------------------

    def register_tasks(self, tasks: list[QuestionTask | SpanTask]) -> None:
        with self._lock:
            for task in tasks:
                if task.review_id not in self.reviews:
                    raise ConfigurationError(
                        f"task {task.task_id} references unknown review "
                        f"{task.review_id}"
                    )
            new = [t for t in tasks if t.task_id not in self._tasks]
            if new:
                self._write(
                    {"type": "register_tasks", "tasks": [task_to_record(t) for t in new]}
                )

    def register_stream(
        self,
        seed: int,
        gold_every: int = GOLD_EVERY,
        inject_gold: bool = True,
        min_gold: int = GOLD_MIN_SEEN,
        accuracy_floor: float = 0.70,
    ) -> None:
        with self._lock:
            params = {
                "gold_every": gold_every,
                "seed": seed,
                "inject_gold": inject_gold,
                "min_gold": min_gold,
                "accuracy_floor": accuracy_floor,
            }
            if self._stream is not None:
                if self._stream != params:
                    raise ConfigurationError("stream already registered with other parameters")
                return
            if inject_gold and not self._gold_order:
                raise ConfigurationError("gold injection enabled with an empty gold pool")
            self._write({"type": "register_stream", **params})

    # -- serving --------------------------------------------------------

    def _gold_offset(self, worker_index: int) -> int:
        import random

        return random.Random(f"{self._stream['seed']}:{worker_index}").randrange(
            self._stream["gold_every"]
        )

    def next_task(self, worker_id: str):
        """Next task for this worker, or None when the stream is exhausted."""
        with self._lock:
            ws = self._workers.get(worker_id)
            if ws is None:
                self._write({"type": "worker", "worker_id": worker_id})
                ws = self._workers[worker_id]
            if not ws.active:
                raise StoreError("WORKER_DEACTIVATED", f"worker {worker_id} was deactivated")
            if ws.inflight is not None:
                return self._tasks[ws.inflight]

            pending_questions = [
                tid
                for tid in self._real_order
                if isinstance(self._tasks[tid], QuestionTask) and tid not in self._taken
            ]
            pending_spans = [
                tid
                for tid in self._real_order
                if isinstance(self._tasks[tid], SpanTask) and tid not in self._taken
            ]
            task_id = None
            if pending_questions:
                task_id = pending_questions[0]
            elif pending_spans:
                stream = self._stream or {
                    "gold_every": GOLD_EVERY,
                    "seed": 0,
                    "inject_gold": False,
                }
                gold_due = (
                    stream["inject_gold"]
                    and ws.span_position % stream["gold_every"]
                    == self._gold_offset(ws.index)
                )
                if gold_due and self._gold_order:
                    task_id = self._gold_order[ws.golds_served % len(self._gold_order)]
                else:
                    task_id = pending_spans[0]
            if task_id is None:
                return None
            self._write(
                {"type": "assign", "worker_id": worker_id, "task_id": task_id}
            )
            return self._tasks[task_id]

    # -- submissions ----------------------------------------------------

    def _require_inflight(self, worker_id: str, task_id: str):
        ws = self._workers.get(worker_id)
        if ws is None or ws.inflight is None:
            raise StoreError("TASK_MISMATCH", f"worker {worker_id} has no assigned task")
        if not ws.active:
            raise StoreError("WORKER_DEACTIVATED", f"worker {worker_id} was deactivated")
        if ws.inflight != task_id:
            raise StoreError(
                "TASK_MISMATCH",
                f"worker {worker_id} is assigned {ws.inflight}, not {task_id}",
            )
        return self._tasks[task_id]

    def submit_question(self, worker_id: str, task_id: str, question_text: str) -> Ack:
        with self._lock:
            task = self._require_inflight(worker_id, task_id)
            if not isinstance(task, QuestionTask):
                raise StoreError("TASK_MISMATCH", f"task {task_id} is not a question task")
            if not question_text or not question_text.strip():
                raise StoreError("INCOMPLETE", "question text must be non-empty")
            rev = self._write(
                {
                    "type": "question_response",
                    "worker_id": worker_id,
                    "task_id": task_id,
                    "question_text": question_text.strip(),
                }
            )
            return Ack(revision=rev)

    def submit_annotation(self, worker_id: str, annotation: Annotation) -> Ack:
        with self._lock:
            task = self._require_inflight(worker_id, annotation.task_id)
            if not isinstance(task, SpanTask):
                raise StoreError("TASK_MISMATCH", f"task {annotation.task_id} is not a span task")
            review = self.reviews.get(task.review_id)
            self._validate_annotation(annotation, review.text)
            gold_correct = None
            if task.is_gold:
                gold_correct = grade_gold(annotation, task, review.text)
            rev = self._write(
                {
                    "type": "annotation",
                    "worker_id": worker_id,
                    "task_id": annotation.task_id,
                    "question_subj_score": annotation.question_subj_score,
                    "answer": (
                        None
                        if annotation.answer is None
                        else {
                            "byte_start": annotation.answer.byte_start,
                            "byte_end": annotation.answer.byte_end,
                        }
                    ),
                    "answer_subj_score": annotation.answer_subj_score,
                    "gold_correct": gold_correct,
                }
            )
            return Ack(revision=rev)

    @staticmethod
    def _validate_annotation(annotation: Annotation, review_text: str) -> None:
        score = annotation.question_subj_score
        if not isinstance(score, int) or not 1 <= score <= 5:
            raise StoreError("SCORE_RANGE", f"question subjectivity score {score!r} not in 1..5")
        if annotation.answer is None:
            if annotation.answer_subj_score is not None:
                raise StoreError(
                    "INCOMPLETE", "unanswerable annotations carry no answer score"
                )
            return
        ascore = annotation.answer_subj_score
        if ascore is None:
            raise StoreError("INCOMPLETE", "answerable annotations need an answer score")
        if not isinstance(ascore, int) or not 1 <= ascore <= 5:
            raise StoreError("SCORE_RANGE", f"answer subjectivity score {ascore!r} not in 1..5")
        span = annotation.answer
        n_bytes = len(review_text.encode("utf-8"))
        if span.byte_end > n_bytes:
            raise StoreError(
                "SPAN_OUT_OF_RANGE",
                f"span ({span.byte_start}, {span.byte_end}) exceeds review length {n_bytes}",
            )
        starts = {t.byte_start for t in tokenize(review_text)}
        ends = {t.byte_end for t in tokenize(review_text)}
        if span.byte_start not in starts or span.byte_end not in ends:
            raise StoreError(
                "SPAN_OUT_OF_RANGE",
                f"span ({span.byte_start}, {span.byte_end}) is not token-aligned",
            )

    # -- inspection -----------------------------------------------------

    def worker_status(self, worker_id: str):
        with self._lock:
            ws = self._workers.get(worker_id)
            if ws is None:
                return None
            return evaluate_worker(
                ws.gold_history,
                worker_id,
                min_gold=self._qc_min_gold(),
                accuracy_floor=self._qc_floor(),
            )

    def worker_completed(self, worker_id: str) -> int:
        with self._lock:
            ws = self._workers.get(worker_id)
            return ws.completed if ws else 0

    @property
    def stream_registered(self) -> bool:
        with self._lock:
            return self._stream is not None

    @property
    def has_gold_tasks(self) -> bool:
        with self._lock:
            return bool(self._gold_order)

    @property
    def has_span_tasks(self) -> bool:
        with self._lock:
            return any(isinstance(self._tasks[t], SpanTask) for t in self._real_order)

    def accepted_annotations(self) -> list[dict]:
        """Annotation records from active workers on non-gold tasks."""
        with self._lock:
            out = []
            for record in self._annotations:
                task = self._tasks[record["task_id"]]
                if getattr(task, "is_gold", False):
                    continue
                if not self._workers[record["worker_id"]].active:
                    continue
                out.append(dict(record))
            return out

    def question_responses(self) -> list[dict]:
        with self._lock:
            return [
                dict(rec)
                for tid, rec in self._questions.items()
                if self._workers[rec["worker_id"]].active
            ]

    def task(self, task_id: str):
        with self._lock:
            return self._tasks.get(task_id)

    def progress(self) -> dict:
        with self._lock:
            per_domain: dict[str, dict[str, int]] = {}
            total = completed = 0
            done = {r["task_id"] for r in self._annotations} | set(self._questions)
            for tid in self._real_order:
                task = self._tasks[tid]
                domain = self.reviews.get(task.review_id).domain
                bucket = per_domain.setdefault(domain, {"total": 0, "completed": 0})
                bucket["total"] += 1
                total += 1
                if tid in done:
                    bucket["completed"] += 1
                    completed += 1
            return {
                "total": total,
                "completed": completed,
                "per_domain": per_domain,
                "active_workers": sum(1 for w in self._workers.values() if w.active),
                "revision": self.revision,
            }

    def state_fingerprint(self) -> str:
        """Stable digest of all derived state, for crash-recovery checks."""
        with self._lock:
            snapshot = {
                "revision": self.revision,
                "tasks": sorted(self._tasks),
                "real_order": self._real_order,
                "gold_order": self._gold_order,
                "stream": self._stream,
                "taken": sorted(self._taken),
                "workers": {
                    wid: {
                        "index": ws.index,
                        "active": ws.active,
                        "inflight": ws.inflight,
                        "span_position": ws.span_position,
                        "golds_served": ws.golds_served,
                        "gold_history": ws.gold_history,
                        "completed": ws.completed,
                    }
                    for wid, ws in sorted(self._workers.items())
                },
                "annotations": self._annotations,
                "questions": self._questions,
            }
            import hashlib

            return hashlib.sha256(
                json.dumps(snapshot, sort_keys=True).encode("utf-8")
            ).hexdigest()

    def close(self) -> None:
        self._log.close()
