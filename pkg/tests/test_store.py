import random

import pytest

from reviewqa.corpus import Review, ReviewCollection
from reviewqa.store import AnnotationStore, StoreError
from reviewqa.tasks import (
    Annotation,
    ConfigurationError,
    Span,
    make_gold_task,
    make_question_tasks,
    make_span_task,
)
from reviewqa.neighborhood import TopicReviewPair

REVIEW_TEXT = "The bed was great and the room was clean."


def make_reviews(n=6):
    return ReviewCollection(
        reviews=[
            Review(f"r{i}", f"i{i % 2}", "tripadvisor", REVIEW_TEXT) for i in range(n)
        ]
    )


def make_store(tmp_path, n_reviews=6, name="log.jsonl"):
    return AnnotationStore(tmp_path / name, make_reviews(n_reviews))


def span_tasks(n, start=0):
    return [make_span_task(f"How is it {i}?", f"r{i % 6}") for i in range(start, start + n)]


def gold_tasks(n):
    # gold answer: "The bed was great" (bytes 0..17)
    return [make_gold_task(f"gold {i}?", f"r{i % 6}", Span(0, 17)) for i in range(n)]


def ok_annotation(task, answer=Span(0, 17)):
    return Annotation(task.task_id, "w", 4, answer, 4 if answer else None)


def test_fresh_worker_gets_first_task(tmp_path):
    store = make_store(tmp_path)
    tasks = span_tasks(3)
    store.register_tasks(tasks)
    store.register_stream(seed=1, inject_gold=False)
    got = store.next_task("w")
    assert got.task_id in {t.task_id for t in tasks}


def test_repeat_next_task_is_idempotent(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(3))
    store.register_stream(seed=1, inject_gold=False)
    first = store.next_task("w")
    second = store.next_task("w")
    assert first.task_id == second.task_id


def test_stream_exhausted_returns_none(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    store.submit_annotation("w", Annotation(task.task_id, "w", 3, None))
    assert store.next_task("w") is None


def test_submit_and_progress(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(3))
    store.register_stream(seed=1, inject_gold=False)
    for _ in range(3):
        task = store.next_task("w")
        ack = store.submit_annotation("w", ok_annotation(task))
        assert ack.revision > 0
    prog = store.progress()
    assert prog["completed"] == 3
    assert prog["total"] == 3
    assert prog["active_workers"] == 1


def test_progress_empty(tmp_path):
    store = make_store(tmp_path)
    prog = store.progress()
    assert prog["total"] == 0
    assert prog["completed"] == 0
    assert prog["active_workers"] == 0


def test_unanswerable_without_score_ok(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    ack = store.submit_annotation("w", Annotation(task.task_id, "w", 5, None))
    assert ack.revision


def test_score_out_of_range(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    with pytest.raises(StoreError) as err:
        store.submit_annotation("w", Annotation(task.task_id, "w", 6, None))
    assert err.value.code == "SCORE_RANGE"


def test_span_out_of_range(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    with pytest.raises(StoreError) as err:
        store.submit_annotation(
            "w", Annotation(task.task_id, "w", 4, Span(0, 10_000), 4)
        )
    assert err.value.code == "SPAN_OUT_OF_RANGE"


def test_span_must_be_token_aligned(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    with pytest.raises(StoreError) as err:
        store.submit_annotation("w", Annotation(task.task_id, "w", 4, Span(1, 7), 4))
    assert err.value.code == "SPAN_OUT_OF_RANGE"


def test_answerable_needs_answer_score(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(1))
    store.register_stream(seed=1, inject_gold=False)
    task = store.next_task("w")
    with pytest.raises(StoreError) as err:
        store.submit_annotation("w", Annotation(task.task_id, "w", 4, Span(0, 17)))
    assert err.value.code == "INCOMPLETE"


def test_task_mismatch(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(2))
    store.register_stream(seed=1, inject_gold=False)
    store.next_task("w")
    with pytest.raises(StoreError) as err:
        store.submit_annotation("w", Annotation("bogus", "w", 4, None))
    assert err.value.code == "TASK_MISMATCH"


def test_gold_windowing_and_deactivation(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(40) + gold_tasks(8))
    store.register_stream(seed=7, inject_gold=True)
    # worker answers every gold wrong (marks unanswerable): after the
    # 5-gold warm-up at 0% accuracy the worker is deactivated
    served_gold = 0
    while True:
        try:
            task = store.next_task("w")
        except StoreError as err:
            assert err.code == "WORKER_DEACTIVATED"
            break
        assert task is not None, "ran out of tasks before deactivation"
        if task.is_gold:
            served_gold += 1
            store.submit_annotation("w", Annotation(task.task_id, "w", 3, None))
        else:
            store.submit_annotation("w", ok_annotation(task))
    assert served_gold == 5
    status = store.worker_status("w")
    assert status.active is False
    assert store.progress()["active_workers"] == 0
    # deactivated worker's judgements are excluded
    assert store.accepted_annotations() == []


def test_gold_every_five(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(40) + gold_tasks(8))
    store.register_stream(seed=3, inject_gold=True)
    kinds = []
    for _ in range(20):
        task = store.next_task("good")
        if task is None:
            break
        kinds.append(task.is_gold)
        answer = Span(0, 17)
        store.submit_annotation(
            "good", Annotation(task.task_id, "good", 4, answer, 4)
        )
    assert sum(kinds) == 4  # 20 served -> exactly 4 golds
    for start in range(len(kinds) - 5):
        assert sum(kinds[start : start + 5]) == 1


def test_question_flow(tmp_path):
    store = make_store(tmp_path)
    pairs = [TopicReviewPair("great|bed", "r0", "clean|room")]
    store.register_tasks(make_question_tasks(pairs))
    task = store.next_task("w")
    assert task.kind == "question"
    with pytest.raises(StoreError):
        store.submit_question("w", task.task_id, "   ")
    ack = store.submit_question("w", task.task_id, "How is the bed?")
    assert ack.revision
    responses = store.question_responses()
    assert responses[0]["question_text"] == "How is the bed?"


def test_register_stream_requires_gold(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(2))
    with pytest.raises(ConfigurationError):
        store.register_stream(seed=1, inject_gold=True)


def test_reopen_reconstructs_state(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(6) + gold_tasks(2))
    store.register_stream(seed=5, inject_gold=True)
    for _ in range(4):
        task = store.next_task("w")
        store.submit_annotation("w", ok_annotation(task))
    fp = store.state_fingerprint()
    store.close()
    reopened = AnnotationStore(tmp_path / "log.jsonl", make_reviews())
    assert reopened.state_fingerprint() == fp
    # and the reopened store continues where the old one stopped
    task = reopened.next_task("w")
    assert task is not None


def test_crash_on_torn_tail(tmp_path):
    store = make_store(tmp_path)
    store.register_tasks(span_tasks(3))
    store.register_stream(seed=2, inject_gold=False)
    task = store.next_task("w")
    store.submit_annotation("w", ok_annotation(task))
    fp = store.state_fingerprint()
    store.close()
    log = tmp_path / "log.jsonl"
    # simulate a crash mid-append: garbage without trailing newline
    with log.open("ab") as fh:
        fh.write(b'deadbeef {"type": "anno')
    reopened = AnnotationStore(log, make_reviews())
    assert reopened.state_fingerprint() == fp


def test_crash_replay_randomized_schedules(tmp_path):
    for trial in range(10):
        rng = random.Random(trial)
        log = tmp_path / f"log{trial}.jsonl"
        store = AnnotationStore(log, make_reviews())
        store.register_tasks(span_tasks(10) + gold_tasks(3))
        store.register_stream(seed=trial, inject_gold=True)
        workers = ["a", "b", "c"]
        for _ in range(rng.randrange(3, 25)):
            wid = rng.choice(workers)
            try:
                task = store.next_task(wid)
            except StoreError:
                continue
            if task is None:
                continue
            if rng.random() < 0.8:
                if rng.random() < 0.6:
                    ann = Annotation(task.task_id, wid, rng.randrange(1, 6), Span(0, 17), 3)
                else:
                    ann = Annotation(task.task_id, wid, rng.randrange(1, 6), None)
                store.submit_annotation(wid, ann)
        fp = store.state_fingerprint()
        store.close()
        reopened = AnnotationStore(log, make_reviews())
        assert reopened.state_fingerprint() == fp
        reopened.close()
