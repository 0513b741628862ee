import pytest

from reviewqa.assembly import (
    AnnotatedExample,
    assemble,
    export,
    file_sha256,
    load_export,
    split_by_topic,
)
from reviewqa.corpus import Review, ReviewCollection
from reviewqa.store import AnnotationStore
from reviewqa.tasks import Annotation, Span, make_gold_task, make_span_task

REVIEW_TEXT = "The bed was great and the room was clean."


def reviews(n=12):
    return ReviewCollection(
        reviews=[
            Review(f"r{i}", f"i{i % 3}", "tripadvisor", REVIEW_TEXT) for i in range(n)
        ]
    )


def store_with_annotations(tmp_path, bad_worker_golds=0):
    """12 annotations from 'good', plus optionally a kicked worker's work."""
    coll = reviews()
    store = AnnotationStore(tmp_path / "log.jsonl", coll)
    tasks = [
        make_span_task(f"How is it {i}?", f"r{i}", topic_key=f"t{i % 4}")
        for i in range(12)
    ]
    golds = [make_gold_task(f"g{i}", "r0", Span(0, 17)) for i in range(3)]
    store.register_tasks(tasks + golds)
    store.register_stream(seed=5, inject_gold=False)
    workers = ["good"] * 10 + ["bad"] * 2
    for wid in workers:
        task = store.next_task(wid)
        store.submit_annotation(
            wid, Annotation(task.task_id, wid, 4, Span(0, 17), 4)
        )
    if bad_worker_golds:
        # run 'bad' through gold tasks it always fails, past the warm-up
        store._stream = None  # direct access: goldless stream for this fixture
        for i in range(bad_worker_golds):
            gold = golds[i % len(golds)]
            store._write({"type": "assign", "worker_id": "bad", "task_id": gold.task_id})
            store.submit_annotation(
                "bad", Annotation(gold.task_id, "bad", 4, None)
            )
    return store, coll


def test_assemble_counts_and_surfaces(tmp_path):
    store, coll = store_with_annotations(tmp_path)
    examples = assemble(store, coll)
    assert len(examples) == 12
    for e in examples:
        assert e.answer_text == "The bed was great"
        assert e.review_text == REVIEW_TEXT
        assert e.domain == "tripadvisor"


def test_assemble_excludes_kicked_worker(tmp_path):
    store, coll = store_with_annotations(tmp_path, bad_worker_golds=5)
    assert store.worker_status("bad").active is False
    examples = assemble(store, coll)
    # the 2 'bad' annotations drop out of the 12
    assert len(examples) == 10


def test_assemble_only_deactivated_worker_yields_nothing(tmp_path):
    coll = reviews(3)
    store = AnnotationStore(tmp_path / "log.jsonl", coll)
    tasks = [make_span_task(f"q{i}", f"r{i}", topic_key="t") for i in range(3)]
    golds = [make_gold_task(f"g{i}", "r0", Span(0, 17)) for i in range(5)]
    store.register_tasks(tasks + golds)
    store._write({"type": "worker", "worker_id": "w"})
    for task in tasks:
        store._write({"type": "assign", "worker_id": "w", "task_id": task.task_id})
        store.submit_annotation("w", Annotation(task.task_id, "w", 4, Span(0, 17), 4))
    for gold in golds:
        store._write({"type": "assign", "worker_id": "w", "task_id": gold.task_id})
        store.submit_annotation("w", Annotation(gold.task_id, "w", 4, None))
    assert store.worker_status("w").active is False
    assert assemble(store, coll) == []


def example(topic, domain="books", question="How?", review_id="r1", split=None):
    return AnnotatedExample(
        domain=domain,
        question_text=question,
        topic_key=topic,
        review_id=review_id,
        review_text=REVIEW_TEXT,
        answer=Span(0, 17),
        answer_text="The bed was great",
        question_subj_score=4,
        answer_subj_score=5,
        split=split,
    )


def test_split_ten_topics_eight_one_one():
    examples = [example(f"t{i}") for i in range(10)]
    assignment, _ = split_by_topic(examples, seed=3)
    from collections import Counter

    counts = Counter(assignment.by_topic.values())
    assert counts["train"] == 8
    assert counts["dev"] == 1
    assert counts["test"] == 1


def test_split_seven_topics_five_one_one():
    examples = [example(f"t{i}") for i in range(7)]
    assignment, _ = split_by_topic(examples, seed=3)
    from collections import Counter

    counts = Counter(assignment.by_topic.values())
    assert (counts["train"], counts["dev"], counts["test"]) == (5, 1, 1)


def test_split_deterministic():
    examples = [example(f"t{i}") for i in range(9)]
    a, _ = split_by_topic(examples, seed=42)
    b, _ = split_by_topic(examples, seed=42)
    assert a.by_topic == b.by_topic


def test_split_no_topic_leakage():
    examples = [example(f"t{i % 6}", review_id=f"r{i}") for i in range(30)]
    _, assigned = split_by_topic(examples, seed=1)
    topics_per_split = {}
    for e in assigned:
        topics_per_split.setdefault(e.split, set()).add(e.topic_key)
    splits = list(topics_per_split.values())
    for i in range(len(splits)):
        for j in range(i + 1, len(splits)):
            assert not (splits[i] & splits[j])


def test_split_requires_three_topics():
    examples = [example("t0"), example("t1")]
    with pytest.raises(ValueError):
        split_by_topic(examples)


def test_split_fractions_must_sum():
    examples = [example(f"t{i}") for i in range(5)]
    with pytest.raises(ValueError):
        split_by_topic(examples, fractions=(0.5, 0.2, 0.2))


def test_export_round_trip(tmp_path):
    examples = [
        example(f"t{i}", domain=d, question=f"q{i} with, comma\nand newline")
        for i in range(6)
        for d in ("books", "movies")
    ]
    _, assigned = split_by_topic(examples, seed=0)
    manifest = export(assigned, tmp_path / "out", seed=0, config_hash="abc")
    loaded = load_export(tmp_path / "out")
    assert sorted(loaded, key=repr) == sorted(assigned, key=repr)
    assert manifest["total"] == len(assigned)


def test_export_empty_writes_headers(tmp_path):
    manifest = export([], tmp_path / "out", seed=0)
    assert manifest["total"] == 0
    assert manifest["counts"] == {}
    assert load_export(tmp_path / "out") == []


def test_export_deterministic_bytes(tmp_path):
    examples = [example(f"t{i}") for i in range(5)]
    _, assigned = split_by_topic(examples, seed=2)
    export(assigned, tmp_path / "a", seed=2)
    export(assigned, tmp_path / "b", seed=2)
    for name in ("books_train.csv", "dataset_manifest.json"):
        assert file_sha256(tmp_path / "a" / name) == file_sha256(tmp_path / "b" / name)


def test_unanswerable_round_trip(tmp_path):
    ex = AnnotatedExample(
        domain="books",
        question_text="Any good?",
        topic_key="t0",
        review_id="r1",
        review_text=REVIEW_TEXT,
        answer=None,
        answer_text=None,
        question_subj_score=3,
        answer_subj_score=None,
        split="train",
    )
    others = [example(f"t{i}", split="train") for i in range(1, 4)]
    export([ex] + others, tmp_path / "out", seed=0)
    loaded = load_export(tmp_path / "out")
    unanswerable = [e for e in loaded if not e.answerable]
    assert len(unanswerable) == 1
    assert unanswerable[0].answer_subj_score is None
    assert unanswerable[0].answer is None
