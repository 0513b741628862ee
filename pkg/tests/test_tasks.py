import pytest

from reviewqa.neighborhood import TopicReviewPair
from reviewqa.tasks import (
    Annotation,
    ConfigurationError,
    IntegrityError,
    Span,
    SpanTaskStream,
    evaluate_worker,
    grade_gold,
    load_tasks,
    make_gold_task,
    make_question_tasks,
    make_span_task,
    make_span_tasks,
    save_tasks,
    token_f1,
)


def test_make_question_tasks_empty():
    assert make_question_tasks([]) == []


def test_make_question_tasks_carries_topic():
    pairs = [TopicReviewPair("good|writing", "r1", "interesting|story")]
    tasks = make_question_tasks(pairs)
    assert len(tasks) == 1
    task = tasks[0]
    assert task.opinion == "good"
    assert task.aspect == "writing"
    assert task.review_id == "r1"
    assert task.matched_neighbor == "interesting|story"


def test_make_question_tasks_distinct_stable_ids():
    pairs = [
        TopicReviewPair("good|writing", f"r{i}", "n") for i in range(3)
    ]
    ids_a = [t.task_id for t in make_question_tasks(pairs)]
    ids_b = [t.task_id for t in make_question_tasks(pairs)]
    assert len(set(ids_a)) == 3
    assert ids_a == ids_b


def gold_pool(n=3):
    return [
        make_gold_task(f"gold q{i}", f"r{i}", Span(0, 4)) for i in range(n)
    ]


def test_stream_window_has_one_gold():
    questions = [(f"q{i}", f"r{i}") for i in range(40)]
    stream = make_span_tasks(questions, gold_pool(), seed=3)
    for worker in range(4):
        flags = [stream.is_gold_position(worker, p) for p in range(40)]
        for start in range(len(flags) - 5):
            assert sum(flags[start : start + 5]) == 1


def test_stream_twenty_served_has_four_golds():
    stream = make_span_tasks([(f"q{i}", f"r{i}") for i in range(16)], gold_pool())
    flags = [stream.is_gold_position(0, p) for p in range(20)]
    assert sum(flags) == 4


def test_stream_disabled_injection():
    stream = make_span_tasks(
        [("q", "r")], gold_pool=[], inject_gold=False
    )
    assert not any(stream.is_gold_position(0, p) for p in range(20))


def test_stream_empty_gold_pool_rejected():
    with pytest.raises(ConfigurationError):
        make_span_tasks([("q", "r")], gold_pool=[], inject_gold=True)


def test_stream_same_seed_same_offsets():
    questions = [(f"q{i}", f"r{i}") for i in range(10)]
    a = make_span_tasks(questions, gold_pool(), seed=11)
    b = make_span_tasks(questions, gold_pool(), seed=11)
    for worker in range(5):
        assert a.gold_offset(worker) == b.gold_offset(worker)


def test_stream_rejects_mixed_tasks():
    with pytest.raises(ConfigurationError):
        SpanTaskStream(tasks=gold_pool(1), gold_pool=gold_pool(1))
    with pytest.raises(ConfigurationError):
        SpanTaskStream(tasks=[], gold_pool=[make_span_task("q", "r")])


REVIEW = "The bed was great and the room was very clean overall."


def test_grade_exact_span_correct():
    gold = make_gold_task("q", "r1", Span(0, 17))
    ann = Annotation(gold.task_id, "w", 4, Span(0, 17), 4)
    assert grade_gold(ann, gold, REVIEW) is True


def test_grade_unanswerable_vs_span_incorrect():
    gold = make_gold_task("q", "r1", Span(0, 17))
    ann = Annotation(gold.task_id, "w", 4, None)
    assert grade_gold(ann, gold, REVIEW) is False


def test_grade_unanswerable_matches_unanswerable():
    gold = make_gold_task("q", "r1", None)
    ann = Annotation(gold.task_id, "w", 4, None)
    assert grade_gold(ann, gold, REVIEW) is True


def test_grade_half_overlap_is_correct():
    # gold covers "The bed was great" (4 tokens), worker covers
    # "was great and the bed..." -> construct spans with known token sets:
    # gold tokens {0,1,2,3}, answer tokens {2,3,4,5}: overlap 2,
    # P = R = 0.5 -> F1 = 0.5 exactly, which grades as correct
    toks = REVIEW.split()
    assert toks[:6] == ["The", "bed", "was", "great", "and", "the"]
    gold_span = Span(0, 17)  # "The bed was great"
    ann_span = Span(8, 25)  # "was great and the"
    f1 = token_f1(ann_span, gold_span, REVIEW)
    assert f1 == pytest.approx(0.5)
    gold = make_gold_task("q", "r1", gold_span)
    ann = Annotation(gold.task_id, "w", 3, ann_span, 3)
    assert grade_gold(ann, gold, REVIEW) is True


def test_grade_symmetric_in_spans():
    a, b = Span(0, 17), Span(8, 25)
    assert token_f1(a, b, REVIEW) == token_f1(b, a, REVIEW)


def test_grade_requires_gold_task():
    task = make_span_task("q", "r1")
    ann = Annotation(task.task_id, "w", 4, None)
    with pytest.raises(IntegrityError):
        grade_gold(ann, task, REVIEW)


def test_grade_task_mismatch():
    gold = make_gold_task("q", "r1", Span(0, 3))
    ann = Annotation("other-task", "w", 4, Span(0, 3), 4)
    with pytest.raises(IntegrityError):
        grade_gold(ann, gold, REVIEW)


def test_worker_sixty_percent_deactivated():
    status = evaluate_worker([True, True, True, False, False], "w")
    assert status.active is False
    assert status.gold_seen == 5


def test_worker_eighty_percent_active():
    status = evaluate_worker([True, True, True, True, False], "w")
    assert status.active is True


def test_worker_warmup_tolerates_bad_start():
    status = evaluate_worker([False, False], "w")
    assert status.active is True
    assert status.gold_seen == 2


def test_worker_deactivation_sticky():
    # failing at gold 5 stops the walk; later correct answers don't revive
    history = [True, True, True, False, False] + [True] * 20
    status = evaluate_worker(history, "w")
    assert status.active is False
    assert status.gold_seen == 5


def test_worker_exact_seventy_percent_active():
    history = [True] * 7 + [False] * 3
    status = evaluate_worker(history, "w", min_gold=10)
    assert status.active is True


def test_span_validation():
    with pytest.raises(ValueError):
        Span(5, 5)
    with pytest.raises(ValueError):
        Span(-1, 3)


def test_gold_task_needs_answer_or_mark():
    with pytest.raises(ValueError):
        # direct construction bypassing the factory
        from reviewqa.tasks import SpanTask

        SpanTask("t", "q", "r", is_gold=True)


def test_task_batch_round_trip(tmp_path):
    tasks = [
        make_question_tasks([TopicReviewPair("good|bed", "r1", "nice|room")])[0],
        make_span_task("How is it?", "r2", topic_key="good|bed"),
        make_gold_task("Is it clean?", "r3", Span(2, 9)),
        make_gold_task("Any view?", "r4", None),
    ]
    path = tmp_path / "batch.jsonl"
    save_tasks(tasks, path)
    loaded = load_tasks(path)
    assert loaded == tasks
