import itertools
import random

import pytest

from reviewqa.corpus import Review, ReviewCollection
from reviewqa.opinions import (
    Extraction,
    aggregate_extractions,
    default_modifier_lexicon,
    default_opinion_lexicon,
    default_stopwords,
    extract_opinions,
    load_vocabulary,
    save_vocabulary,
)


@pytest.fixture(scope="module")
def lexicons():
    return default_opinion_lexicon(), default_modifier_lexicon(), default_stopwords()


def pairs(review_text, lexicons):
    review = Review("r", "i", "movies", review_text)
    return [
        (e.opinion, e.aspect) for e in extract_opinions(review, lexicons[0], lexicons[1])
    ]


def test_copula_pattern_with_intensifier(lexicons):
    assert ("impressive", "character development") in pairs(
        "character development was quite impressive.", lexicons
    )


def test_adjacent_pattern(lexicons):
    got = pairs("3 stars for good power and good writing.", lexicons)
    assert ("good", "writing") in got


def test_empty_review(lexicons):
    assert pairs("", lexicons) == []


def test_negation_absorbed(lexicons):
    assert pairs("not believable characters", lexicons) == [
        ("not believable", "characters")
    ]


def test_no_free_wifi(lexicons):
    assert pairs("no free wifi", lexicons) == [("no free", "wifi")]


def test_substring_invariant(lexicons):
    texts = [
        "The room was very clean and the staff was not friendly at all.",
        "hilarious book, warm atmosphere, no free parking",
        "Sound is impressive. High sodium level though!",
    ]
    for text in texts:
        review = Review("r", "i", "other", text)
        for e in extract_opinions(review, lexicons[0], lexicons[1]):
            assert e.opinion.lower() in text.lower()
            assert e.aspect.lower() in text.lower()


def test_window_does_not_cross_sentence_boundary(lexicons):
    # "good" at the end of a sentence must not grab a noun from the next one
    got = pairs("The food is good. Parking nearby.", lexicons)
    assert all(a != "Parking" and a.lower() != "parking" for _, a in got)


def test_canonical_key_lowercases():
    e = Extraction("Good", "Writing", (0, 1), (1, 2))
    assert e.canonical_key == "good|writing"


def test_empty_fields_rejected():
    with pytest.raises(ValueError):
        Extraction("", "aspect", (0, 1), (1, 2))


def make_collection():
    # 10-review fixture with planted extractions:
    #   "clean room": items a (3 distinct reviews), b (2)
    #   "friendly staff": item a (2)
    #   "good writing" twice within ONE review of item b -> counts once
    texts = {
        "r0": ("a", "clean room and nothing else"),
        "r1": ("a", "such a clean room"),
        "r2": ("a", "a clean room again"),
        "r3": ("a", "friendly staff here"),
        "r4": ("a", "very friendly staff indeed"),
        "r5": ("b", "clean room with view"),
        "r6": ("b", "spotless but clean room"),
        "r7": ("b", "good writing and more good writing"),
        "r8": ("b", "nothing to report"),
        "r9": ("c", "mediocre towels"),
    }
    reviews = [
        Review(rid, item, "tripadvisor", text) for rid, (item, text) in texts.items()
    ]
    return ReviewCollection(reviews=reviews)


def test_aggregate_counts_distinct_reviews():
    vocab = aggregate_extractions(make_collection())
    assert vocab.frequency("clean|room") == 5
    assert vocab.entries["clean|room"].per_item_counts == {"a": 3, "b": 2}
    assert vocab.frequency("friendly|staff") == 2
    # repeated within a single review counts once
    assert vocab.frequency("good|writing") == 1
    assert vocab.frequency("mediocre|towels") == 1


def test_aggregate_empty_collection():
    vocab = aggregate_extractions(ReviewCollection(reviews=[]))
    assert len(vocab) == 0


def test_aggregate_permutation_invariant():
    base = make_collection()
    reviews = list(base.reviews)
    rng = random.Random(7)
    reference = None
    for _ in range(5):
        rng.shuffle(reviews)
        vocab = aggregate_extractions(ReviewCollection(reviews=list(reviews)))
        snapshot = {
            k: (sorted(v.review_ids), dict(sorted(v.per_item_counts.items())))
            for k, v in vocab.entries.items()
        }
        if reference is None:
            reference = snapshot
        else:
            assert snapshot == reference


def test_aggregate_monotone_under_added_review():
    coll = make_collection()
    vocab_before = aggregate_extractions(coll)
    extra = Review("r10", "c", "tripadvisor", "clean room once more")
    vocab_after = aggregate_extractions(
        ReviewCollection(reviews=coll.reviews + [extra])
    )
    for key, entry in vocab_before.entries.items():
        assert vocab_after.frequency(key) >= entry.review_frequency


def test_vocabulary_round_trip(tmp_path):
    vocab = aggregate_extractions(make_collection())
    path = tmp_path / "vocab.json"
    save_vocabulary(vocab, path)
    loaded = load_vocabulary(path)
    assert set(loaded.entries) == set(vocab.entries)
    for key in vocab.entries:
        assert loaded.entries[key].review_ids == vocab.entries[key].review_ids
        assert (
            loaded.entries[key].per_item_counts == vocab.entries[key].per_item_counts
        )
