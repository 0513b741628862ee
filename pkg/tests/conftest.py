"""Shared synthetic corpora for subjectivity, sentiment, and QA tests."""

import random

import numpy as np

SUBJ_IN_LEXICON = ["wonderful", "terrible", "boring", "amazing", "disappointing"]
SUBJ_OFF_LEXICON = ["rad", "meh", "underwhelming", "heartwarming", "cringey"]
OBJ_IN_LEXICON = ["model", "size", "battery", "number", "voltage"]
OBJ_OFF_LEXICON = ["tuesday", "kilometers", "serial", "warehouse", "firmware"]
FILLERS = ["the", "it", "was", "and", "this", "that", "with", "a"]


def make_subjectivity_sentences(n, seed=0):
    """Labeled (sentence, label) rows; label 1 = subjective.

    Subjective sentences carry strong opinion words only part of the
    time, objective ones carry low-weight factual words part of the
    time, so the fixed lexicon baseline scores well above chance but
    clearly below a trained classifier.
    """
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        label = i % 2
        fill = [rng.choice(FILLERS) for _ in range(4)]
        if label == 1:
            pool = SUBJ_IN_LEXICON if rng.random() < 0.7 else SUBJ_OFF_LEXICON
            words = fill + [rng.choice(pool), rng.choice(pool)]
        else:
            pool = OBJ_IN_LEXICON if rng.random() < 0.6 else OBJ_OFF_LEXICON
            words = fill + [rng.choice(pool), rng.choice(pool)]
        rng.shuffle(words)
        rows.append((" ".join(words), label))
    return rows


SENTIMENT_SCORER_LEXICON = {
    "honestly": 1.0,
    "frankly": 1.0,
    "spec": 0.0,
    "unit": 0.0,
    "manual": 0.0,
}

POSITIVE_WORDS = ["wonderful", "delightful", "superb"]
NEGATIVE_WORDS = ["terrible", "dreadful", "awful"]
OBJECTIVE_TEMPLATES = [
    "the unit spec lists {} parts",
    "the manual spec mentions section {}",
    "the unit manual ships revision {}",
]


TOY_VOCAB = {
    "<unk>": 0,
    **{f"w{i}": i + 1 for i in range(8)},
    "lmark": 9,
    "rmark": 10,
    "subjmark": 11,
    "factmark": 12,
    "where": 13,
}


def make_toy_span_dataset(n, seed=0):
    """Sentinel-span toy task: the gold span sits between lmark and rmark.

    Even examples carry "factmark" (label 0), odd ones "subjmark"
    (label 1), so the subjectivity labels are linearly separable from
    the pooled encoding.
    """
    from reviewqa.mtl import InputFeatures, MTLExample

    rng = random.Random(seed)
    examples = []
    for i in range(n):
        label = i % 2
        left = [f"w{rng.randrange(8)}" for _ in range(rng.randrange(0, 4))]
        span = [f"w{rng.randrange(8)}" for _ in range(rng.randrange(1, 3))]
        right = [f"w{rng.randrange(8)}" for _ in range(rng.randrange(1, 4))]
        marker = "subjmark" if label else "factmark"
        words = left + ["lmark"] + span + ["rmark"] + right + [marker]
        start = len(left) + 1
        end = start + len(span) - 1
        features = InputFeatures(
            review_ids=np.array([TOY_VOCAB[w] for w in words], dtype=np.int64),
            question_ids=np.array([TOY_VOCAB["where"]], dtype=np.int64),
            word_in_question=np.zeros(len(words)),
        )
        examples.append(
            MTLExample(
                features=features,
                span_target=(start, end),
                subj_target=label,
                is_subj_q=bool(label),
                is_subj_a=bool(label),
            )
        )
    return examples


PIPELINE_EXTRACTIONS = [
    ("clean", "room"),
    ("comfortable", "bed"),
    ("friendly", "staff"),
    ("great", "view"),
    ("quiet", "location"),
    ("tasty", "breakfast"),
    ("spacious", "bathroom"),
    ("helpful", "service"),
    ("nice", "pool"),
    ("good", "wifi"),
]

_FIXTURE_FILLER_SENTENCES = [
    "We arrived late in the evening.",
    "Parking took a while to figure out.",
    "We stayed two nights in May.",
    "Check in went as expected.",
    "The city center took ten minutes on foot.",
]


def write_pipeline_corpus(path, n_items=6, reviews_per_item=20, seed=0):
    """Hotel-style synthetic corpus with planted extraction phrases.

    Items share a global popularity ranking over extractions but also
    have item-specific preferences, giving the factorization real
    co-occurrence structure to pick up.
    """
    import json

    rng = random.Random(seed)
    lines = []
    counter = 0
    for item in range(n_items):
        # each item strongly favors a slice of the extraction list
        favored = {(item + k) % len(PIPELINE_EXTRACTIONS) for k in range(4)}
        for _ in range(reviews_per_item):
            mentioned = [
                idx
                for idx in range(len(PIPELINE_EXTRACTIONS))
                # popular extractions (low idx) appear more often overall
                if rng.random() < (0.75 if idx in favored else 0.15) * (1.0 - 0.05 * idx)
            ]
            if not mentioned:
                mentioned = [rng.choice(sorted(favored))]
            sentences = [rng.choice(_FIXTURE_FILLER_SENTENCES)]
            for idx in mentioned:
                opinion, aspect = PIPELINE_EXTRACTIONS[idx]
                if rng.random() < 0.5:
                    sentences.append(f"The {aspect} was very {opinion}.")
                else:
                    sentences.append(f"Really {opinion} {aspect}.")
            rng.shuffle(sentences)
            lines.append(
                json.dumps(
                    {
                        "review_id": f"r{counter:04d}",
                        "item_id": f"hotel{item}",
                        "domain": "tripadvisor",
                        "text": " ".join(sentences),
                    }
                )
            )
            counter += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return counter


PIPELINE_CONFIG = """
seed = 11
min_item_reviews = 0
min_extraction_reviews = 0
nmf_k = 6
nmf_max_iters = 150
k_max = 8
cos_min = 0.2
sem_max = 0.975
min_neighbors = 2
max_pairs_per_topic = 6
gold_fraction = 0.3
script_workers = 3
script_accuracies = 1.0,1.0,0.9
mtl_epochs = 12
mtl_lr = 0.2
mtl_emb_dim = 12
mtl_hidden_dim = 12
mtl_proj_dim = 12
mtl_subj_hidden = 12
subj_threshold = 4
"""


def write_pipeline_config(tmp_path, corpus_path, extra=""):
    cfg = tmp_path / "pipeline.cfg"
    cfg.write_text(
        PIPELINE_CONFIG + f"reviews_path = {corpus_path}\n" + extra, encoding="utf-8"
    )
    return cfg


def make_sentiment_documents(n_docs, n_subj=3, n_obj=3, seed=0):
    """Documents whose sentiment signal lives only in subjective sentences.

    Subjective sentences start with a marker the scorer lexicon knows
    ("honestly"/"frankly") and carry a sentiment word tied to the doc
    label; objective sentences are label-agnostic boilerplate.
    """
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        label = i % 2
        sentiment = POSITIVE_WORDS if label == 1 else NEGATIVE_WORDS
        subj = [
            f"{rng.choice(['honestly', 'frankly'])} it felt {rng.choice(sentiment)} to me"
            for _ in range(n_subj)
        ]
        obj = [
            rng.choice(OBJECTIVE_TEMPLATES).format(rng.randrange(10, 99))
            for _ in range(n_obj)
        ]
        sentences = subj + obj
        rng.shuffle(sentences)
        docs.append((sentences, label))
    return docs
