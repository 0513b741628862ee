"""Pipeline orchestration: composable stages behind one command line.

    reviewqa run <stage>|all --config cfg --out dir [--seed N] [--manifest-only]
    reviewqa serve --config cfg --out dir [--host H] [--port P]

Stages: ingest, extract, factorize, neighborhood, topics, pair, tasks,
serve, assemble, analyze, train, evaluate.  ``run serve`` executes a
scripted annotation session (simulated workers, including the expert
gold labels) so the whole pipeline can run unattended; the top-level
``serve`` command starts the HTTP service for human annotators instead.

Every stage writes a manifest with the config hash and the sha256 of
each input and output; re-running a stage on unchanged inputs yields a
byte-identical manifest.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import analysis, assembly, factorization, neighborhood, opinions
from .assembly import file_sha256
from .config import PipelineConfig, load_config
from .corpus import ReviewCollection, load_reviews, save_reviews, tokenize
from .store import AnnotationStore, StoreError
from .subjectivity import load_subjectivity_lexicon  # noqa: F401  (re-export convenience)
from .tasks import (
    Span,
    load_tasks,
    make_gold_task,
    make_question_tasks,
    make_span_task,
    save_tasks,
)

STAGES = [
    "ingest",
    "extract",
    "factorize",
    "neighborhood",
    "topics",
    "pair",
    "tasks",
    "serve",
    "assemble",
    "analyze",
    "train",
    "evaluate",
]


class StageError(RuntimeError):
    pass


def _paths(work: Path) -> dict[str, Path]:
    return {
        "reviews": work / "reviews.jsonl",
        "vocabulary": work / "vocabulary.json",
        "factor_model": work / "factor_model.json",
        "neighborhood": work / "neighborhood.json",
        "neighbor_report": work / "neighbors.tsv",
        "topics": work / "topics.json",
        "pairs": work / "pairs.json",
        "question_tasks": work / "question_tasks.jsonl",
        "store_log": work / "store.log",
        "dataset": work / "dataset",
        "reports": work / "reports",
        "model": work / "model.ckpt.json",
        "model_vocab": work / "model_vocab.json",
        "metrics": work / "metrics.csv",
    }


# artifact -> stage that produces it, for actionable error messages
_PRODUCERS = {
    "reviews": "ingest",
    "vocabulary": "extract",
    "factor_model": "factorize",
    "neighborhood": "neighborhood",
    "topics": "topics",
    "pairs": "pair",
    "question_tasks": "tasks",
    "store_log": "serve",
    "dataset": "assemble",
    "reports": "analyze",
    "model": "train",
    "model_vocab": "train",
    "metrics": "evaluate",
}

_REQUIRES = {
    "ingest": [],
    "extract": ["reviews"],
    "factorize": ["vocabulary", "reviews"],
    "neighborhood": ["factor_model"],
    "topics": ["neighborhood", "vocabulary"],
    "pair": ["topics", "reviews", "vocabulary"],
    "tasks": ["pairs"],
    "serve": ["question_tasks", "reviews"],
    "assemble": ["store_log", "reviews"],
    "analyze": ["dataset"],
    "train": ["dataset"],
    "evaluate": ["model", "model_vocab", "dataset"],
}


def _require(stage: str, paths: dict[str, Path]) -> None:
    for key in _REQUIRES[stage]:
        if not paths[key].exists():
            raise StageError(
                f"stage '{stage}' needs {paths[key].name}; "
                f"run '{_PRODUCERS[key]}' first"
            )


def _hash_tree(path: Path) -> dict[str, str]:
    if path.is_file():
        return {path.name: file_sha256(path)}
    out = {}
    for child in sorted(path.rglob("*")):
        if child.is_file():
            out[str(child.relative_to(path.parent))] = file_sha256(child)
    return out


def _lexicons(config: PipelineConfig):
    opinion = (
        opinions.load_lexicon(config.opinion_lexicon)
        if config.opinion_lexicon
        else opinions.default_opinion_lexicon()
    )
    if config.negation_lexicon or config.intensifier_lexicon:
        modifiers = opinions.ModifierLexicon(
            negations=(
                opinions.load_lexicon(config.negation_lexicon)
                if config.negation_lexicon
                else opinions.default_modifier_lexicon().negations
            ),
            intensifiers=(
                opinions.load_lexicon(config.intensifier_lexicon)
                if config.intensifier_lexicon
                else opinions.default_modifier_lexicon().intensifiers
            ),
        )
    else:
        modifiers = opinions.default_modifier_lexicon()
    stopwords = (
        opinions.load_lexicon(config.stopword_lexicon)
        if config.stopword_lexicon
        else opinions.default_stopwords()
    )
    return opinion, modifiers, stopwords


# ------------------------------------------------------------- stages

def _stage_ingest(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    src = Path(config.reviews_path)
    if not config.reviews_path or not src.exists():
        raise StageError(
            f"stage 'ingest' needs an existing reviews_path (got {config.reviews_path!r})"
        )
    collection = load_reviews(src, domain=config.domain or None)
    save_reviews(collection, paths["reviews"])
    return {
        "inputs": {str(src): file_sha256(src)},
        "outputs": _hash_tree(paths["reviews"]),
        "info": {
            "reviews": len(collection),
            "items": len(collection.index),
            "skipped": collection.skipped,
        },
    }


def _stage_extract(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    collection = load_reviews(paths["reviews"])
    opinion, modifiers, stopwords = _lexicons(config)
    vocab = opinions.aggregate_extractions(collection, opinion, modifiers, stopwords)
    opinions.save_vocabulary(vocab, paths["vocabulary"])
    return {
        "inputs": _hash_tree(paths["reviews"]),
        "outputs": _hash_tree(paths["vocabulary"]),
        "info": {"extractions": len(vocab)},
    }


def _stage_factorize(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    vocab = opinions.load_vocabulary(paths["vocabulary"])
    collection = load_reviews(paths["reviews"])
    matrix = factorization.build_matrix(
        vocab,
        collection,
        min_item_reviews=config.min_item_reviews,
        min_extraction_reviews=config.min_extraction_reviews,
    )
    model = factorization.nmf(
        matrix,
        k=min(config.nmf_k, min(matrix.shape)),
        max_iters=config.nmf_max_iters,
        seed=config.seed,
        tol=config.nmf_tol,
    )
    factorization.save_model(model, paths["factor_model"])
    return {
        "inputs": {**_hash_tree(paths["vocabulary"]), **_hash_tree(paths["reviews"])},
        "outputs": _hash_tree(paths["factor_model"]),
        "info": {
            "matrix_shape": list(matrix.shape),
            "k": model.k,
            "iterations": len(model.loss_history) - 1,
            "final_error": model.loss_history[-1],
        },
    }


def _stage_neighborhood(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    model = factorization.load_model(paths["factor_model"])
    nbhd = neighborhood.build_neighborhood(model, k_max=config.k_max)
    neighborhood.save_neighborhood(nbhd, paths["neighborhood"])
    neighborhood.write_neighbor_report(nbhd, paths["neighbor_report"])
    return {
        "inputs": _hash_tree(paths["factor_model"]),
        "outputs": {
            **_hash_tree(paths["neighborhood"]),
            **_hash_tree(paths["neighbor_report"]),
        },
        "info": {"extractions": len(nbhd.neighbors)},
    }


def _stage_topics(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    nbhd = neighborhood.load_neighborhood(paths["neighborhood"])
    vocab = opinions.load_vocabulary(paths["vocabulary"])
    semantic = neighborhood.make_semantic_sim(config.word_vectors or None)
    pruned = neighborhood.prune_neighbors(
        nbhd, cos_min=config.cos_min, sem_max=config.sem_max, semantic_sim=semantic
    )
    topics = neighborhood.select_topics(pruned, vocab, min_neighbors=config.min_neighbors)
    neighborhood.save_topics(topics, paths["topics"])
    return {
        "inputs": {**_hash_tree(paths["neighborhood"]), **_hash_tree(paths["vocabulary"])},
        "outputs": _hash_tree(paths["topics"]),
        "info": {"topics": len(topics)},
    }


def _stage_pair(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    topics = neighborhood.load_topics(paths["topics"])
    vocab = opinions.load_vocabulary(paths["vocabulary"])
    collection = load_reviews(paths["reviews"])
    all_pairs = []
    for topic in topics:
        all_pairs.extend(
            neighborhood.pair_reviews(
                topic, collection, vocab, max_pairs=config.max_pairs_per_topic
            )
        )
    payload = [
        {
            "topic_key": p.topic_key,
            "review_id": p.review_id,
            "matched_neighbor": p.matched_neighbor,
        }
        for p in all_pairs
    ]
    paths["pairs"].write_text(
        json.dumps({"format_version": 1, "pairs": payload}, indent=1), encoding="utf-8"
    )
    return {
        "inputs": {
            **_hash_tree(paths["topics"]),
            **_hash_tree(paths["vocabulary"]),
            **_hash_tree(paths["reviews"]),
        },
        "outputs": _hash_tree(paths["pairs"]),
        "info": {"pairs": len(all_pairs), "topics_with_pairs": len({p.topic_key for p in all_pairs})},
    }


def _stage_tasks(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    raw = json.loads(paths["pairs"].read_text(encoding="utf-8"))
    pairs = [
        neighborhood.TopicReviewPair(
            topic_key=p["topic_key"],
            review_id=p["review_id"],
            matched_neighbor=p["matched_neighbor"],
        )
        for p in raw["pairs"]
    ]
    tasks = make_question_tasks(pairs)
    save_tasks(tasks, paths["question_tasks"])
    return {
        "inputs": _hash_tree(paths["pairs"]),
        "outputs": _hash_tree(paths["question_tasks"]),
        "info": {"question_tasks": len(tasks)},
    }


def _expert_answer(review_text: str, extraction_key: str) -> Span | None:
    """Scripted expert rule: token-aligned window ending at the aspect."""
    _, _, aspect = extraction_key.partition("|")
    tokens = tokenize(review_text)
    lowers = [t.surface.lower() for t in tokens]
    aspect_words = aspect.split()
    if not aspect_words:
        return None
    for i in range(len(tokens) - len(aspect_words) + 1):
        if lowers[i : i + len(aspect_words)] == aspect_words:
            start = max(0, i - 3)
            end = i + len(aspect_words) - 1
            return Span(tokens[start].byte_start, tokens[end].byte_end)
    return None


def _drain(store: AnnotationStore, workers: list[str], handle) -> None:
    """Round-robin workers until every stream is exhausted."""
    active = set(workers)
    while active:
        for worker in sorted(active):
            try:
                task = store.next_task(worker)
            except StoreError:
                active.discard(worker)
                continue
            if task is None:
                active.discard(worker)
                continue
            handle(worker, task)


def _scripted_serve(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    collection = load_reviews(paths["reviews"])
    question_tasks = load_tasks(paths["question_tasks"])
    store = AnnotationStore(paths["store_log"], collection)
    store.register_tasks(question_tasks)
    workers = [f"worker{i}" for i in range(config.script_workers)]
    accuracies = dict(zip(workers, config.script_accuracy_list()))
    rngs = {w: random.Random(f"{config.seed}:{w}") for w in workers}

    def write_question(worker: str, task) -> None:
        if int(task.task_id, 16) % 2 == 0:
            text = f"How is the {task.aspect}?"
        else:
            text = f"Is the {task.aspect} {task.opinion}?"
        store.submit_question(worker, task.task_id, text)

    _drain(store, workers, write_question)

    # expert phase: build span tasks (plus gold copies) from the questions
    responses = sorted(store.question_responses(), key=lambda r: r["task_id"])
    span_tasks = []
    intended: dict[tuple[str, str], Span | None] = {}
    for rec in responses:
        origin = store.task(rec["task_id"])
        answer = _expert_answer(
            collection.get(origin.review_id).text, origin.matched_neighbor
        )
        question = rec["question_text"]
        span_tasks.append(
            make_span_task(question, origin.review_id, topic_key=origin.topic_key)
        )
        intended[(question, origin.review_id)] = answer
    n_gold = max(1, round(len(span_tasks) * config.gold_fraction)) if span_tasks else 0
    golds = [
        make_gold_task(
            t.question_text,
            t.review_id,
            intended[(t.question_text, t.review_id)],
            topic_key=t.topic_key,
        )
        for t in span_tasks[:n_gold]
    ]
    store.register_tasks(span_tasks + golds)
    if span_tasks:
        store.register_stream(
            seed=config.seed,
            gold_every=config.gold_every,
            inject_gold=bool(golds),
            min_gold=config.gold_min_seen,
            accuracy_floor=config.gold_accuracy_floor,
        )

    def label_span(worker: str, task) -> None:
        from .tasks import Annotation

        rng = rngs[worker]
        correct = rng.random() < accuracies[worker]
        answer = intended.get((task.question_text, task.review_id))
        if not correct:
            if answer is not None:
                answer = None  # wrongly marks an answerable question unanswerable
            else:
                # wrongly highlights the first review token
                toks = tokenize(collection.get(task.review_id).text)
                answer = Span(toks[0].byte_start, toks[0].byte_end)
        subjective_question = task.question_text.startswith("How")
        q_score = rng.choice([4, 5] if subjective_question else [1, 2, 3])
        a_score = None if answer is None else rng.choice([3, 4, 5])
        store.submit_annotation(
            worker,
            Annotation(task.task_id, worker, q_score, answer, a_score),
        )

    _drain(store, workers, label_span)
    progress = store.progress()
    statuses = {
        w: store.worker_status(w).active if store.worker_status(w) else True
        for w in workers
    }
    store.close()
    return {
        "inputs": {**_hash_tree(paths["question_tasks"]), **_hash_tree(paths["reviews"])},
        "outputs": _hash_tree(paths["store_log"]),
        "info": {
            "progress": progress,
            "workers_active": statuses,
            "span_tasks": len(span_tasks),
            "gold_tasks": len(golds),
        },
    }


def _stage_assemble(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    collection = load_reviews(paths["reviews"])
    store = AnnotationStore(paths["store_log"], collection)
    examples = assembly.assemble(store, collection)
    store.close()
    _, assigned = assembly.split_by_topic(
        examples, fractions=config.fractions(), seed=config.seed
    )
    manifest = assembly.export(
        assigned, paths["dataset"], seed=config.seed, config_hash=config.config_hash()
    )
    return {
        "inputs": {**_hash_tree(paths["store_log"]), **_hash_tree(paths["reviews"])},
        "outputs": _hash_tree(paths["dataset"]),
        "info": {"examples": manifest["total"], "counts": manifest["counts"]},
    }


def _stage_analyze(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    examples = assembly.load_export(paths["dataset"])
    reports = paths["reports"]
    reports.mkdir(parents=True, exist_ok=True)
    stats = analysis.domain_stats(examples, subj_threshold=config.subj_threshold)
    joint = analysis.subjectivity_joint(examples, subj_threshold=config.subj_threshold)
    analysis.write_domain_stats_csv(
        stats, reports / "domain_stats.csv", config.subj_threshold
    )
    analysis.write_summary_text(
        stats, joint, reports / "summary.txt", config.subj_threshold
    )
    questions = [e.question_text for e in examples]
    info: dict = {"domains": sorted(stats), "subj_threshold": config.subj_threshold}
    if questions:
        dist = analysis.prefix_distribution(questions)
        analysis.write_prefix_json(dist, reports / "prefix_distribution.json")
        info["questions"] = len(questions)
    return {
        "inputs": _hash_tree(paths["dataset"]),
        "outputs": _hash_tree(reports),
        "info": info,
    }


def _split_examples(examples, split):
    return [e for e in examples if e.split == split]


def _stage_train(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    from . import mtl

    examples = assembly.load_export(paths["dataset"])
    train_examples = _split_examples(examples, "train")
    if not train_examples:
        raise StageError("stage 'train' found no train-split examples in the dataset")
    vocab = mtl.build_vocab(
        [e.question_text for e in train_examples]
        + [e.review_text for e in train_examples]
    )
    dataset = mtl.examples_to_dataset(
        train_examples,
        vocab,
        subj_threshold=config.subj_threshold,
        allow_no_answer=config.mtl_allow_no_answer,
    )
    model_config = mtl.MTLConfig(
        vocab_size=len(vocab),
        emb_dim=config.mtl_emb_dim,
        hidden_dim=config.mtl_hidden_dim,
        proj_dim=config.mtl_proj_dim,
        subj_hidden=config.mtl_subj_hidden,
        encoder=config.mtl_encoder,
        max_span_len=config.mtl_max_span_len,
        allow_no_answer=config.mtl_allow_no_answer,
    )
    result = mtl.train_mtl(
        dataset,
        model_config,
        mtl.TrainConfig(
            epochs=config.mtl_epochs,
            lr=config.mtl_lr,
            seed=config.seed,
            task_sample_prob=config.mtl_task_sample_prob,
        ),
    )
    mtl.save_params(result.params, paths["model"])
    paths["model_vocab"].write_text(
        json.dumps({"format_version": 1, "vocab": vocab}, sort_keys=True),
        encoding="utf-8",
    )
    return {
        "inputs": _hash_tree(paths["dataset"]),
        "outputs": {**_hash_tree(paths["model"]), **_hash_tree(paths["model_vocab"])},
        "info": {
            "train_examples": len(dataset),
            "parameters": result.params.parameter_count(),
            "epoch_span_loss": result.epoch_span_loss,
            "epoch_subj_loss": result.epoch_subj_loss,
        },
    }


def _stage_evaluate(config: PipelineConfig, paths: dict[str, Path]) -> dict:
    from . import mtl

    params = mtl.load_params(paths["model"])
    vocab = json.loads(paths["model_vocab"].read_text(encoding="utf-8"))["vocab"]
    examples = assembly.load_export(paths["dataset"])
    test_examples = _split_examples(examples, "test")
    dataset = mtl.examples_to_dataset(
        test_examples,
        vocab,
        subj_threshold=config.subj_threshold,
        allow_no_answer=params.config.allow_no_answer,
    )
    if not dataset:
        raise StageError("stage 'evaluate' found no usable test-split examples")
    metrics = mtl.evaluate(params, dataset)
    mtl.write_metrics_csv(metrics, paths["metrics"])
    return {
        "inputs": {
            **_hash_tree(paths["model"]),
            **_hash_tree(paths["model_vocab"]),
            **_hash_tree(paths["dataset"]),
        },
        "outputs": _hash_tree(paths["metrics"]),
        "info": {"metrics": metrics},
    }


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "extract": _stage_extract,
    "factorize": _stage_factorize,
    "neighborhood": _stage_neighborhood,
    "topics": _stage_topics,
    "pair": _stage_pair,
    "tasks": _stage_tasks,
    "serve": _scripted_serve,
    "assemble": _stage_assemble,
    "analyze": _stage_analyze,
    "train": _stage_train,
    "evaluate": _stage_evaluate,
}


def run_stage(stage: str, config: PipelineConfig, work: Path) -> dict:
    """Run one stage and write its manifest; returns the manifest."""
    if stage not in _STAGE_FUNCS:
        raise StageError(f"unknown stage {stage!r}; stages are: {', '.join(STAGES)}")
    config.validate()
    work.mkdir(parents=True, exist_ok=True)
    paths = _paths(work)
    _require(stage, paths)
    result = _STAGE_FUNCS[stage](config, paths)
    manifest = {
        "format_version": 1,
        "stage": stage,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "inputs": result.get("inputs", {}),
        "outputs": result.get("outputs", {}),
        "info": result.get("info", {}),
    }
    manifest_dir = work / "manifests"
    manifest_dir.mkdir(exist_ok=True)
    (manifest_dir / f"{stage}.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    return manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="reviewqa",
        description="Build subjectivity-labeled QA datasets from review corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run one pipeline stage (or 'all')")
    run_parser.add_argument("stage", choices=STAGES + ["all"])
    run_parser.add_argument("--config", type=Path, default=None)
    run_parser.add_argument("--out", type=Path, required=True)
    run_parser.add_argument("--seed", type=int, default=None)
    run_parser.add_argument("--reviews", type=str, default=None, help="override reviews_path")
    run_parser.add_argument(
        "--manifest-only",
        action="store_true",
        help="print stage manifests as JSON, nothing else",
    )

    serve_parser = sub.add_parser("serve", help="start the HTTP annotation service")
    serve_parser.add_argument("--config", type=Path, default=None)
    serve_parser.add_argument("--out", type=Path, required=True)
    serve_parser.add_argument("--host", type=str, default=None)
    serve_parser.add_argument("--port", type=int, default=None)
    serve_parser.add_argument(
        "--tasks",
        type=Path,
        action="append",
        default=[],
        help="extra task batch files (JSONL) to register before serving, "
        "e.g. span tasks with expert-labeled golds",
    )

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            overrides = {"seed": args.seed, "reviews_path": args.reviews}
            config = load_config(args.config, overrides)
            stages = STAGES if args.stage == "all" else [args.stage]
            for stage in stages:
                manifest = run_stage(stage, config, args.out)
                if args.manifest_only:
                    print(json.dumps(manifest, sort_keys=True))
                else:
                    info = json.dumps(manifest["info"], sort_keys=True)
                    print(f"[{stage}] ok {info}")
            return 0
        if args.command == "serve":
            config = load_config(args.config, {})
            paths = _paths(args.out)
            _require("serve", paths)
            collection = load_reviews(paths["reviews"])
            store = AnnotationStore(paths["store_log"], collection)
            store.register_tasks(load_tasks(paths["question_tasks"]))
            for batch_path in args.tasks:
                store.register_tasks(load_tasks(batch_path))
            if store.has_span_tasks and not store.stream_registered:
                store.register_stream(
                    seed=config.seed,
                    gold_every=config.gold_every,
                    inject_gold=store.has_gold_tasks,
                    min_gold=config.gold_min_seen,
                    accuracy_floor=config.gold_accuracy_floor,
                )
            from .service import serve as run_server

            run_server(
                store,
                host=args.host or config.serve_host,
                port=args.port or config.serve_port,
            )
            return 0
    except (StageError, ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
