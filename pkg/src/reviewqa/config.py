"""Flat key=value pipeline configuration with validation and hashing.

One file configures every stage; command-line flags override file
values.  The effective configuration is hashed and the hash recorded in
every output manifest, so artifacts can always be traced to the exact
settings that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class PipelineConfig:
    seed: int = 13

    # ingest
    reviews_path: str = ""
    domain: str = ""  # fallback for records without a domain field

    # lexicons ("" = packaged defaults)
    opinion_lexicon: str = ""
    negation_lexicon: str = ""
    intensifier_lexicon: str = ""
    stopword_lexicon: str = ""

    # matrix construction
    min_item_reviews: int = 10000
    min_extraction_reviews: int = 5000

    # factorization
    nmf_k: int = 20
    nmf_max_iters: int = 500
    nmf_tol: float = 1e-5

    # neighborhood and topics
    k_max: int = 10
    cos_min: float = 0.8
    sem_max: float = 0.975
    min_neighbors: int = 5
    word_vectors: str = ""  # optional word-vector table for semantic_sim
    max_pairs_per_topic: int = 25

    # quality control
    gold_every: int = 5
    gold_min_seen: int = 5
    gold_accuracy_floor: float = 0.70
    gold_fraction: float = 0.25  # fraction of pairs duplicated as expert golds

    # annotation service
    serve_host: str = "127.0.0.1"
    serve_port: int = 8787
    script_workers: int = 3
    script_accuracies: str = "0.95,0.95,0.8"  # per scripted worker

    # splits
    train_fraction: float = 0.8
    dev_fraction: float = 0.1
    test_fraction: float = 0.1

    # analysis
    subj_threshold: int = 4

    # QA model
    mtl_emb_dim: int = 16
    mtl_hidden_dim: int = 16
    mtl_proj_dim: int = 16
    mtl_subj_hidden: int = 12
    mtl_encoder: str = "lstm"
    mtl_max_span_len: int = 30
    mtl_allow_no_answer: bool = True
    mtl_epochs: int = 25
    mtl_lr: float = 0.15
    mtl_task_sample_prob: float = 0.5

    def validate(self) -> None:
        checks = [
            (self.min_item_reviews >= 0, "min_item_reviews must be >= 0"),
            (self.min_extraction_reviews >= 0, "min_extraction_reviews must be >= 0"),
            (self.nmf_k >= 1, "nmf_k must be >= 1"),
            (self.nmf_max_iters >= 1, "nmf_max_iters must be >= 1"),
            (self.nmf_tol >= 0, "nmf_tol must be >= 0"),
            (self.k_max >= 1, "k_max must be >= 1"),
            (-1.0 <= self.cos_min <= 1.0, "cos_min must be in [-1, 1]"),
            (0.0 <= self.sem_max <= 1.0, "sem_max must be in [0, 1]"),
            (self.min_neighbors >= 0, "min_neighbors must be >= 0"),
            (self.max_pairs_per_topic >= 1, "max_pairs_per_topic must be >= 1"),
            (self.gold_every >= 2, "gold_every must be >= 2"),
            (self.gold_min_seen >= 1, "gold_min_seen must be >= 1"),
            (0.0 < self.gold_accuracy_floor <= 1.0, "gold_accuracy_floor must be in (0, 1]"),
            (0.0 < self.gold_fraction <= 1.0, "gold_fraction must be in (0, 1]"),
            (self.script_workers >= 1, "script_workers must be >= 1"),
            (
                abs(self.train_fraction + self.dev_fraction + self.test_fraction - 1.0)
                < 1e-9,
                "split fractions must sum to 1",
            ),
            (1 <= self.subj_threshold <= 5, "subj_threshold must be in 1..5"),
            (self.mtl_encoder in ("lstm", "linear"), "mtl_encoder must be lstm or linear"),
            (self.mtl_max_span_len >= 0, "mtl_max_span_len must be >= 0"),
            (self.mtl_epochs >= 1, "mtl_epochs must be >= 1"),
            (self.mtl_lr > 0, "mtl_lr must be > 0"),
            (
                0.0 <= self.mtl_task_sample_prob <= 1.0,
                "mtl_task_sample_prob must be in [0, 1]",
            ),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(f"bad configuration: {message}")
        for worker_acc in self.script_accuracy_list():
            if not 0.0 <= worker_acc <= 1.0:
                raise ValueError("bad configuration: script accuracies must be in [0, 1]")

    def script_accuracy_list(self) -> list[float]:
        parts = [p.strip() for p in self.script_accuracies.split(",") if p.strip()]
        accs = [float(p) for p in parts]
        if len(accs) < self.script_workers:
            accs += [accs[-1] if accs else 0.9] * (self.script_workers - len(accs))
        return accs[: self.script_workers]

    def fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.dev_fraction, self.test_fraction)

    def config_hash(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name}={getattr(self, f.name)!r}")
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def _coerce(raw: str, target_type):
    if target_type is bool:
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return target_type(raw.strip())


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Read a key=value file, apply overrides, validate."""
    known = {f.name: f.type for f in fields(PipelineConfig)}
    types = {
        f.name: (f.type if isinstance(f.type, type) else type(f.default))
        for f in fields(PipelineConfig)
    }
    values: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown configuration key {key!r}")
            values[key] = _coerce(raw, types[key])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ValueError(f"unknown configuration key {key!r}")
        values[key] = value
    config = PipelineConfig(**values)
    config.validate()
    return config


def save_config(config: PipelineConfig, path: str | Path) -> None:
    lines = [
        f"{f.name} = {getattr(config, f.name)}"
        for f in dataclasses.fields(config)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
