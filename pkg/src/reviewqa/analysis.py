"""Dataset statistics: lengths, answerability, subjectivity, diversity.

All percentages are reported in [0, 100].  "Subjective" means the 1-5
score is at or above the binarization threshold, which is always an
explicit parameter; reports print the threshold they used.  Statistics
over empty denominators are reported as absent (None), never as 0.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .assembly import AnnotatedExample
from .corpus import tokenize

DEFAULT_SUBJ_THRESHOLD = 4


@dataclass
class DomainStats:
    domain: str
    n_train: int = 0
    n_dev: int = 0
    n_test: int = 0
    n_total: int = 0
    mean_review_len: float | None = None
    mean_q_len: float | None = None
    mean_a_len: float | None = None
    pct_answerable: float | None = None
    pct_subj_q: float | None = None
    pct_subj_a: float | None = None
    n_distinct_questions: int = 0
    n_distinct_topics: int = 0
    pct_boolean_q: float | None = None


@dataclass
class SubjectivityJoint:
    """Percentages over answerable examples; the four cells sum to 100."""

    subj_q_subj_a: float
    fact_q_subj_a: float
    subj_q_fact_a: float
    fact_q_fact_a: float

    def cells(self) -> tuple[float, float, float, float]:
        return (
            self.subj_q_subj_a,
            self.fact_q_subj_a,
            self.subj_q_fact_a,
            self.fact_q_fact_a,
        )


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _pct(part: int, whole: int) -> float | None:
    return 100.0 * part / whole if whole else None


def _normalize_question(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip())


def load_boolean_prefixes(path: str | Path | None = None) -> frozenset[str]:
    """Prefix lexicon: single words and two-word entries, lowercased."""
    if path is None:
        with resources.as_file(
            resources.files("reviewqa.data") / "boolean_prefixes.txt"
        ) as p:
            return load_boolean_prefixes(p)
    entries = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                entries.add(line)
    return frozenset(entries)


def detect_boolean(question_text: str, prefix_lexicon: frozenset[str]) -> bool:
    """True when the first token or first bigram is in the prefix lexicon."""
    words = [t.surface.lower() for t in tokenize(question_text)]
    if not words:
        return False
    if words[0] in prefix_lexicon:
        return True
    return len(words) > 1 and f"{words[0]} {words[1]}" in prefix_lexicon


def domain_stats(
    examples: list[AnnotatedExample],
    subj_threshold: int,
    prefix_lexicon: frozenset[str] | None = None,
) -> dict[str, DomainStats]:
    """Per-domain statistics table over the example set."""
    prefix_lexicon = (
        prefix_lexicon if prefix_lexicon is not None else load_boolean_prefixes()
    )
    by_domain: dict[str, list[AnnotatedExample]] = {}
    for e in examples:
        by_domain.setdefault(e.domain, []).append(e)

    out: dict[str, DomainStats] = {}
    for domain in sorted(by_domain):
        exs = by_domain[domain]
        stats = DomainStats(domain=domain)
        stats.n_train = sum(1 for e in exs if e.split == "train")
        stats.n_dev = sum(1 for e in exs if e.split == "dev")
        stats.n_test = sum(1 for e in exs if e.split == "test")
        stats.n_total = len(exs)
        # review length counts each distinct review once
        review_lens = {e.review_id: len(tokenize(e.review_text)) for e in exs}
        stats.mean_review_len = _mean(list(review_lens.values()))
        stats.mean_q_len = _mean([len(tokenize(e.question_text)) for e in exs])
        answerable = [e for e in exs if e.answerable]
        stats.mean_a_len = _mean([len(tokenize(e.answer_text)) for e in answerable])
        stats.pct_answerable = _pct(len(answerable), len(exs))
        stats.pct_subj_q = _pct(
            sum(1 for e in exs if e.question_subj_score >= subj_threshold), len(exs)
        )
        stats.pct_subj_a = _pct(
            sum(1 for e in answerable if e.answer_subj_score >= subj_threshold),
            len(answerable),
        )
        questions = {_normalize_question(e.question_text) for e in exs}
        stats.n_distinct_questions = len(questions)
        stats.n_distinct_topics = len({e.topic_key for e in exs})
        stats.pct_boolean_q = _pct(
            sum(1 for e in exs if detect_boolean(e.question_text, prefix_lexicon)),
            len(exs),
        )
        out[domain] = stats
    return out


def subjectivity_joint(
    examples: list[AnnotatedExample], subj_threshold: int
) -> SubjectivityJoint | None:
    """Joint question/answer subjectivity over answerable examples."""
    answerable = [e for e in examples if e.answerable]
    if not answerable:
        return None
    n = len(answerable)
    cells = [0, 0, 0, 0]
    for e in answerable:
        subj_q = e.question_subj_score >= subj_threshold
        subj_a = e.answer_subj_score >= subj_threshold
        if subj_q and subj_a:
            cells[0] += 1
        elif not subj_q and subj_a:
            cells[1] += 1
        elif subj_q and not subj_a:
            cells[2] += 1
        else:
            cells[3] += 1
    return SubjectivityJoint(*(100.0 * c / n for c in cells))


@dataclass
class PrefixDistribution:
    """Relative frequency of lowercase question prefixes per n-gram order."""

    by_order: dict[int, dict[str, float]] = field(default_factory=dict)

    def frequency(self, prefix: str) -> float:
        n = len(prefix.split())
        return self.by_order.get(n, {}).get(prefix, 0.0)


def prefix_distribution(questions: list[str], max_n: int = 3) -> PrefixDistribution:
    if not questions:
        raise ValueError("prefix distribution needs at least one question")
    dist = PrefixDistribution()
    for n in range(1, max_n + 1):
        counts: dict[str, int] = {}
        total = 0
        for q in questions:
            words = [t.surface.lower() for t in tokenize(q) if t.surface[0].isalnum()]
            if len(words) < n:
                continue
            prefix = " ".join(words[:n])
            counts[prefix] = counts.get(prefix, 0) + 1
            total += 1
        dist.by_order[n] = (
            {p: c / total for p, c in sorted(counts.items())} if total else {}
        )
    return dist


# --- report writers -----------------------------------------------------

def write_domain_stats_csv(
    stats: dict[str, DomainStats], path: str | Path, subj_threshold: int
) -> None:
    columns = [
        "domain",
        "n_train",
        "n_dev",
        "n_test",
        "n_total",
        "mean_review_len",
        "mean_q_len",
        "mean_a_len",
        "pct_answerable",
        "pct_subj_q",
        "pct_subj_a",
        "n_distinct_questions",
        "n_distinct_topics",
        "pct_boolean_q",
    ]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns + ["subj_threshold"])
        for domain in sorted(stats):
            s = stats[domain]
            row = [getattr(s, c) for c in columns]
            row = ["" if v is None else v for v in row]
            writer.writerow(row + [subj_threshold])


def write_summary_text(
    stats: dict[str, DomainStats],
    joint: SubjectivityJoint | None,
    path: str | Path,
    subj_threshold: int,
) -> None:
    def fmt(v, width=8):
        if v is None:
            return " " * (width - 1) + "-"
        if isinstance(v, float):
            return f"{v:{width}.2f}"
        return f"{v:{width}d}"

    lines = [f"dataset statistics (subjectivity threshold: score >= {subj_threshold})", ""]
    lines.append(
        f"{'domain':<14}{'train':>8}{'dev':>8}{'test':>8}{'total':>8}"
        f"{'rev len':>9}{'q len':>8}{'a len':>8}{'%ans':>8}{'%subjQ':>8}{'%subjA':>8}{'%bool':>8}"
    )
    for domain in sorted(stats):
        s = stats[domain]
        lines.append(
            f"{domain:<14}{fmt(s.n_train)}{fmt(s.n_dev)}{fmt(s.n_test)}{fmt(s.n_total)}"
            f"{fmt(s.mean_review_len, 9)}{fmt(s.mean_q_len)}{fmt(s.mean_a_len)}"
            f"{fmt(s.pct_answerable)}{fmt(s.pct_subj_q)}{fmt(s.pct_subj_a)}{fmt(s.pct_boolean_q)}"
        )
    lines.append("")
    if joint is not None:
        lines.append("question/answer subjectivity over answerable examples (%):")
        lines.append(f"{'':<10}{'subj. Q':>10}{'fact. Q':>10}")
        lines.append(f"{'subj. A':<10}{joint.subj_q_subj_a:>10.2f}{joint.fact_q_subj_a:>10.2f}")
        lines.append(f"{'fact. A':<10}{joint.subj_q_fact_a:>10.2f}{joint.fact_q_fact_a:>10.2f}")
    else:
        lines.append("no answerable examples: joint subjectivity table absent")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def prefix_tree(dist: PrefixDistribution) -> dict:
    """Nested {name, value, children} structure for sunburst plotting."""

    def children_of(prefix: str, order: int) -> list[dict]:
        if order not in dist.by_order:
            return []
        nodes = []
        for p, freq in dist.by_order[order].items():
            if prefix and not p.startswith(prefix + " "):
                continue
            nodes.append(
                {"name": p, "value": freq, "children": children_of(p, order + 1)}
            )
        return nodes

    return {"name": "", "value": 1.0, "children": children_of("", 1)}


def write_prefix_json(dist: PrefixDistribution, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(prefix_tree(dist), indent=1, sort_keys=True), encoding="utf-8"
    )
