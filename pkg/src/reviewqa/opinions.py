"""Rule-based opinion/aspect extraction over tokenized reviews.

Two lexicon-driven patterns produce <opinion, aspect> pairs:

  (a) adjacency: an opinion word followed by the nearest aspect phrase
      within a 4-token window ("good writing", "no free wifi");
  (b) copula: "ASPECT is|was|were|are [modifier] OPINION"
      ("character development was quite impressive").

Negation modifiers (not/no/never) directly before the opinion word are
absorbed into the opinion surface; intensity modifiers (very/quite/too,
...) are tolerated by the patterns but dropped from the surface, so
"was quite impressive" yields the opinion "impressive" while "not
believable" stays intact.  Aspect phrases are runs of content tokens
(not opinion words, modifiers, stopwords or punctuation), capped at
three tokens, ending at the aspect head.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import Review, ReviewCollection, Token, tokenize

logger = logging.getLogger(__name__)

COPULAS = frozenset({"is", "was", "were", "are"})

# how far a pattern may look for its counterpart
ASPECT_WINDOW = 4
MAX_ASPECT_TOKENS = 3

# punctuation that ends the search window of pattern (a)
_BOUNDARY = frozenset({".", "!", "?", ";", ":"})


def load_lexicon(path: str | Path) -> frozenset[str]:
    """Load a word-per-line lexicon file ('#' starts a comment)."""
    words = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
    return frozenset(words)


def _packaged(name: str) -> frozenset[str]:
    with resources.as_file(resources.files("reviewqa.data") / name) as p:
        return load_lexicon(p)


@dataclass(frozen=True)
class ModifierLexicon:
    negations: frozenset[str]
    intensifiers: frozenset[str]

    def __contains__(self, word: str) -> bool:
        return word in self.negations or word in self.intensifiers


def default_opinion_lexicon() -> frozenset[str]:
    return _packaged("opinion_words.txt")


def default_modifier_lexicon() -> ModifierLexicon:
    return ModifierLexicon(
        negations=_packaged("negation_words.txt"),
        intensifiers=_packaged("intensifier_words.txt"),
    )


def default_stopwords() -> frozenset[str]:
    return _packaged("stopwords.txt")


@dataclass(frozen=True)
class Extraction:
    """An <opinion, aspect> pair anchored to token indices of its review."""

    opinion: str
    aspect: str
    opinion_span: tuple[int, int]  # token indices, [start, end)
    aspect_span: tuple[int, int]

    def __post_init__(self):
        if not self.opinion or not self.aspect:
            raise ValueError("opinion and aspect must be non-empty")

    @property
    def canonical_key(self) -> str:
        return f"{self.opinion.lower()}|{self.aspect.lower()}"


@dataclass
class VocabEntry:
    opinion: str
    aspect: str
    review_ids: set[str] = field(default_factory=set)
    per_item_counts: dict[str, int] = field(default_factory=dict)

    @property
    def review_frequency(self) -> int:
        return len(self.review_ids)


@dataclass
class ExtractionVocabulary:
    """Corpus-level extraction table keyed by canonical extraction key.

    Frequencies count distinct reviews.  The per-entry review id set is
    what later lets topics be paired with the concrete reviews that
    mention a neighbor.
    """

    entries: dict[str, VocabEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def frequency(self, key: str) -> int:
        return self.entries[key].review_frequency

    def merge_review(self, review: Review, extractions: list[Extraction]) -> None:
        for key in {e.canonical_key for e in extractions}:
            opinion, aspect = key.split("|", 1)
            entry = self.entries.setdefault(key, VocabEntry(opinion, aspect))
            if review.review_id not in entry.review_ids:
                entry.review_ids.add(review.review_id)
                entry.per_item_counts[review.item_id] = (
                    entry.per_item_counts.get(review.item_id, 0) + 1
                )


def _is_content(
    lower: str,
    token: Token,
    opinion_lexicon: frozenset[str],
    modifiers: ModifierLexicon,
    stopwords: frozenset[str],
) -> bool:
    """True when a token can be part of an aspect phrase."""
    if not token.surface[0].isalnum() and token.surface[0] != "_":
        return False
    if lower in opinion_lexicon or lower in modifiers or lower in stopwords:
        return False
    if lower in COPULAS:
        return False
    return True


def _aspect_run_ending_at(content: list[bool], end: int) -> tuple[int, int] | None:
    """Longest run of content tokens ending at ``end``, capped in length."""
    if end < 0 or not content[end]:
        return None
    start = end
    while start > 0 and content[start - 1] and end - start + 1 < MAX_ASPECT_TOKENS:
        start -= 1
    return (start, end + 1)


def _aspect_run_starting_at(content: list[bool], start: int, n: int) -> tuple[int, int]:
    end = start
    while end + 1 < n and content[end + 1] and end - start + 1 < MAX_ASPECT_TOKENS:
        end += 1
    return (start, end + 1)


def extract_opinions(
    review: Review,
    opinion_lexicon: frozenset[str],
    modifier_lexicon: ModifierLexicon,
    stopwords: frozenset[str] | None = None,
) -> list[Extraction]:
    """Find all <opinion, aspect> extractions in one review."""
    stopwords = stopwords if stopwords is not None else default_stopwords()
    tokens = tokenize(review.text)
    if not tokens:
        return []
    n = len(tokens)
    lower = [t.surface.lower() for t in tokens]
    content = [
        _is_content(lower[i], tokens[i], opinion_lexicon, modifier_lexicon, stopwords)
        for i in range(n)
    ]
    text_bytes = review.text.encode("utf-8")

    def surface(span: tuple[int, int]) -> str:
        s = tokens[span[0]].byte_start
        e = tokens[span[1] - 1].byte_end
        return text_bytes[s:e].decode("utf-8")

    def opinion_span_at(i: int) -> tuple[int, int]:
        # absorb a chain of modifiers left of the opinion word; the span
        # stretches back to the leftmost negation, if any
        start = i
        j = i - 1
        leftmost_negation = None
        while j >= 0 and lower[j] in modifier_lexicon:
            if lower[j] in modifier_lexicon.negations:
                leftmost_negation = j
            j -= 1
        if leftmost_negation is not None:
            start = leftmost_negation
        return (start, i + 1)

    found: list[Extraction] = []
    seen: set[tuple[str, tuple[int, int], tuple[int, int]]] = set()

    def emit(op_span: tuple[int, int], asp_span: tuple[int, int]) -> None:
        ext = Extraction(
            opinion=surface(op_span),
            aspect=surface(asp_span),
            opinion_span=op_span,
            aspect_span=asp_span,
        )
        sig = (ext.canonical_key, op_span, asp_span)
        if sig not in seen:
            seen.add(sig)
            found.append(ext)

    # pattern (b): ASPECT copula [modifiers] OPINION
    for c in range(n):
        if lower[c] not in COPULAS:
            continue
        asp = _aspect_run_ending_at(content, c - 1)
        if asp is None:
            continue
        p = c + 1
        while p < n and p <= c + ASPECT_WINDOW and lower[p] in modifier_lexicon:
            p += 1
        if p < n and p <= c + ASPECT_WINDOW and lower[p] in opinion_lexicon:
            emit(opinion_span_at(p), asp)

    # pattern (a): OPINION followed by nearest aspect phrase
    for i in range(n):
        if lower[i] not in opinion_lexicon:
            continue
        for j in range(i + 1, min(i + 1 + ASPECT_WINDOW, n)):
            if lower[j] in _BOUNDARY or lower[j] in COPULAS:
                break
            if content[j]:
                emit(opinion_span_at(i), _aspect_run_starting_at(content, j, n))
                break

    found.sort(key=lambda e: (e.opinion_span, e.aspect_span))
    return found


def aggregate_extractions(
    collection: ReviewCollection,
    opinion_lexicon: frozenset[str] | None = None,
    modifier_lexicon: ModifierLexicon | None = None,
    stopwords: frozenset[str] | None = None,
) -> ExtractionVocabulary:
    """Run extraction over a whole collection and count distinct reviews.

    The result is order-independent: counts are keyed by review id and
    item id, so permuting the input reviews cannot change them.
    """
    opinion_lexicon = (
        opinion_lexicon if opinion_lexicon is not None else default_opinion_lexicon()
    )
    modifier_lexicon = (
        modifier_lexicon if modifier_lexicon is not None else default_modifier_lexicon()
    )
    stopwords = stopwords if stopwords is not None else default_stopwords()
    vocab = ExtractionVocabulary()
    for review in collection.reviews:
        exts = extract_opinions(review, opinion_lexicon, modifier_lexicon, stopwords)
        if exts:
            vocab.merge_review(review, exts)
    return vocab


def save_vocabulary(vocab: ExtractionVocabulary, path: str | Path) -> None:
    import json

    payload = {
        key: {
            "opinion": e.opinion,
            "aspect": e.aspect,
            "review_ids": sorted(e.review_ids),
            "per_item_counts": dict(sorted(e.per_item_counts.items())),
        }
        for key, e in sorted(vocab.entries.items())
    }
    Path(path).write_text(
        json.dumps({"format_version": 1, "entries": payload}, indent=1),
        encoding="utf-8",
    )


def load_vocabulary(path: str | Path) -> ExtractionVocabulary:
    import json

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    vocab = ExtractionVocabulary()
    for key, rec in raw["entries"].items():
        vocab.entries[key] = VocabEntry(
            opinion=rec["opinion"],
            aspect=rec["aspect"],
            review_ids=set(rec["review_ids"]),
            per_item_counts=dict(rec["per_item_counts"]),
        )
    return vocab
