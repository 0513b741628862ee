"""Review corpus loading and byte-offset tokenization.

Input corpora are line-delimited UTF-8 files, one JSON record per line
with fields ``review_id``, ``item_id``, ``domain`` and ``text``.  Unknown
fields are ignored so that source-specific exports can be fed in without
stripping.  Token offsets are byte offsets into the UTF-8 encoding of
the review text; answer spans downstream refer to these bytes, so the
tokenizer never normalizes or rewrites the input.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

KNOWN_DOMAINS = (
    "tripadvisor",
    "restaurants",
    "movies",
    "books",
    "electronics",
    "grocery",
)

# Word runs stay together, every other non-space character is its own token.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    byte_start: int
    byte_end: int


@dataclass(frozen=True)
class Review:
    review_id: str
    item_id: str
    domain: str
    text: str


@dataclass
class ReviewCollection:
    reviews: list[Review]
    index: dict[str, list[str]] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        if not self.index:
            self.index = {}
            for r in self.reviews:
                self.index.setdefault(r.item_id, []).append(r.review_id)
        self._by_id = {r.review_id: r for r in self.reviews}

    def __len__(self) -> int:
        return len(self.reviews)

    def get(self, review_id: str) -> Review:
        return self._by_id[review_id]

    def __contains__(self, review_id: str) -> bool:
        return review_id in self._by_id


def tokenize(text: str) -> list[Token]:
    """Split text into tokens carrying exact UTF-8 byte offsets.

    Words (unicode word characters) stay together; every other
    non-whitespace character becomes a single-char token.  Case is
    preserved and nothing is normalized, so slicing the encoded text by
    the recorded offsets always reproduces the surface form.
    """
    if not text:
        return []
    # cumulative byte offset for every character position
    byte_at = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        pos += len(ch.encode("utf-8"))
        byte_at[i + 1] = pos
    return [
        Token(m.group(), byte_at[m.start()], byte_at[m.end()])
        for m in _TOKEN_RE.finditer(text)
    ]


def token_boundaries(text: str) -> list[tuple[int, int]]:
    """Byte (start, end) pairs of the tokens of ``text``."""
    return [(t.byte_start, t.byte_end) for t in tokenize(text)]


class DuplicateReviewError(ValueError):
    pass


def load_reviews(path: str | Path, domain: str | None = None) -> ReviewCollection:
    """Load a line-delimited review file into a validated collection.

    ``domain`` fills records that do not carry their own domain field.
    Records missing review_id, item_id or a non-empty text are skipped
    with a warning and counted in ``ReviewCollection.skipped``; a
    duplicate review_id is fatal.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"review file not found: {path}")

    reviews: list[Review] = []
    seen: set[str] = set()
    skipped = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                logger.warning("%s:%d: malformed record skipped", path, lineno)
                skipped += 1
                continue
            rid = rec.get("review_id")
            iid = rec.get("item_id")
            text = rec.get("text")
            if not rid or not iid or not text:
                logger.warning(
                    "%s:%d: record missing review_id/item_id/text, skipped",
                    path,
                    lineno,
                )
                skipped += 1
                continue
            if rid in seen:
                raise DuplicateReviewError(
                    f"{path}:{lineno}: duplicate review_id {rid!r}"
                )
            seen.add(rid)
            reviews.append(
                Review(
                    review_id=str(rid),
                    item_id=str(iid),
                    domain=str(rec.get("domain") or domain or "other"),
                    text=str(text),
                )
            )
    if skipped:
        logger.warning("%s: skipped %d malformed record(s)", path, skipped)
    return ReviewCollection(reviews=reviews, skipped=skipped)


def save_reviews(collection: ReviewCollection, path: str | Path) -> None:
    """Write a collection back out in the normalized line-delimited format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in collection.reviews:
            fh.write(
                json.dumps(
                    {
                        "review_id": r.review_id,
                        "item_id": r.item_id,
                        "domain": r.domain,
                        "text": r.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
