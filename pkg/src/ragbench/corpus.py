"""Corpus loading, cleaning, deduplication, and summary statistics.

Corpora arrive as JSON Lines, one record per line with ``question``,
``answer``, ``context``, and an optional ``metadata`` object. Loading cleans
every text field, deduplicates article texts into a knowledge base, and drops
records whose article would not fit the generation context window.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable, Iterator

from .errors import CorpusError, InputError

WILDCARD = "*"

METADATA_FIELDS = (
    "user_role",
    "company_name",
    "company_code",
    "region",
    "country_code",
    "faq_category",
    "process_id",
    "service_id",
)

Tokenizer = Callable[[str], list[str]]


def whitespace_tokens(text: str) -> list[str]:
    """Default tokenizer: whitespace split of already-cleaned text."""
    return text.split()


@dataclass(frozen=True)
class UserMetadata:
    """Applicability metadata; absent values normalize to the wildcard."""

    user_role: str = WILDCARD
    company_name: str = WILDCARD
    company_code: str = WILDCARD
    region: str = WILDCARD
    country_code: str = WILDCARD
    faq_category: str = WILDCARD
    process_id: str = WILDCARD
    service_id: str = WILDCARD

    @classmethod
    def from_dict(cls, raw: dict | None) -> "UserMetadata":
        raw = raw or {}
        values = {}
        for name in METADATA_FIELDS:
            value = raw.get(name)
            if value is None:
                values[name] = WILDCARD
            else:
                text = str(value).strip()
                values[name] = text if text else WILDCARD
        return cls(**values)

    def to_dict(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in METADATA_FIELDS}

    def is_wildcard(self) -> bool:
        return all(getattr(self, name) == WILDCARD for name in METADATA_FIELDS)


@dataclass(frozen=True)
class QASample:
    id: str
    question: str
    answer: str
    article_id: str
    metadata: UserMetadata


@dataclass(frozen=True)
class Article:
    id: str
    text: str
    applicability: UserMetadata
    token_count: int


@dataclass(frozen=True)
class KnowledgeBase:
    """Id-keyed article store; treat as immutable once built."""

    articles: dict[str, Article] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles.values())

    def __contains__(self, article_id: str) -> bool:
        return article_id in self.articles

    def get(self, article_id: str) -> Article:
        try:
            return self.articles[article_id]
        except KeyError:
            raise InputError(f"unknown article id: {article_id}") from None


# Cleaning rules. Each pass strictly shrinks the text whenever it changes
# anything besides mapping a single whitespace char to a space, so iterating
# to a fixed point terminates and makes clean_text idempotent by construction.
_TAG_RE = re.compile(r"<[^<>]*>")
_NBSP_RE = re.compile(r"&(?:nbsp|#160);")
_EMPTY_MARKUP_RE = re.compile(r"(\*\*|__|\*|_|`)\s+\1")
_WS_RE = re.compile(r"\s+")


def _clean_pass(text: str) -> str:
    text = _TAG_RE.sub(" ", text)
    text = _NBSP_RE.sub(" ", text)
    text = _EMPTY_MARKUP_RE.sub(" ", text)
    text = _WS_RE.sub(" ", text)
    return text.strip()


def clean_text(raw: str) -> str:
    """Strip markup tags and empty markdown fragments, collapse whitespace.

    Idempotent: ``clean_text(clean_text(x)) == clean_text(x)`` for any input.
    Empty output is legal.
    """
    current = raw
    while True:
        cleaned = _clean_pass(current)
        if cleaned == current:
            return current
        current = cleaned


def _stable_id(prefix: str, *parts: str) -> str:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()
    return f"{prefix}-{digest[:12]}"


_REQUIRED_KEYS = ("question", "answer", "context")


def load_corpus(
    source: Iterable[str] | IO[str],
    max_tokens: int = 4096,
    tokenizer: Tokenizer = whitespace_tokens,
) -> tuple[list[QASample], KnowledgeBase, int]:
    """Parse a JSON Lines record stream into samples and a knowledge base.

    Contexts are deduplicated by exact cleaned text. Records whose cleaned
    context exceeds ``max_tokens`` are excluded and counted in the returned
    ``skipped``. Malformed records raise :class:`CorpusError` with the
    offending line number. Loading is deterministic: the same stream yields
    identical ids, sample order, and skipped count.
    """
    if max_tokens <= 0:
        raise InputError("max_tokens must be positive")

    samples: list[QASample] = []
    articles: dict[str, Article] = {}
    id_by_text: dict[str, str] = {}
    seen_sample_ids: set[str] = set()
    skipped = 0

    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON ({exc.msg})", line=lineno) from None
        if not isinstance(record, dict):
            raise CorpusError("record is not a JSON object", line=lineno)

        missing = [key for key in _REQUIRED_KEYS if key not in record]
        if missing:
            raise CorpusError(f"missing field(s): {', '.join(missing)}", line=lineno)

        question = clean_text(str(record["question"]))
        answer = clean_text(str(record["answer"]))
        context = clean_text(str(record["context"]))
        empty = [
            key
            for key, value in (("question", question), ("answer", answer), ("context", context))
            if not value
        ]
        if empty:
            raise CorpusError(f"empty after cleaning: {', '.join(empty)}", line=lineno)

        token_count = len(tokenizer(context))
        if token_count > max_tokens:
            skipped += 1
            continue

        metadata = UserMetadata.from_dict(record.get("metadata"))
        article_id = id_by_text.get(context)
        if article_id is None:
            article_id = _stable_id("art", context)
            id_by_text[context] = article_id
            articles[article_id] = Article(
                id=article_id,
                text=context,
                applicability=metadata,
                token_count=token_count,
            )

        raw_id = record.get("id")
        sample_id = str(raw_id) if raw_id else _stable_id("qa", question, context)
        if sample_id in seen_sample_ids:
            raise CorpusError(f"duplicate sample id: {sample_id}", line=lineno)
        seen_sample_ids.add(sample_id)

        samples.append(
            QASample(
                id=sample_id,
                question=question,
                answer=answer,
                article_id=article_id,
                metadata=metadata,
            )
        )

    return samples, KnowledgeBase(articles), skipped


@dataclass(frozen=True)
class HistogramBucket:
    lo: int
    hi: int
    count: int


@dataclass(frozen=True)
class CorpusStats:
    n_articles: int
    n_samples: int
    token_histogram: tuple[HistogramBucket, ...]
    top_questions: tuple[tuple[str, int], ...]


def corpus_stats(
    samples: list[QASample],
    kb: KnowledgeBase,
    bucket_width: int = 500,
    top_n: int = 10,
) -> CorpusStats:
    """Token-count histogram over kb articles plus most frequent questions.

    Question frequency is exact-string; ties break lexicographically.
    """
    if bucket_width <= 0:
        raise InputError("bucket_width must be positive")
    if top_n < 0:
        raise InputError("top_n must be nonnegative")

    buckets: tuple[HistogramBucket, ...] = ()
    if len(kb) > 0:
        max_tokens = max(article.token_count for article in kb)
        counts = [0] * (max_tokens // bucket_width + 1)
        for article in kb:
            counts[article.token_count // bucket_width] += 1
        buckets = tuple(
            HistogramBucket(lo=i * bucket_width, hi=(i + 1) * bucket_width, count=c)
            for i, c in enumerate(counts)
        )

    frequency = Counter(sample.question for sample in samples)
    ranked = sorted(frequency.items(), key=lambda item: (-item[1], item[0]))
    return CorpusStats(
        n_articles=len(kb),
        n_samples=len(samples),
        token_histogram=buckets,
        top_questions=tuple(ranked[:top_n]),
    )


CORPUS_FORMAT = "ragbench-corpus"
CORPUS_VERSION = 1


def save_corpus(path, samples: list[QASample], kb: KnowledgeBase, skipped: int = 0) -> None:
    """Persist samples and knowledge base as one deterministic JSON document."""
    payload = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "skipped": skipped,
        "articles": [
            {
                "id": a.id,
                "text": a.text,
                "applicability": a.applicability.to_dict(),
                "token_count": a.token_count,
            }
            for a in kb
        ],
        "samples": [
            {
                "id": s.id,
                "question": s.question,
                "answer": s.answer,
                "article_id": s.article_id,
                "metadata": s.metadata.to_dict(),
            }
            for s in samples
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_corpus_store(path) -> tuple[list[QASample], KnowledgeBase, int]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CORPUS_FORMAT:
        raise CorpusError(f"not a {CORPUS_FORMAT} file: {path}")
    articles = {
        row["id"]: Article(
            id=row["id"],
            text=row["text"],
            applicability=UserMetadata.from_dict(row["applicability"]),
            token_count=row["token_count"],
        )
        for row in payload["articles"]
    }
    samples = [
        QASample(
            id=row["id"],
            question=row["question"],
            answer=row["answer"],
            article_id=row["article_id"],
            metadata=UserMetadata.from_dict(row["metadata"]),
        )
        for row in payload["samples"]
    ]
    return samples, KnowledgeBase(articles), int(payload.get("skipped", 0))
