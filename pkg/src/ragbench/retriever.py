"""Vector retrieval over the knowledge base.

Whole articles are embedded (no chunking) into an exact-scan index. A query
is expanded by one of four strategies, searched per expansion, optionally
fused with Reciprocal Rank Fusion, post-filtered by user applicability, and
cut to the top k. Ties always break by ascending article id so results are
reproducible.
"""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import KnowledgeBase, UserMetadata, METADATA_FIELDS, WILDCARD
from .embedding import EmbeddingProvider, embed_batch
from .errors import InputError, ProviderError
from .generation import ChatPrompt, ChatProvider
from . import prompts

STRATEGIES = ("basic", "intended_topics", "hyde", "multi_query")

_STRATEGY_ALIASES = {
    "basic": "basic",
    "topics": "intended_topics",
    "intended_topics": "intended_topics",
    "hyde": "hyde",
    "multi": "multi_query",
    "multi_query": "multi_query",
}

ORIGIN_ORIGINAL = "original"
ORIGIN_TOPIC = "topic"
ORIGIN_HYDE = "hyde"
ORIGIN_VARIANT = "variant"


def normalize_strategy(name: str) -> str:
    try:
        return _STRATEGY_ALIASES[name]
    except KeyError:
        raise InputError(f"unknown strategy: {name!r} (expected one of {sorted(_STRATEGY_ALIASES)})") from None


@dataclass(frozen=True)
class PlannedQuery:
    text: str
    origin: str


@dataclass(frozen=True)
class QueryPlan:
    strategy: str
    queries: tuple[PlannedQuery, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class RankedArticle:
    article_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RetrievalResult:
    ranked: tuple[RankedArticle, ...]
    applied_filters: UserMetadata
    strategy: str
    plan: QueryPlan
    filtered_out: bool = False  # every candidate failed the applicability filter
    short: bool = False  # fewer applicable candidates than requested k

    def article_ids(self) -> list[str]:
        return [entry.article_id for entry in self.ranked]


# ---------------------------------------------------------------------------
# Index build, search, persistence

INDEX_FORMAT = "ragbench-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class VectorIndex:
    ids: tuple[str, ...]
    matrix: np.ndarray  # (n, dim) float64, unit rows, row i belongs to ids[i]
    dimension: int
    provider_fingerprint: str

    def __len__(self) -> int:
        return len(self.ids)


def build_index(kb: KnowledgeBase, provider: EmbeddingProvider) -> VectorIndex:
    """Embed every kb article; entries are ordered by article id."""
    if len(kb) == 0:
        raise InputError("cannot index an empty knowledge base")
    articles = sorted(kb, key=lambda a: a.id)
    vectors = embed_batch(provider, [a.text for a in articles])
    matrix = np.vstack(vectors)
    return VectorIndex(
        ids=tuple(a.id for a in articles),
        matrix=matrix,
        dimension=int(matrix.shape[1]),
        provider_fingerprint=provider.fingerprint,
    )


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Versioned header line followed by one (article_id, vector) line each.

    JSON float serialization round-trips exactly, so saving a rebuilt index
    from the deterministic provider is byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "dimension": index.dimension,
        "provider": index.provider_fingerprint,
        "count": len(index.ids),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for article_id, row in zip(index.ids, index.matrix):
            fh.write(json.dumps([article_id, [float(x) for x in row]]) + "\n")


def load_index(path: str | Path) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != INDEX_FORMAT:
            raise InputError(f"not a {INDEX_FORMAT} file: {path}")
        if header.get("version") != INDEX_VERSION:
            raise InputError(f"unsupported index version: {header.get('version')}")
        ids = []
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            article_id, values = json.loads(line)
            ids.append(article_id)
            rows.append(values)
    if len(ids) != header["count"]:
        raise InputError(f"index entry count mismatch: header {header['count']}, found {len(ids)}")
    matrix = np.asarray(rows, dtype=np.float64)
    return VectorIndex(
        ids=tuple(ids),
        matrix=matrix,
        dimension=int(header["dimension"]),
        provider_fingerprint=str(header["provider"]),
    )


def search(index: VectorIndex, query_vector: np.ndarray, n: int) -> list[tuple[str, float]]:
    """Top-n entries by dot product (equals cosine for unit vectors)."""
    if n < 1:
        raise InputError("n must be >= 1")
    scores = index.matrix @ np.asarray(query_vector, dtype=np.float64)
    order = np.lexsort((np.asarray(index.ids), -scores))
    top = order[:n]
    return [(index.ids[i], float(scores[i])) for i in top]


# ---------------------------------------------------------------------------
# Query transformation

_LIST_LINE_RE = re.compile(r"^\s*(?:[-*•]+|\d+[.)])\s*")


def _parse_list(raw: str, expected: int) -> list[str] | None:
    """Parse one-item-per-line output; tolerate a single comma-joined line."""
    lines = [_LIST_LINE_RE.sub("", line).strip() for line in raw.splitlines()]
    lines = [line for line in lines if line]
    if len(lines) == expected:
        return lines
    if len(lines) == 1 and expected > 1:
        parts = [part.strip() for part in re.split(r"[;,]", lines[0]) if part.strip()]
        if len(parts) == expected:
            return parts
    return None


def _ask_list(
    llm: ChatProvider,
    user_prompt: str,
    expected: int,
    pad_with: str,
) -> tuple[list[str], list[str]]:
    """Ask for an exact-count list; re-prompt once, then truncate/pad."""
    prompt = ChatPrompt(system=prompts.TRANSFORM_SYSTEM, user=user_prompt)
    raw = llm.complete(prompt)
    items = _parse_list(raw, expected)
    if items is not None:
        return items, []
    raw = llm.complete(prompt)  # one re-prompt on malformed output
    items = _parse_list(raw, expected)
    if items is not None:
        return items, []
    lines = [_LIST_LINE_RE.sub("", line).strip() for line in raw.splitlines()]
    lines = [line for line in lines if line]
    warnings = []
    if len(lines) > expected:
        lines = lines[:expected]
        warnings.append(f"llm returned too many items; truncated to {expected}")
    if len(lines) < expected:
        lines = lines + [pad_with] * (expected - len(lines))
        warnings.append(f"llm returned too few items; padded to {expected}")
    return lines, warnings


def transform_query(
    question: str,
    strategy: str,
    llm: ChatProvider | None = None,
    n_variants: int = 3,
) -> QueryPlan:
    """Expand a question into the queries the chosen strategy embeds.

    basic embeds the question itself and never calls the LLM. intended_topics
    and hyde replace it with exactly three rewrites. multi_query keeps the
    original and adds paraphrase variants plus the topic and hyde rewrites.
    LLM failure falls back to a basic plan with a warning flag.
    """
    if not question:
        raise InputError("question must be non-empty")
    strategy = normalize_strategy(strategy)
    if strategy == "basic":
        return QueryPlan(strategy="basic", queries=(PlannedQuery(question, ORIGIN_ORIGINAL),))
    if llm is None:
        raise InputError(f"strategy {strategy} requires a chat provider")

    try:
        warnings: list[str] = []
        queries: list[PlannedQuery] = []
        if strategy in ("intended_topics", "multi_query"):
            topics, w = _ask_list(llm, prompts.TOPICS_USER.format(question=question), 3, question)
            warnings += w
            topic_queries = [PlannedQuery(t, ORIGIN_TOPIC) for t in topics]
        if strategy in ("hyde", "multi_query"):
            excerpts, w = _ask_list(llm, prompts.HYDE_USER.format(question=question), 3, question)
            warnings += w
            hyde_queries = [PlannedQuery(t, ORIGIN_HYDE) for t in excerpts]

        if strategy == "intended_topics":
            queries = topic_queries
        elif strategy == "hyde":
            queries = hyde_queries
        else:
            variants, w = _ask_list(
                llm, prompts.VARIANTS_USER.format(question=question, n=n_variants), n_variants, question
            )
            warnings += w
            queries = (
                [PlannedQuery(question, ORIGIN_ORIGINAL)]
                + [PlannedQuery(t, ORIGIN_VARIANT) for t in variants]
                + topic_queries
                + hyde_queries
            )
        return QueryPlan(strategy=strategy, queries=tuple(queries), warnings=tuple(warnings))
    except ProviderError as exc:
        return QueryPlan(
            strategy="basic",
            queries=(PlannedQuery(question, ORIGIN_ORIGINAL),),
            warnings=(f"llm unavailable, fell back to basic: {exc}",),
        )


# ---------------------------------------------------------------------------
# Reciprocal Rank Fusion

def rrf_fuse(rankings: Sequence[Sequence[str]], k_const: int = 60) -> list[tuple[str, float]]:
    """Fuse ranked id lists: score(d) = sum over lists of 1 / (k_const + rank).

    Ranks are 1-based. Output is sorted by score descending, ties by ascending
    id, and covers the union of the input ids. Scores are accumulated with an
    exactly-rounded sum, so permuting the input lists cannot change them.
    """
    if not rankings:
        raise InputError("rankings must be non-empty")
    if k_const < 1:
        raise InputError("k_const must be a positive integer")
    contributions: dict[str, list[float]] = defaultdict(list)
    for ranking in rankings:
        seen = set()
        for rank, doc_id in enumerate(ranking, 1):
            if doc_id in seen:
                raise InputError(f"duplicate id within one ranking: {doc_id}")
            seen.add(doc_id)
            contributions[doc_id].append(1.0 / (k_const + rank))
    scored = [(doc_id, math.fsum(values)) for doc_id, values in contributions.items()]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


# ---------------------------------------------------------------------------
# Filtered retrieval

def is_applicable(article_meta: UserMetadata, user_meta: UserMetadata) -> bool:
    """Field-wise equality with the wildcard matching anything on either side."""
    for name in METADATA_FIELDS:
        article_value = getattr(article_meta, name)
        user_value = getattr(user_meta, name)
        if article_value != WILDCARD and user_value != WILDCARD and article_value != user_value:
            return False
    return True


def retrieve(
    index: VectorIndex,
    kb: KnowledgeBase,
    embedder: EmbeddingProvider,
    question: str,
    user: UserMetadata,
    strategy: str = "basic",
    k: int = 5,
    overfetch: int = 50,
    llm: ChatProvider | None = None,
    rrf_k: int = 60,
    n_variants: int = 3,
) -> RetrievalResult:
    """Search with the chosen strategy, post-filter by applicability, cut to k.

    Every plan query fetches its top ``overfetch`` candidates. multi_query
    fuses the per-query rankings with RRF; the other strategies score each
    candidate by its maximum cosine over the plan queries. Candidates are then
    restricted to articles applicable to the user, preserving order.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if overfetch < 1:
        raise InputError("overfetch must be >= 1")
    if embedder.fingerprint != index.provider_fingerprint:
        raise InputError(
            f"index was built with provider {index.provider_fingerprint!r}, "
            f"got {embedder.fingerprint!r}"
        )

    plan = transform_query(question, strategy, llm=llm, n_variants=n_variants)
    query_vectors = embed_batch(embedder, [q.text for q in plan.queries])

    ids_array = np.asarray(index.ids)
    per_query_scores = [index.matrix @ v for v in query_vectors]
    per_query_top = []
    for scores in per_query_scores:
        order = np.lexsort((ids_array, -scores))[:overfetch]
        per_query_top.append([index.ids[i] for i in order])

    if plan.strategy == "multi_query":
        candidates = rrf_fuse(per_query_top, k_const=rrf_k)
    else:
        union = set()
        for top in per_query_top:
            union.update(top)
        position = {article_id: i for i, article_id in enumerate(index.ids)}
        best = np.maximum.reduce(per_query_scores)
        candidates = sorted(
            ((article_id, float(best[position[article_id]])) for article_id in union),
            key=lambda item: (-item[1], item[0]),
        )

    survivors = [
        (article_id, score)
        for article_id, score in candidates
        if is_applicable(kb.get(article_id).applicability, user)
    ]

    ranked = tuple(
        RankedArticle(article_id=article_id, score=score, rank=rank)
        for rank, (article_id, score) in enumerate(survivors[:k], 1)
    )
    return RetrievalResult(
        ranked=ranked,
        applied_filters=user,
        strategy=plan.strategy,
        plan=plan,
        filtered_out=not survivors,
        short=len(survivors) < k,
    )
