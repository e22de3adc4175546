"""Reference-based evaluation: Levenshtein, BLEU, ROUGE, BERTScore, accuracy.

Tokenization is shared by the n-gram metrics: lowercase, whitespace split.
BLEU is sentence-level up to 4-grams with uniform weights, brevity penalty,
and add-one smoothing on zero counts. ROUGE-L uses plain LCS with beta=1.
BERTScore is greedy maximum-cosine matching of per-token embeddings from a
pluggable provider, without idf weighting. Retrieval accuracy counts a hit
when a retrieved article is within a Levenshtein threshold of the gold
article (strictly below; the default threshold is 100 edits), which absorbs
near-duplicate article versions.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import KnowledgeBase
from .embedding import EmbeddingProvider, embed_batch
from .errors import InputError
from .retriever import RetrievalResult

DEFAULT_LEVENSHTEIN_THRESHOLD = 100


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def tokenize(text: str) -> list[str]:
    return text.lower().split()


# ---------------------------------------------------------------------------
# Levenshtein distance

def _codepoints(text: str) -> np.ndarray:
    if not text:
        return np.empty(0, dtype=np.uint32)
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)


def levenshtein(a: str, b: str) -> int:
    """Minimal unit-cost edit count between two texts, per Unicode scalar.

    Row-vectorized dynamic program; the deletion sweep uses the identity
    min_{i<=j}(row[i] + (j - i)) = accumulate-min(row - j) + j.
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    xs = _codepoints(a)
    ys = _codepoints(b)
    n = len(ys)
    offsets = np.arange(n + 1)
    row = offsets.copy()
    for i, x in enumerate(xs, 1):
        substitute = row[:-1] + (ys != x)
        insert_above = row[1:] + 1
        new = np.empty(n + 1, dtype=row.dtype)
        new[0] = i
        new[1:] = np.minimum(substitute, insert_above)
        row = np.minimum.accumulate(new - offsets) + offsets
    return int(row[-1])


# ---------------------------------------------------------------------------
# BLEU

def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU; empty candidate or reference scores 0.0."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    log_precision_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        total = sum(cand_counts.values())
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        if matched == 0:
            precision = 1.0 / (total + 1.0)  # add-one smoothing on zero counts
        else:
            precision = matched / total
        log_precision_sum += math.log(precision) / max_n
    c, r = len(cand), len(ref)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_precision_sum)


# ---------------------------------------------------------------------------
# ROUGE

def _lcs_length(xs: Sequence[str], ys: Sequence[str]) -> int:
    if not xs or not ys:
        return 0
    prev = [0] * (len(ys) + 1)
    for x in xs:
        cur = [0] * (len(ys) + 1)
        for j, y in enumerate(ys, 1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge(candidate: str, reference: str, variant: int | str) -> PRF:
    """ROUGE-1/2 (clipped n-gram overlap) or ROUGE-L (LCS); returns (P, R, F1)."""
    if variant not in (1, 2, "1", "2", "L", "l"):
        raise InputError(f"unknown ROUGE variant: {variant!r}")
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)

    if variant in ("L", "l"):
        overlap = _lcs_length(cand, ref)
        denom_p, denom_r = len(cand), len(ref)
    else:
        n = int(variant)
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        denom_p = sum(cand_counts.values())
        denom_r = sum(ref_counts.values())
        if denom_p == 0 or denom_r == 0:
            return PRF(0.0, 0.0, 0.0)

    precision = overlap / denom_p
    recall = overlap / denom_r
    return PRF(precision, recall, _f1(precision, recall))


# ---------------------------------------------------------------------------
# BERTScore

def bertscore(candidate: str, reference: str, token_embedder: EmbeddingProvider) -> PRF:
    """Greedy matching over the token cosine matrix; no idf weighting."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise InputError("bertscore requires non-empty token sequences")
    cand_vectors = np.vstack(embed_batch(token_embedder, cand))
    ref_vectors = np.vstack(embed_batch(token_embedder, ref))
    similarity = cand_vectors @ ref_vectors.T  # unit vectors: dot == cosine
    precision = float(np.mean(np.max(similarity, axis=1)))
    recall = float(np.mean(np.max(similarity, axis=0)))
    return PRF(precision, recall, _f1(precision, recall))


# ---------------------------------------------------------------------------
# Score cards for one candidate/reference pair

@dataclass(frozen=True)
class ReferenceScores:
    bleu: float
    rouge1: PRF
    rouge2: PRF
    rougeL: PRF
    bertscore: PRF
    flags: tuple[str, ...] = ()

    def to_values(self) -> dict[str, float]:
        """Flat metric-key mapping shared by all scoring commands."""
        values = {"bleu": self.bleu}
        for name, prf in (("rouge1", self.rouge1), ("rouge2", self.rouge2), ("rougeL", self.rougeL)):
            values[f"{name}_p"] = prf.precision
            values[f"{name}_r"] = prf.recall
            values[f"{name}_f"] = prf.f1
        values["bertscore_p"] = self.bertscore.precision
        values["bertscore_r"] = self.bertscore.recall
        values["bertscore_f"] = self.bertscore.f1
        return values


def score_pair(candidate: str, reference: str, token_embedder: EmbeddingProvider) -> ReferenceScores:
    """All reference metrics for one pair; empty inputs flag and score zero."""
    flags = []
    if not tokenize(candidate):
        flags.append("empty-candidate")
    if not tokenize(reference):
        flags.append("empty-reference")
    if flags:
        zero = PRF(0.0, 0.0, 0.0)
        return ReferenceScores(0.0, zero, zero, zero, zero, tuple(flags))
    return ReferenceScores(
        bleu=bleu(candidate, reference),
        rouge1=rouge(candidate, reference, 1),
        rouge2=rouge(candidate, reference, 2),
        rougeL=rouge(candidate, reference, "L"),
        bertscore=bertscore(candidate, reference, token_embedder),
        flags=(),
    )


# ---------------------------------------------------------------------------
# Retrieval accuracy with Levenshtein tolerance

@dataclass(frozen=True)
class RetrievalAccuracy:
    top_k: dict[int, float]
    threshold: int
    n_queries: int


def retrieval_accuracy(
    results: Mapping[str, RetrievalResult],
    gold: Mapping[str, str],
    kb: KnowledgeBase,
    ks: Sequence[int] = (1, 2, 3, 5),
    threshold: int = DEFAULT_LEVENSHTEIN_THRESHOLD,
) -> RetrievalAccuracy:
    """Hit fraction at each k; a retrieved article within ``threshold`` edits
    of the gold article counts (strictly below). ``threshold=1`` is exact match.
    """
    if not results:
        raise InputError("results must be non-empty")
    if threshold < 1:
        raise InputError("threshold must be >= 1")
    ks = sorted(set(ks))
    if ks[0] < 1:
        raise InputError("every k must be >= 1")

    max_k = ks[-1]
    hits = {k: 0 for k in ks}
    for sample_id, result in results.items():
        if sample_id not in gold:
            raise InputError(f"no gold article for sample {sample_id}")
        gold_text = kb.get(gold[sample_id]).text
        first_hit_rank = None
        for entry in result.ranked[:max_k]:
            text = kb.get(entry.article_id).text
            # |len difference| lower-bounds the distance; skip hopeless pairs
            if abs(len(text) - len(gold_text)) >= threshold:
                continue
            if levenshtein(text, gold_text) < threshold:
                first_hit_rank = entry.rank
                break
        if first_hit_rank is not None:
            for k in ks:
                if first_hit_rank <= k:
                    hits[k] += 1
    n = len(results)
    return RetrievalAccuracy(
        top_k={k: hits[k] / n for k in ks},
        threshold=threshold,
        n_queries=n,
    )
