#!/usr/bin/env python3
"""Retrieval accuracy of all four query strategies on one synthetic corpus.

The transformation LLM is a deterministic rewriter that derives topics,
hypothetical excerpts, and paraphrase variants from the question text, so
the comparison runs offline. Swap in a remote provider (CHAT_* env vars)
to reproduce the comparison with a real model; accuracy is known to be
sensitive to the transformation prompts.

Usage:
  python scripts/compare_strategies.py --n-articles 300
"""

from __future__ import annotations

import argparse
import json
import time

from ragbench.corpus import load_corpus
from ragbench.embedding import DeterministicEmbedder
from ragbench.generation import ChatPrompt
from ragbench.ref_metrics import retrieval_accuracy
from ragbench.retriever import build_index, retrieve
from ragbench.synth import synthetic_records


class DeterministicRewriter:
    """Stands in for the transformation LLM: three lines derived from the
    question for every transformation prompt."""

    kind = "scripted-mock"
    model = "rewriter"

    def complete(self, prompt: ChatPrompt) -> str:
        question = prompt.user.rsplit("Question: ", 1)[-1].strip()
        words = question.rstrip("?").split()
        if "intended topics" in prompt.user:
            head = " ".join(words[:4])
            mid = " ".join(words[2:6]) or head
            tail = " ".join(words[-4:])
            return f"{head}\n{mid}\n{tail}"
        if "excerpts" in prompt.user:
            return (
                f"To {' '.join(words[2:])}, open the employee portal.\n"
                f"{question} The policy explains the steps.\n"
                f"Employees can {' '.join(words[2:])} through self-service."
            )
        return f"{question} please\nCould you tell me {question.lower()}\n{' '.join(words[2:])}?"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-articles", type=int, default=300)
    parser.add_argument("--dup-fraction", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--k", type=int, default=5)
    args = parser.parse_args()

    records = synthetic_records(
        n_articles=args.n_articles, dup_fraction=args.dup_fraction, seed=args.seed
    )
    samples, kb, _ = load_corpus(json.dumps(r, ensure_ascii=False) for r in records)
    embedder = DeterministicEmbedder(dimension=256, seed=0)
    index = build_index(kb, embedder)
    rewriter = DeterministicRewriter()
    gold = {s.id: s.article_id for s in samples}
    ks = sorted({1, 2, 3, args.k})

    header = "strategy".ljust(16) + "".join(f"top-{k}".rjust(9) for k in ks) + "  seconds"
    print(header)
    print("-" * len(header))
    for strategy in ("basic", "intended_topics", "hyde", "multi_query"):
        started = time.perf_counter()
        results = {
            s.id: retrieve(
                index, kb, embedder, s.question, s.metadata,
                strategy=strategy, k=max(ks), llm=rewriter,
            )
            for s in samples
        }
        accuracy = retrieval_accuracy(results, gold, kb, ks=ks, threshold=100)
        elapsed = time.perf_counter() - started
        row = strategy.ljust(16)
        row += "".join(f"{accuracy.top_k[k]:9.4f}" for k in ks)
        print(f"{row}  {elapsed:7.1f}")


if __name__ == "__main__":
    main()
