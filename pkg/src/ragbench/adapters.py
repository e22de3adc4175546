"""Adapter for public question/answer dumps (StackExchange-style exports).

Maps rows shaped like {"title", "body"?, "answer"} into ingest-format
records where the retrieval target is the question's top answer. This lets
users with a real embedding provider benchmark the retriever on public data;
it is not exercised by the offline test suite.
"""

from __future__ import annotations

from typing import Iterable, Iterator


def qa_dump_to_records(rows: Iterable[dict]) -> Iterator[dict]:
    for row in rows:
        title = str(row.get("title") or row.get("question") or "").strip()
        body = str(row.get("body") or "").strip()
        answer = str(row.get("answer") or "").strip()
        if not title or not answer:
            continue
        question = f"{title} {body}".strip()
        yield {
            "question": question,
            "answer": answer,
            "context": answer,  # retrieving the top answer counts as correct
            "metadata": {},
        }
