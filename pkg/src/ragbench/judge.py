"""LLM-judge evaluation over the four quality dimensions.

Two judge protocols are implemented: a criteria-plus-steps prompt that asks
for a ``{rating, explanation}`` dictionary, and a rubric prompt whose reply
is free-form feedback terminated by ``[RESULT] <integer>``. Ratings are
integers 1..5; anything else is recorded as an explicit error entry, never
silently dropped.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass
from typing import Sequence

from . import prompts
from .errors import InputError, JudgeParseError, JudgeRangeError, ProviderError
from .generation import ChatPrompt, ChatProvider

GEVAL = "geval"
PROMETHEUS = "prometheus"
JUDGE_KINDS = (GEVAL, PROMETHEUS)

RESULT_MARKER = "[RESULT]"


@dataclass(frozen=True)
class JudgeDimension:
    name: str
    criteria: str
    steps: tuple[str, ...]


def _dimension(name: str, focus: str, steps: tuple[str, ...]) -> JudgeDimension:
    criteria = f"{name.capitalize()}(1-5) - {focus}"
    return JudgeDimension(name=name, criteria=criteria, steps=steps)


DIMENSIONS: dict[str, JudgeDimension] = {
    "relevance": _dimension(
        "relevance",
        "Please rate the relevance of each chatbot response. This criterion assesses "
        "how directly the response addresses the posed question. A highly relevant "
        "response answers exactly what was asked. Off-topic content, generic filler, "
        "or answers to a different question should result in a lower relevance score.",
        (
            "Read the question and the chatbot response carefully.",
            "Check whether the response addresses the specific question that was asked.",
            "Penalize off-topic content, generic filler, and answers to a different question.",
            "Assign a relevance score from 1 to 5, where 1 is off-topic and 5 answers the question directly.",
        ),
    ),
    "readability": _dimension(
        "readability",
        "Please rate the readability of each chatbot response. This criterion assesses "
        "how easily the response can be understood. A response with high readability "
        "should be clear, concise, and straightforward, making it easy for the reader "
        "to comprehend the information presented. Complex sentences, jargon, or "
        "convoluted explanations should result in a lower readability score.",
        (
            "Read the chatbot response carefully.",
            "Assess how easily the response can be understood. Consider the clarity and conciseness of the response.",
            "Consider the complexity of the sentences, the use of jargon, and how straightforward the explanation is.",
            "Assign a readability score from 1 to 5 based on these criteria, where 1 is the lowest "
            "(hard to understand) and 5 is the highest (very easy to understand).",
        ),
    ),
    "truthfulness": _dimension(
        "truthfulness",
        "Please rate the truthfulness of each chatbot response. This criterion assesses "
        "factual agreement with the reference answer. A truthful response states only "
        "facts supported by the reference answer. Contradictions, fabricated details, "
        "or unsupported claims should result in a lower truthfulness score.",
        (
            "Read the reference answer, then the chatbot response.",
            "Compare every factual claim in the response against the reference answer.",
            "Penalize contradictions, fabricated details, and claims the reference does not support.",
            "Assign a truthfulness score from 1 to 5, where 1 contradicts the reference and 5 fully agrees with it.",
        ),
    ),
    "usability": _dimension(
        "usability",
        "Please rate the usability of each chatbot response. This criterion assesses "
        "how actionable and helpful the response is for the employee. A usable response "
        "tells the employee what to do next in concrete terms. Missing steps, vague "
        "guidance, or unhelpful deflection should result in a lower usability score.",
        (
            "Read the question and the chatbot response carefully.",
            "Check whether the employee could act on the response without further help.",
            "Penalize missing steps, vague guidance, and unhelpful deflection.",
            "Assign a usability score from 1 to 5, where 1 is unusable and 5 is immediately actionable.",
        ),
    ),
}

DIMENSION_NAMES = tuple(DIMENSIONS)


@dataclass(frozen=True)
class JudgeSample:
    sample_id: str
    question: str
    generated: str
    reference: str


@dataclass(frozen=True)
class JudgeVerdict:
    sample_id: str
    dimension: str
    kind: str
    rating: int | None
    explanation: str
    raw: str
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "dimension": self.dimension,
            "kind": self.kind,
            "rating": self.rating,
            "explanation": self.explanation,
            "raw": self.raw,
            "error": self.error,
        }


def build_judge_prompt(
    kind: str,
    dimension: str,
    question: str,
    generated: str,
    reference: str,
) -> ChatPrompt:
    """Fill the judge template for one dimension; substitution is verbatim."""
    if kind not in JUDGE_KINDS:
        raise InputError(f"unknown judge kind: {kind!r}")
    if dimension not in DIMENSIONS:
        raise InputError(f"unknown dimension: {dimension!r}")
    if not question or not generated or not reference:
        raise InputError("question, generated, and reference must be non-empty")
    dim = DIMENSIONS[dimension]
    if kind == GEVAL:
        steps = "\n".join(f"{i}. {step}" for i, step in enumerate(dim.steps, 1))
        return ChatPrompt(
            system=prompts.GEVAL_SYSTEM.format(criteria=dim.criteria, steps=steps),
            user=prompts.GEVAL_USER.format(
                question=question,
                generated=generated,
                reference=reference,
                metric_name=dim.name.capitalize(),
            ),
        )
    return ChatPrompt(
        system=prompts.PROMETHEUS_SYSTEM,
        user=prompts.PROMETHEUS_USER.format(
            question=question,
            generated=generated,
            reference=reference,
            criteria=dim.criteria,
        ),
    )


def format_judge_response(kind: str, rating: int, explanation: str) -> str:
    """Render a (rating, explanation) pair in the shape each judge is asked for.

    Inverse of :func:`parse_judge_response`; used by protocol round-trip tests
    and by scripted judge mocks.
    """
    if kind == GEVAL:
        return json.dumps({"rating": rating, "explanation": explanation}, ensure_ascii=False)
    if kind == PROMETHEUS:
        return f"Feedback: {explanation} {RESULT_MARKER} {rating}"
    raise InputError(f"unknown judge kind: {kind!r}")


_RATING_KV_RE = re.compile(r"rating\b[\"']?\s*[:=]\s*[\"']?\s*([0-9]+)", re.IGNORECASE)
_EXPLANATION_KV_RE = re.compile(
    r"explanation\b[\"']?\s*[:=]\s*(.+)", re.IGNORECASE | re.DOTALL
)
_TRAILING_INT_RE = re.compile(r"(-?[0-9]+)")


def _check_range(rating: int, raw: str) -> int:
    if not 1 <= rating <= 5:
        raise JudgeRangeError(f"rating {rating} outside 1..5 in response: {raw[:120]!r}")
    return rating


def _parse_geval(raw: str) -> tuple[int, str]:
    # Preferred shape is a dict literal; tolerate prose around it and bare
    # key-value lines when no dict parses.
    start, end = raw.find("{"), raw.rfind("}")
    if start != -1 and end > start:
        fragment = raw[start : end + 1]
        parsed = None
        for loader in (json.loads, ast.literal_eval):
            try:
                parsed = loader(fragment)
                break
            except (ValueError, SyntaxError):
                continue
        if isinstance(parsed, dict) and "rating" in parsed:
            try:
                rating = int(parsed["rating"])
            except (TypeError, ValueError):
                raise JudgeParseError(f"non-integer rating in response: {raw[:120]!r}") from None
            # dict shape is exact; no stripping, so format -> parse round-trips
            return _check_range(rating, raw), str(parsed.get("explanation", ""))
    rating_match = _RATING_KV_RE.search(raw)
    if not rating_match:
        raise JudgeParseError(f"no parsable rating in response: {raw[:120]!r}")
    rating = _check_range(int(rating_match.group(1)), raw)
    explanation_match = _EXPLANATION_KV_RE.search(raw)
    explanation = explanation_match.group(1).strip() if explanation_match else ""
    return rating, explanation.strip("\"' ")


def _parse_prometheus(raw: str) -> tuple[int, str]:
    if RESULT_MARKER not in raw:
        raise JudgeParseError(f"missing {RESULT_MARKER} marker in response: {raw[:120]!r}")
    feedback, _, tail = raw.rpartition(RESULT_MARKER)
    tail_match = _TRAILING_INT_RE.search(tail)
    if not tail_match:
        raise JudgeParseError(f"no integer after {RESULT_MARKER}: {raw[:120]!r}")
    rating = _check_range(int(tail_match.group(1)), raw)
    feedback = feedback.strip()
    if feedback.lower().startswith("feedback:"):
        feedback = feedback[len("feedback:") :]
    return rating, feedback.strip()


def parse_judge_response(kind: str, raw: str) -> tuple[int, str]:
    """Extract (rating, explanation); raises on unparsable or out-of-range."""
    if not raw:
        raise JudgeParseError("empty judge response")
    if kind == GEVAL:
        return _parse_geval(raw)
    if kind == PROMETHEUS:
        return _parse_prometheus(raw)
    raise InputError(f"unknown judge kind: {kind!r}")


def run_judge(
    provider: ChatProvider,
    kind: str,
    samples: Sequence[JudgeSample],
    dimensions: Sequence[str] = DIMENSION_NAMES,
) -> list[JudgeVerdict]:
    """One verdict per (sample, dimension), in that order.

    A failed parse is re-prompted once; a second failure (or a provider
    failure) becomes a verdict with ``rating=None`` and ``error`` set, so the
    output always has ``len(samples) * len(dimensions)`` entries.
    """
    for dimension in dimensions:
        if dimension not in DIMENSIONS:
            raise InputError(f"unknown dimension: {dimension!r}")
    verdicts = []
    for sample in samples:
        for dimension in dimensions:
            prompt = build_judge_prompt(kind, dimension, sample.question, sample.generated, sample.reference)
            raw = ""
            error = None
            rating: int | None = None
            explanation = ""
            try:
                raw = provider.complete(prompt)
                try:
                    rating, explanation = parse_judge_response(kind, raw)
                except (JudgeParseError, JudgeRangeError):
                    raw = provider.complete(prompt)  # one re-prompt
                    rating, explanation = parse_judge_response(kind, raw)
            except (JudgeParseError, JudgeRangeError, ProviderError) as exc:
                error = f"{type(exc).__name__}: {exc}"
            verdicts.append(
                JudgeVerdict(
                    sample_id=sample.sample_id,
                    dimension=dimension,
                    kind=kind,
                    rating=rating,
                    explanation=explanation,
                    raw=raw,
                    error=error,
                )
            )
    return verdicts


def judge_summary(verdicts: Sequence[JudgeVerdict]) -> dict[str, dict]:
    """Mean rating per dimension over parsed verdicts, plus error counts."""
    summary: dict[str, dict] = {}
    for dimension in DIMENSION_NAMES:
        ratings = [v.rating for v in verdicts if v.dimension == dimension and v.rating is not None]
        errors = sum(1 for v in verdicts if v.dimension == dimension and v.error is not None)
        if ratings or errors:
            summary[dimension] = {
                "mean": sum(ratings) / len(ratings) if ratings else None,
                "count": len(ratings),
                "errors": errors,
            }
    return summary
