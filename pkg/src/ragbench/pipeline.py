"""End-to-end orchestration: retrieve, generate, score, correlate.

A run consumes an ingest-format records file, builds the knowledge base and
index, answers every question with the configured strategy and chat
provider, scores the answers against the gold answers, optionally adds
judge ratings and human score cards, and writes all tables plus a manifest.
With deterministic providers a rerun is byte-identical except for the
manifest's wall-clock fields.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence

from . import __version__, jsonio, prompts
from .corpus import Article, KnowledgeBase, QASample, UserMetadata, load_corpus
from .embedding import DeterministicEmbedder, EmbeddingProvider, RemoteEmbedder
from .errors import GenerationError, InputError, ProviderError, RagbenchError
from .generation import (
    ChatPrompt,
    ChatProvider,
    GeneratedAnswer,
    RemoteChat,
    ScriptedChat,
    build_chat_prompt,
    generate_answer,
)
from .judge import JUDGE_KINDS, JudgeSample, RESULT_MARKER, run_judge
from .ref_metrics import RetrievalAccuracy, retrieval_accuracy, score_pair
from .retriever import RetrievalResult, VectorIndex, build_index, retrieve
from .stats import (
    CorrelationReport,
    ScoreCard,
    SummaryRow,
    correlation_report,
    format_correlation_table,
    format_summary_table,
    merge_cards,
    score_summary,
)

STUB_ARTICLE_ID = "__none__"
STUB_ARTICLE_TEXT = "No applicable article was found for this question."


@dataclass
class RunConfig:
    input_path: str
    out_dir: str
    strategy: str = "basic"
    context_k: int = 1  # articles passed as generation context; top-1 by default
    ks: tuple[int, ...] = (1, 2, 3, 5)
    threshold: int = 100
    max_tokens: int = 4096
    embedder: str = "det"
    chat: str = "gold-echo"
    judge: str = "off"
    judge_kinds: tuple[str, ...] = JUDGE_KINDS
    human_path: str | None = None
    overfetch: int = 50
    seed: int = 0
    parallelism: int = 1

    def snapshot(self) -> dict:
        data = asdict(self)
        data["ks"] = list(self.ks)
        data["judge_kinds"] = list(self.judge_kinds)
        return data


@dataclass
class StageReport:
    name: str
    n_in: int
    n_ok: int
    n_errors: int
    seconds: float


@dataclass
class RunResult:
    config: RunConfig
    accuracy: RetrievalAccuracy
    cards: list[ScoreCard]
    summary: list[SummaryRow]
    correlation: CorrelationReport | None
    stages: list[StageReport]
    errors: list[dict]
    out_dir: Path

    @property
    def error_count(self) -> int:
        return len(self.errors)


# ---------------------------------------------------------------------------
# Provider factories

def make_embedder(spec: str) -> EmbeddingProvider:
    """"det[:dim[:seed]]" for the trigram test embedder, "remote" for HTTP."""
    if spec == "remote":
        return RemoteEmbedder.from_env()
    parts = spec.split(":")
    if parts[0] != "det":
        raise InputError(f"unknown embedder spec: {spec!r}")
    dimension = int(parts[1]) if len(parts) > 1 else 256
    seed = int(parts[2]) if len(parts) > 2 else 0
    return DeterministicEmbedder(dimension=dimension, seed=seed)


def load_scripted_chat(path: str | Path, model: str = "scripted") -> ScriptedChat:
    """Script file: {"rules": [[pattern, response], ...], "default": str|null}."""
    payload = jsonio.read_jsonl(path) if str(path).endswith(".jsonl") else None
    if payload is None:
        import json

        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = {"rules": [[row["pattern"], row["response"]] for row in payload], "default": None}
    rules = [(str(p), str(r)) for p, r in data.get("rules", [])]
    return ScriptedChat(rules=rules, default=data.get("default"), model=data.get("model", model))


def make_gold_chat(samples: Sequence[QASample]) -> ScriptedChat:
    """Oracle generator for harness runs: echoes each sample's gold answer.

    Rules key on the chatbot user-prompt prefix, so transformation prompts
    never match and non-basic strategies fall back to basic with a warning.
    """
    rules = [(f"Question: {s.question}\nRelevant Article:", s.answer) for s in samples]
    return ScriptedChat(rules=rules, default=None, model="gold-echo")


class HashRatingJudge:
    """Deterministic stand-in judge: rating is a stable hash of the prompt.

    Detects which judge protocol is being spoken from template markers and
    answers in that protocol's format, so parser and aggregation paths are
    exercised end to end without a model.
    """

    kind = "scripted-mock"

    def __init__(self, model: str = "hash-judge", salt: str = ""):
        self.model = model
        self.salt = salt

    def complete(self, prompt: ChatPrompt) -> str:
        digest = hashlib.blake2b((self.salt + prompt.user).encode("utf-8"), digest_size=8).digest()
        rating = 1 + int.from_bytes(digest, "big") % 5
        if RESULT_MARKER in prompt.system:
            return f"Feedback: deterministic rubric check. {RESULT_MARKER} {rating}"
        return f'{{"rating": {rating}, "explanation": "deterministic criteria check."}}'


def make_chat(spec: str, samples: Sequence[QASample] = (), env_prefix: str = "CHAT") -> ChatProvider:
    if spec == "remote":
        return RemoteChat.from_env(env_prefix=env_prefix)
    if spec == "gold-echo":
        if not samples:
            raise InputError("gold-echo provider needs loaded samples")
        return make_gold_chat(samples)
    if spec == "hash":
        return HashRatingJudge()
    if spec.startswith("script:"):
        return load_scripted_chat(spec[len("script:") :])
    raise InputError(f"unknown chat provider spec: {spec!r}")


# ---------------------------------------------------------------------------
# Single-question path

def answer_question(
    index: VectorIndex,
    kb: KnowledgeBase,
    embedder: EmbeddingProvider,
    chat: ChatProvider,
    question: str,
    user: UserMetadata,
    strategy: str = "basic",
    llm: ChatProvider | None = None,
    overfetch: int = 50,
    sample_id: str = "",
) -> tuple[GeneratedAnswer, RetrievalResult]:
    """Retrieve, pass the top-1 article to the chatbot prompt, generate.

    When filtering leaves nothing, generation still runs against an explicit
    stub article so the prompt's no-answer rule can take over; the answer's
    provenance marks the stub id.
    """
    result = retrieve(
        index, kb, embedder, question, user,
        strategy=strategy, k=1, overfetch=overfetch, llm=llm,
    )
    if result.ranked:
        top = kb.get(result.ranked[0].article_id)
    else:
        top = Article(
            id=STUB_ARTICLE_ID,
            text=STUB_ARTICLE_TEXT,
            applicability=UserMetadata(),
            token_count=len(STUB_ARTICLE_TEXT.split()),
        )
    prompt = build_chat_prompt(question, top.text)
    answer = generate_answer(
        chat, prompt,
        sample_id=sample_id, question=question, article_id=top.id, strategy=result.strategy,
    )
    return answer, result


# ---------------------------------------------------------------------------
# Batch evaluation

class _StageTimer:
    def __init__(self):
        self.stages: list[StageReport] = []

    def record(self, name: str, n_in: int, n_ok: int, n_errors: int, started: float):
        self.stages.append(StageReport(name, n_in, n_ok, n_errors, time.perf_counter() - started))


def evaluate_run(config: RunConfig) -> RunResult:
    """Run the full harness and write every artifact into ``config.out_dir``."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = _StageTimer()
    errors: list[dict] = []

    # ingest
    started = time.perf_counter()
    with open(config.input_path, encoding="utf-8") as fh:
        samples, kb, skipped = load_corpus(fh, max_tokens=config.max_tokens)
    timer.record("ingest", len(samples) + skipped, len(samples), 0, started)
    if not samples:
        raise InputError("no usable samples in the input records")

    # index
    started = time.perf_counter()
    embedder = make_embedder(config.embedder)
    index = build_index(kb, embedder)
    timer.record("index", len(kb), len(index), 0, started)

    chat = make_chat(config.chat, samples=samples)
    transform_llm = chat if config.strategy not in ("basic",) else None

    # retrieve
    started = time.perf_counter()
    max_k = max(list(config.ks) + [config.context_k])
    results: dict[str, RetrievalResult] = {}
    for sample in samples:
        results[sample.id] = retrieve(
            index, kb, embedder, sample.question, sample.metadata,
            strategy=config.strategy, k=max_k, overfetch=config.overfetch, llm=transform_llm,
        )
    gold = {sample.id: sample.article_id for sample in samples}
    accuracy = retrieval_accuracy(results, gold, kb, ks=config.ks, threshold=config.threshold)
    timer.record("retrieve", len(samples), len(results), 0, started)

    # generate
    started = time.perf_counter()
    by_id = {sample.id: sample for sample in samples}

    def _generate(sample: QASample) -> GeneratedAnswer:
        result = results[sample.id]
        if result.ranked:
            top = kb.get(result.ranked[0].article_id)
            article_id, article_text = top.id, top.text
        else:
            article_id, article_text = STUB_ARTICLE_ID, STUB_ARTICLE_TEXT
        prompt = build_chat_prompt(sample.question, article_text)
        return generate_answer(
            chat, prompt,
            sample_id=sample.id, question=sample.question,
            article_id=article_id, strategy=result.strategy,
        )

    answers: dict[str, GeneratedAnswer] = {}
    generation_errors = 0
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = {sample.id: pool.submit(_generate, sample) for sample in samples}
        outcomes = [(sid, future) for sid, future in futures.items()]
    else:
        outcomes = []
        for sample in samples:
            outcomes.append((sample.id, _FakeFuture(_generate, sample)))
    for sample_id, future in outcomes:
        try:
            answers[sample_id] = future.result()
        except (ProviderError, GenerationError, RagbenchError) as exc:
            generation_errors += 1
            errors.append({"stage": "generate", "sample_id": sample_id, "error": str(exc)})
    timer.record("generate", len(samples), len(answers), generation_errors, started)

    # reference metrics
    started = time.perf_counter()
    cards: list[ScoreCard] = []
    for sample_id in sorted(answers):
        answer = answers[sample_id]
        scores = score_pair(answer.answer, by_id[sample_id].answer, embedder)
        cards.append(ScoreCard(sample_id=sample_id, model=answer.model, values=scores.to_values()))
    timer.record("score-reference", len(answers), len(cards), 0, started)

    # judge metrics
    judge_errors = 0
    if config.judge != "off":
        started = time.perf_counter()
        judge_provider = make_chat(config.judge, samples=samples, env_prefix="JUDGE")
        judge_samples = [
            JudgeSample(
                sample_id=sid,
                question=answers[sid].question,
                generated=answers[sid].answer,
                reference=by_id[sid].answer,
            )
            for sid in sorted(answers)
        ]
        ratings_by_sample: dict[str, dict[str, float]] = {sid: {} for sid in sorted(answers)}
        for kind in config.judge_kinds:
            for verdict in run_judge(judge_provider, kind, judge_samples):
                if verdict.rating is None:
                    judge_errors += 1
                    errors.append(
                        {
                            "stage": "judge",
                            "sample_id": verdict.sample_id,
                            "error": verdict.error or "unparsable verdict",
                        }
                    )
                else:
                    ratings_by_sample[verdict.sample_id][f"{kind}_{verdict.dimension}"] = float(verdict.rating)
        cards = [
            ScoreCard(c.sample_id, c.model, {**c.values, **ratings_by_sample.get(c.sample_id, {})})
            for c in cards
        ]
        timer.record(
            "judge",
            len(judge_samples) * len(config.judge_kinds) * 4,
            len(judge_samples) * len(config.judge_kinds) * 4 - judge_errors,
            judge_errors,
            started,
        )

    # human annotations
    human_cards: list[ScoreCard] = []
    if config.human_path:
        started = time.perf_counter()
        human_cards = [ScoreCard.from_dict(row) for row in jsonio.read_jsonl(config.human_path)]
        timer.record("human", len(human_cards), len(human_cards), 0, started)

    # aggregate
    started = time.perf_counter()
    all_cards = merge_cards(cards + human_cards)
    summary = score_summary(all_cards) if all_cards else []
    correlation = correlation_report(all_cards) if human_cards else None
    timer.record("aggregate", len(all_cards), len(all_cards), 0, started)

    _write_outputs(out_dir, config, answers, results, all_cards, accuracy, summary, correlation, timer.stages, errors, skipped)

    return RunResult(
        config=config,
        accuracy=accuracy,
        cards=all_cards,
        summary=summary,
        correlation=correlation,
        stages=timer.stages,
        errors=errors,
        out_dir=out_dir,
    )


class _FakeFuture:
    """Keeps the serial path shaped like the thread-pool path."""

    def __init__(self, fn, *args):
        self._fn = fn
        self._args = args

    def result(self):
        return self._fn(*self._args)


def _write_outputs(
    out_dir: Path,
    config: RunConfig,
    answers: dict[str, GeneratedAnswer],
    results: dict[str, RetrievalResult],
    cards: list[ScoreCard],
    accuracy: RetrievalAccuracy,
    summary: list[SummaryRow],
    correlation: CorrelationReport | None,
    stages: list[StageReport],
    errors: list[dict],
    skipped: int,
) -> None:
    jsonio.write_jsonl(out_dir / "answers.jsonl", (answers[sid].to_dict() for sid in sorted(answers)))
    jsonio.write_jsonl(
        out_dir / "retrieval.jsonl",
        (
            {
                "sample_id": sid,
                "strategy": results[sid].strategy,
                "filtered_out": results[sid].filtered_out,
                "short": results[sid].short,
                "warnings": list(results[sid].plan.warnings),
                "ranked": [
                    {"article_id": e.article_id, "score": e.score, "rank": e.rank}
                    for e in results[sid].ranked
                ],
            }
            for sid in sorted(results)
        ),
    )
    jsonio.write_jsonl(
        out_dir / "scorecards.jsonl",
        (c.to_dict() for c in sorted(cards, key=lambda c: (c.sample_id, c.model))),
    )
    jsonio.write_json(
        out_dir / "accuracy.json",
        {
            "threshold": accuracy.threshold,
            "n_queries": accuracy.n_queries,
            "top_k": {str(k): v for k, v in sorted(accuracy.top_k.items())},
        },
    )
    jsonio.write_json(
        out_dir / "summary.json",
        [{"model": r.model, "metric": r.metric, "mean": r.mean, "count": r.count} for r in summary],
    )
    jsonio.write_json(
        out_dir / "correlation.json",
        correlation.to_dict() if correlation else None,
    )

    accuracy_lines = [f"retrieval accuracy (threshold {accuracy.threshold}, n={accuracy.n_queries})"]
    accuracy_lines += [f"  top-{k}: {v:.4f}" for k, v in sorted(accuracy.top_k.items())]
    tables = [
        "\n".join(accuracy_lines),
        "score means\n" + (format_summary_table(summary) if summary else "(no cards)"),
    ]
    # means and correlations always print side by side; close averages can
    # still correlate poorly
    if correlation is not None:
        tables.append("correlation vs human\n" + format_correlation_table(correlation))
    (out_dir / "tables.txt").write_text("\n\n".join(tables) + "\n", encoding="utf-8")

    manifest = {
        "tool_version": __version__,
        "prompt_version": prompts.PROMPT_VERSION,
        "config": config.snapshot(),
        "skipped_records": skipped,
        "stages": [
            {
                "name": s.name,
                "in": s.n_in,
                "ok": s.n_ok,
                "errors": s.n_errors,
                "seconds": round(s.seconds, 6),
            }
            for s in stages
        ],
        "error_count": len(errors),
        "errors": errors,
    }
    jsonio.write_json(out_dir / "manifest.json", manifest)
