"""Command-line surface for the workbench.

Every command reads and writes JSON Lines or aligned text tables. The exit
code is nonzero iff any stage finished with unrecovered errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import jsonio
from .corpus import (
    UserMetadata,
    corpus_stats,
    load_corpus,
    load_corpus_store,
    save_corpus,
)
from .errors import RagbenchError
from .judge import DIMENSION_NAMES, JUDGE_KINDS, JudgeSample, judge_summary, run_judge
from .pipeline import (
    RunConfig,
    answer_question,
    evaluate_run,
    make_chat,
    make_embedder,
)
from .ref_metrics import retrieval_accuracy, score_pair
from .retriever import build_index, load_index, retrieve, save_index
from .stats import (
    ScoreCard,
    correlation_report,
    format_correlation_table,
    format_summary_table,
    score_summary,
)
from .synth import synthetic_records


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with defaults for the run command.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.pass_context
def main(ctx, config_path, seed, parallelism):
    """Retrieval-augmented QA workbench."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["parallelism"] = parallelism
    ctx.obj["config"] = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            ctx.obj["config"] = json.load(fh)


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--max-tokens", type=int, default=4096, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def ingest(input_path, max_tokens, out_path):
    """Load, clean, and deduplicate a records file into a corpus store."""
    try:
        with open(input_path, encoding="utf-8") as fh:
            samples, kb, skipped = load_corpus(fh, max_tokens=max_tokens)
        save_corpus(out_path, samples, kb, skipped=skipped)
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"articles={len(kb)} samples={len(samples)} skipped={skipped} -> {out_path}")


@main.command()
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--top", type=int, default=10, show_default=True)
@click.option("--bucket-width", type=int, default=500, show_default=True)
def stats(kb_path, top, bucket_width):
    """Token histogram and most frequent questions of a corpus store."""
    try:
        samples, kb, skipped = load_corpus_store(kb_path)
        report = corpus_stats(samples, kb, bucket_width=bucket_width, top_n=top)
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"articles={report.n_articles} samples={report.n_samples} skipped={skipped}")
    click.echo("token histogram:")
    for bucket in report.token_histogram:
        click.echo(f"  [{bucket.lo},{bucket.hi}): {bucket.count}")
    click.echo(f"top {top} questions:")
    for question, count in report.top_questions:
        click.echo(f"  {count:5d}  {question}")


@main.command()
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--embedder", default="det", show_default=True,
              help='"det[:dim[:seed]]" or "remote".')
def index(kb_path, out_path, embedder):
    """Embed every knowledge-base article into a persisted vector index."""
    try:
        _, kb, _ = load_corpus_store(kb_path)
        provider = make_embedder(embedder)
        idx = build_index(kb, provider)
        save_index(idx, out_path)
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"indexed {len(idx)} articles (dim={idx.dimension}, provider={idx.provider_fingerprint})")


def _load_user(path: str | None) -> UserMetadata:
    if not path:
        return UserMetadata()
    with open(path, encoding="utf-8") as fh:
        return UserMetadata.from_dict(json.load(fh))


_STRATEGY_CHOICES = click.Choice(["basic", "topics", "hyde", "multi"])


@main.command()
@click.option("--idx", "idx_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True),
              help="Corpus store; supplies article texts and applicability.")
@click.option("--question", required=True)
@click.option("--strategy", type=_STRATEGY_CHOICES, default="basic", show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--user", "user_path", type=click.Path(exists=True), default=None,
              help="JSON metadata file; defaults to an all-wildcard user.")
@click.option("--embedder", default="det", show_default=True)
@click.option("--llm", default=None, help='Chat provider for query transforms ("remote" or "script:<path>").')
def retrieve_cmd(idx_path, kb_path, question, strategy, k, user_path, embedder, llm):
    """Rank applicable articles for one question."""
    try:
        _, kb, _ = load_corpus_store(kb_path)
        idx = load_index(idx_path)
        provider = make_embedder(embedder)
        chat = make_chat(llm) if llm else None
        result = retrieve(idx, kb, provider, question, _load_user(user_path),
                          strategy=strategy, k=k, llm=chat)
    except RagbenchError as exc:
        _fail(exc)
    for warning in result.plan.warnings:
        click.echo(f"warning: {warning}", err=True)
    if result.filtered_out:
        click.echo("no applicable article (filtered out)")
        return
    for entry in result.ranked:
        click.echo(f"{entry.rank:3d}  {entry.score:.6f}  {entry.article_id}")
    if result.short:
        click.echo(f"(only {len(result.ranked)} applicable candidates)")


main.add_command(retrieve_cmd, name="retrieve")


@main.command()
@click.option("--idx", "idx_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--question", required=True)
@click.option("--strategy", type=_STRATEGY_CHOICES, default="basic", show_default=True)
@click.option("--user", "user_path", type=click.Path(exists=True), default=None)
@click.option("--embedder", default="det", show_default=True)
@click.option("--chat", default="remote", show_default=True,
              help='Chat provider: "remote" or "script:<path>".')
def answer(idx_path, kb_path, question, strategy, user_path, embedder, chat):
    """Answer one question through the full retrieve-then-generate path."""
    try:
        _, kb, _ = load_corpus_store(kb_path)
        idx = load_index(idx_path)
        provider = make_embedder(embedder)
        chat_provider = make_chat(chat)
        generated, result = answer_question(
            idx, kb, provider, chat_provider, question, _load_user(user_path),
            strategy=strategy, llm=chat_provider,
        )
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"article: {generated.article_id}")
    click.echo(generated.answer)


@main.command(name="answer-batch")
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True),
              help="Ingest-format records (question/answer/context/metadata).")
@click.option("--idx", "idx_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--strategy", type=_STRATEGY_CHOICES, default="basic", show_default=True)
@click.option("--embedder", default="det", show_default=True)
@click.option("--chat", default="remote", show_default=True)
def answer_batch(samples_path, idx_path, kb_path, out_path, strategy, embedder, chat):
    """Generate answers for every record; output is ordered by sample id."""
    failures = 0
    try:
        with open(samples_path, encoding="utf-8") as fh:
            samples, _, _ = load_corpus(fh)
        _, kb, _ = load_corpus_store(kb_path)
        idx = load_index(idx_path)
        provider = make_embedder(embedder)
        chat_provider = make_chat(chat, samples=samples)
        rows = []
        for sample in sorted(samples, key=lambda s: s.id):
            try:
                generated, _ = answer_question(
                    idx, kb, provider, chat_provider, sample.question, sample.metadata,
                    strategy=strategy, llm=chat_provider, sample_id=sample.id,
                )
                rows.append(generated.to_dict())
            except RagbenchError as exc:
                failures += 1
                click.echo(f"error: {sample.id}: {exc}", err=True)
        jsonio.write_jsonl(out_path, rows)
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"wrote {len(rows)} answers -> {out_path} ({failures} failures)")
    if failures:
        sys.exit(1)


@main.command(name="eval-retriever")
@click.option("--idx", "idx_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True))
@click.option("--k", "ks", default="1,2,3,5", show_default=True)
@click.option("--threshold", type=int, default=100, show_default=True)
@click.option("--strategy", type=_STRATEGY_CHOICES, default="basic", show_default=True)
@click.option("--embedder", default="det", show_default=True)
@click.option("--llm", default=None)
def eval_retriever(idx_path, kb_path, samples_path, ks, threshold, strategy, embedder, llm):
    """Top-k retrieval accuracy with Levenshtein tolerance."""
    try:
        with open(samples_path, encoding="utf-8") as fh:
            samples, _, _ = load_corpus(fh)
        _, kb, _ = load_corpus_store(kb_path)
        idx = load_index(idx_path)
        provider = make_embedder(embedder)
        chat = make_chat(llm) if llm else None
        k_list = sorted({int(part) for part in ks.split(",")})
        results = {
            s.id: retrieve(idx, kb, provider, s.question, s.metadata,
                           strategy=strategy, k=max(k_list), llm=chat)
            for s in samples
        }
        accuracy = retrieval_accuracy(
            results, {s.id: s.article_id for s in samples}, kb, ks=k_list, threshold=threshold
        )
    except RagbenchError as exc:
        _fail(exc)
    click.echo(f"n={accuracy.n_queries} threshold={accuracy.threshold}")
    for k, value in sorted(accuracy.top_k.items()):
        click.echo(f"top-{k}: {value:.4f}")


@main.command(name="score-reference")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="JSONL rows with candidate and reference (optional sample_id, model).")
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--embedder", default="det", show_default=True)
def score_reference(pairs_path, out_path, embedder):
    """BLEU/ROUGE/BERTScore per pair plus means."""
    try:
        provider = make_embedder(embedder)
        rows = jsonio.read_jsonl(pairs_path)
        if not rows:
            raise RagbenchError("no pairs in input")
        cards = []
        out_rows = []
        for i, row in enumerate(rows):
            scores = score_pair(str(row.get("candidate", "")), str(row.get("reference", "")), provider)
            sample_id = str(row.get("sample_id", f"pair-{i:05d}"))
            model = str(row.get("model", "unknown"))
            card = ScoreCard(sample_id=sample_id, model=model, values=scores.to_values())
            cards.append(card)
            out_rows.append({**card.to_dict(), "flags": list(scores.flags)})
        if out_path:
            jsonio.write_jsonl(out_path, out_rows)
        else:
            for row in out_rows:
                click.echo(jsonio.dumps(row))
        click.echo(format_summary_table(score_summary(cards)), err=False)
    except RagbenchError as exc:
        _fail(exc)


@main.command()
@click.option("--kind", type=click.Choice(list(JUDGE_KINDS)), required=True)
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="JSONL rows with question, generated, reference (optional sample_id).")
@click.option("--dims", default="all", show_default=True,
              help='"all" or a comma-separated subset of the four dimensions.')
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--llm", default="remote", show_default=True,
              help='Judge provider: "remote", "hash", or "script:<path>".')
def judge(kind, pairs_path, dims, out_path, llm):
    """LLM-judge verdicts plus per-dimension means."""
    try:
        provider = make_chat(llm, env_prefix="JUDGE")
        dimensions = list(DIMENSION_NAMES) if dims == "all" else [d.strip() for d in dims.split(",")]
        rows = jsonio.read_jsonl(pairs_path)
        samples = [
            JudgeSample(
                sample_id=str(row.get("sample_id", f"pair-{i:05d}")),
                question=str(row.get("question", "")),
                generated=str(row.get("generated", "")),
                reference=str(row.get("reference", "")),
            )
            for i, row in enumerate(rows)
        ]
        verdicts = run_judge(provider, kind, samples, dimensions=dimensions)
    except RagbenchError as exc:
        _fail(exc)
    out_rows = [v.to_dict() for v in verdicts]
    if out_path:
        jsonio.write_jsonl(out_path, out_rows)
    else:
        for row in out_rows:
            click.echo(jsonio.dumps(row))
    for dimension, entry in judge_summary(verdicts).items():
        mean = "-" if entry["mean"] is None else f"{entry['mean']:.3f}"
        click.echo(f"{dimension}: mean={mean} n={entry['count']} errors={entry['errors']}")
    if any(v.error for v in verdicts):
        sys.exit(1)


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True),
              help="JSONL of score cards (see README for the schema).")
@click.option("--json-out", "json_path", default=None, type=click.Path())
def correlate(scores_path, json_path):
    """Correlate automatic metrics against human ratings."""
    try:
        cards = [ScoreCard.from_dict(row) for row in jsonio.read_jsonl(scores_path)]
        if not cards:
            raise RagbenchError("no score cards in input")
        report = correlation_report(cards)
        summary = score_summary(cards)
    except RagbenchError as exc:
        _fail(exc)
    click.echo("score means")
    click.echo(format_summary_table(summary))
    click.echo("")
    click.echo("correlation vs human")
    click.echo(format_correlation_table(report))
    if json_path:
        jsonio.write_json(json_path, report.to_dict())


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="Ingest-format records file.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--strategy", type=_STRATEGY_CHOICES, default="basic", show_default=True)
@click.option("--k", "ks", default="1,2,3,5", show_default=True)
@click.option("--threshold", type=int, default=100, show_default=True)
@click.option("--max-tokens", type=int, default=4096, show_default=True)
@click.option("--embedder", default="det", show_default=True)
@click.option("--chat", default="gold-echo", show_default=True)
@click.option("--judge", "judge_spec", default="off", show_default=True)
@click.option("--human", "human_path", type=click.Path(exists=True), default=None)
@click.pass_context
def run(ctx, input_path, out_dir, strategy, ks, threshold, max_tokens, embedder, chat, judge_spec, human_path):
    """Full pipeline: ingest, index, retrieve, generate, score, correlate."""
    defaults = ctx.obj.get("config", {}) if ctx.obj else {}
    ks_value = defaults.get("ks", ks)
    if isinstance(ks_value, str):
        ks_tuple = tuple(int(part) for part in ks_value.split(","))
    else:
        ks_tuple = tuple(int(part) for part in ks_value)
    config = RunConfig(
        input_path=input_path,
        out_dir=out_dir,
        strategy=defaults.get("strategy", strategy),
        ks=ks_tuple,
        threshold=int(defaults.get("threshold", threshold)),
        max_tokens=int(defaults.get("max_tokens", max_tokens)),
        embedder=defaults.get("embedder", embedder),
        chat=defaults.get("chat", chat),
        judge=defaults.get("judge", judge_spec),
        human_path=defaults.get("human", human_path),
        seed=ctx.obj.get("seed", 0) if ctx.obj else 0,
        parallelism=ctx.obj.get("parallelism", 1) if ctx.obj else 1,
    )
    try:
        result = evaluate_run(config)
    except RagbenchError as exc:
        _fail(exc)
    click.echo((result.out_dir / "tables.txt").read_text(encoding="utf-8"))
    click.echo(f"wrote artifacts to {result.out_dir}")
    if result.error_count:
        click.echo(f"{result.error_count} unrecovered errors; see manifest.json", err=True)
        sys.exit(1)


@main.command()
@click.option("--answers", "answers_path", required=True, type=click.Path(exists=True),
              help="JSONL of generated answers to annotate.")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--port", type=int, default=8710, show_default=True)
@click.option("--gold", "gold_path", type=click.Path(exists=True), default=None,
              help="Ingest-format records supplying gold answers for display.")
@click.option("--scores", "scores_path", type=click.Path(exists=True), default=None,
              help="Score cards enabling the correlation part of the dashboard.")
@click.option("--ui", "ui_dir", type=click.Path(), default="frontend/dist", show_default=True)
def serve(answers_path, store_dir, port, gold_path, scores_path, ui_dir):
    """Run the human annotation service (REST API plus static UI)."""
    import uvicorn

    from .annotation import create_app
    from .generation import GeneratedAnswer

    answers = [GeneratedAnswer.from_dict(row) for row in jsonio.read_jsonl(answers_path)]
    gold_answers = {}
    if gold_path:
        with open(gold_path, encoding="utf-8") as fh:
            gold_samples, _, _ = load_corpus(fh)
        gold_answers = {s.id: s.answer for s in gold_samples}
    auto_cards = (
        [ScoreCard.from_dict(row) for row in jsonio.read_jsonl(scores_path)] if scores_path else ()
    )
    app = create_app(
        store_dir,
        answers=answers,
        gold_answers=gold_answers,
        auto_cards=auto_cards,
        ui_dir=ui_dir if Path(ui_dir).is_dir() else None,
    )
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")


@main.command()
@click.option("--n-articles", type=int, default=1000, show_default=True)
@click.option("--dup-fraction", type=float, default=0.0, show_default=True)
@click.option("--dup-distance", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def synth(n_articles, dup_fraction, dup_distance, seed, out_path):
    """Generate a synthetic corpus with constructed retrieval ground truth."""
    records = synthetic_records(
        n_articles=n_articles, dup_fraction=dup_fraction, dup_distance=dup_distance, seed=seed
    )
    jsonio.write_jsonl(out_path, records)
    click.echo(f"wrote {len(records)} records -> {out_path}")


if __name__ == "__main__":
    main()
