from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from ragbench import jsonio
from ragbench.cli import main
from ragbench.synth import synthetic_records


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path):
    records = synthetic_records(n_articles=12, dup_fraction=0.25, dup_distance=50, seed=6)
    records_path = tmp_path / "records.jsonl"
    jsonio.write_jsonl(records_path, records)
    return tmp_path, records_path


def _ingest_and_index(runner, tmp_path, records_path):
    kb_path = tmp_path / "corpus.json"
    idx_path = tmp_path / "idx.jsonl"
    result = runner.invoke(main, ["ingest", "--input", str(records_path), "--out", str(kb_path)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["index", "--kb", str(kb_path), "--out", str(idx_path)])
    assert result.exit_code == 0, result.output
    return kb_path, idx_path


class TestCorpusCommands:
    def test_ingest_reports_counts(self, runner, workdir):
        tmp_path, records_path = workdir
        result = runner.invoke(
            main, ["ingest", "--input", str(records_path), "--max-tokens", "4096",
                   "--out", str(tmp_path / "c.json")]
        )
        assert result.exit_code == 0
        assert "samples=15" in result.output  # 12 articles + 3 dups

    def test_ingest_fails_on_malformed(self, runner, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"question": "q"}\n')
        result = runner.invoke(main, ["ingest", "--input", str(bad), "--out", str(tmp_path / "c.json")])
        assert result.exit_code != 0
        assert "line 1" in result.output

    def test_stats_command(self, runner, workdir):
        tmp_path, records_path = workdir
        kb_path, _ = _ingest_and_index(runner, tmp_path, records_path)
        result = runner.invoke(main, ["stats", "--kb", str(kb_path), "--top", "3"])
        assert result.exit_code == 0
        assert "token histogram" in result.output
        assert "top 3 questions" in result.output


class TestRetrievalCommands:
    def test_retrieve_ranks_articles(self, runner, workdir):
        tmp_path, records_path = workdir
        kb_path, idx_path = _ingest_and_index(runner, tmp_path, records_path)
        question = json.loads(records_path.read_text().splitlines()[0])["question"]
        result = runner.invoke(
            main,
            ["retrieve", "--idx", str(idx_path), "--kb", str(kb_path),
             "--question", question, "--k", "3"],
        )
        assert result.exit_code == 0, result.output
        assert "  1  " in result.output or result.output.lstrip().startswith("1")

    def test_user_metadata_file_filters(self, runner, workdir):
        tmp_path, records_path = workdir
        kb_path, idx_path = _ingest_and_index(runner, tmp_path, records_path)
        user_path = tmp_path / "user.json"
        # company_name is never wildcarded in the synthetic corpus, so an
        # unknown company filters out every candidate
        user_path.write_text(json.dumps({"company_name": "Nowhere Inc"}))
        question = json.loads(records_path.read_text().splitlines()[0])["question"]
        result = runner.invoke(
            main,
            ["retrieve", "--idx", str(idx_path), "--kb", str(kb_path),
             "--question", question, "--user", str(user_path)],
        )
        assert result.exit_code == 0
        assert "filtered out" in result.output

    def test_eval_retriever(self, runner, workdir):
        tmp_path, records_path = workdir
        kb_path, idx_path = _ingest_and_index(runner, tmp_path, records_path)
        result = runner.invoke(
            main,
            ["eval-retriever", "--idx", str(idx_path), "--kb", str(kb_path),
             "--samples", str(records_path), "--k", "1,3", "--threshold", "100"],
        )
        assert result.exit_code == 0, result.output
        assert "top-1: 1.0000" in result.output


class TestScoringCommands:
    def test_score_reference(self, runner, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        jsonio.write_jsonl(
            pairs,
            [
                {"candidate": "the cat sat", "reference": "the cat sat"},
                {"candidate": "a dog", "reference": "the cat"},
            ],
        )
        out = tmp_path / "scores.jsonl"
        result = runner.invoke(main, ["score-reference", "--pairs", str(pairs), "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = jsonio.read_jsonl(out)
        assert rows[0]["values"]["bleu"] == pytest.approx(1.0)

    def test_judge_with_hash_provider(self, runner, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        jsonio.write_jsonl(
            pairs,
            [{"question": "q?", "generated": "g", "reference": "r", "sample_id": "s1"}],
        )
        out = tmp_path / "verdicts.jsonl"
        result = runner.invoke(
            main, ["judge", "--kind", "prometheus", "--pairs", str(pairs),
                   "--llm", "hash", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = jsonio.read_jsonl(out)
        assert len(rows) == 4
        assert all(r["rating"] in (1, 2, 3, 4, 5) for r in rows)

    def test_judge_subset_of_dimensions(self, runner, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        jsonio.write_jsonl(pairs, [{"question": "q?", "generated": "g", "reference": "r"}])
        result = runner.invoke(
            main, ["judge", "--kind", "geval", "--pairs", str(pairs),
                   "--llm", "hash", "--dims", "usability"]
        )
        assert result.exit_code == 0, result.output
        assert "usability" in result.output

    def test_correlate(self, runner, tmp_path):
        cards = tmp_path / "cards.jsonl"
        rows = []
        for i in range(5):
            rows.append(
                {
                    "sample_id": f"s{i}",
                    "model": "m",
                    "values": {"bleu": i / 5, "human_usability": i + 1},
                }
            )
        jsonio.write_jsonl(cards, rows)
        json_out = tmp_path / "report.json"
        result = runner.invoke(main, ["correlate", "--scores", str(cards), "--json-out", str(json_out)])
        assert result.exit_code == 0, result.output
        assert "1.0000" in result.output
        report = json.loads(json_out.read_text())
        assert any(c["metric"] == "bleu" and c["dimension"] == "usability" for c in report["cells"])


class TestRunCommand:
    def test_full_run_exit_zero(self, runner, workdir):
        tmp_path, records_path = workdir
        result = runner.invoke(
            main,
            ["run", "--input", str(records_path), "--out", str(tmp_path / "out"), "--judge", "hash"],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "manifest.json").exists()
        assert "top-1: 1.0000" in result.output

    def test_run_with_config_file(self, runner, workdir):
        tmp_path, records_path = workdir
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"judge": "hash", "ks": [1, 2]}))
        result = runner.invoke(
            main,
            ["--config", str(config), "run", "--input", str(records_path),
             "--out", str(tmp_path / "out")],
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["config"]["judge"] == "hash"
        assert manifest["config"]["ks"] == [1, 2]

    def test_run_nonzero_exit_on_errors(self, runner, workdir):
        tmp_path, records_path = workdir
        script = tmp_path / "script.json"
        script.write_text(json.dumps({"rules": [], "default": None}))
        result = runner.invoke(
            main,
            ["run", "--input", str(records_path), "--out", str(tmp_path / "out"),
             "--chat", f"script:{script}"],
        )
        assert result.exit_code != 0
        assert "unrecovered errors" in result.output


class TestSynthCommand:
    def test_writes_records(self, runner, tmp_path):
        out = tmp_path / "r.jsonl"
        result = runner.invoke(
            main, ["synth", "--n-articles", "8", "--dup-fraction", "0.25",
                   "--dup-distance", "50", "--seed", "1", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert len(jsonio.read_jsonl(out)) == 10
