from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragbench.corpus import (
    Article,
    CorpusError,
    KnowledgeBase,
    UserMetadata,
    clean_text,
    corpus_stats,
    load_corpus,
    load_corpus_store,
    save_corpus,
)
from ragbench.errors import InputError

from conftest import records_to_lines


class TestCleanText:
    def test_strips_tags(self):
        assert clean_text("<p>Hello</p>") == "Hello"

    def test_collapses_whitespace(self):
        assert clean_text("  Hi \n\n there  ") == "Hi there"

    def test_removes_empty_markup(self):
        # reference cleaning-rule suite applied by hand: the empty bold pair
        # drops, the text survives
        assert clean_text("** **Policy") == "Policy"

    def test_keeps_nonempty_markup(self):
        assert clean_text("**bold** text") == "**bold** text"

    def test_nested_leftovers_reach_fixed_point(self):
        assert clean_text("<div><p> </p></div>") == ""
        assert clean_text("&nbsp;&nbsp;x") == "x"

    def test_empty_output_is_legal(self):
        assert clean_text("<br/>") == ""

    @given(st.text(max_size=300))
    @settings(max_examples=300)
    def test_idempotent(self, text):
        once = clean_text(text)
        assert clean_text(once) == once

    @given(st.text(max_size=300))
    def test_no_whitespace_runs(self, text):
        cleaned = clean_text(text)
        assert "  " not in cleaned
        assert cleaned == cleaned.strip()


class TestUserMetadata:
    def test_missing_fields_become_wildcards(self):
        meta = UserMetadata.from_dict({"region": "EMEA"})
        assert meta.region == "EMEA"
        assert meta.country_code == "*"
        assert meta.user_role == "*"

    def test_none_and_empty_normalize(self):
        meta = UserMetadata.from_dict({"region": None, "country_code": "  "})
        assert meta.region == "*"
        assert meta.country_code == "*"

    def test_round_trip(self):
        meta = UserMetadata.from_dict({"region": "APJ", "process_id": "p01"})
        assert UserMetadata.from_dict(meta.to_dict()) == meta


class TestLoadCorpus:
    def test_empty_stream(self):
        samples, kb, skipped = load_corpus([])
        assert samples == [] and len(kb) == 0 and skipped == 0

    def test_shared_contexts_deduplicate(self, tiny_records):
        records = tiny_records[:2] + [dict(tiny_records[0], question="Different question?")]
        samples, kb, skipped = load_corpus(records_to_lines(records))
        assert len(samples) == 3
        assert len(kb) == 2
        assert skipped == 0

    def test_long_context_skipped(self, tiny_records):
        record = dict(tiny_records[0], context="word " * 50)
        samples, kb, skipped = load_corpus(records_to_lines([record]), max_tokens=10)
        assert samples == [] and len(kb) == 0 and skipped == 1

    def test_missing_field_reports_line_number(self, tiny_records):
        bad = {"question": "q", "answer": "a"}
        lines = records_to_lines([tiny_records[0], bad])
        with pytest.raises(CorpusError) as excinfo:
            load_corpus(lines)
        assert "line 2" in str(excinfo.value)
        assert "context" in str(excinfo.value)

    def test_invalid_json_reports_line_number(self):
        with pytest.raises(CorpusError) as excinfo:
            load_corpus(["{not json"])
        assert "line 1" in str(excinfo.value)

    def test_empty_after_cleaning_is_malformed(self, tiny_records):
        record = dict(tiny_records[0], question="<p> </p>")
        with pytest.raises(CorpusError):
            load_corpus(records_to_lines([record]))

    def test_referential_integrity(self, tiny_corpus):
        samples, kb = tiny_corpus
        for sample in samples:
            assert sample.article_id in kb

    def test_articles_are_cleaning_idempotent(self, tiny_corpus):
        _, kb = tiny_corpus
        for article in kb:
            assert clean_text(article.text) == article.text

    def test_explicit_ids_win(self, tiny_records):
        record = dict(tiny_records[0], id="my-id")
        samples, _, _ = load_corpus(records_to_lines([record]))
        assert samples[0].id == "my-id"

    def test_duplicate_ids_rejected(self, tiny_records):
        records = [dict(tiny_records[0], id="x"), dict(tiny_records[1], id="x")]
        with pytest.raises(CorpusError):
            load_corpus(records_to_lines(records))

    def test_deterministic(self, tiny_records):
        lines = records_to_lines(tiny_records)
        first = load_corpus(lines)
        second = load_corpus(lines)
        assert [s.id for s in first[0]] == [s.id for s in second[0]]
        assert list(first[1].articles) == list(second[1].articles)
        assert first[2] == second[2]

    def test_token_count_matches_tokenizer(self, tiny_corpus):
        _, kb = tiny_corpus
        for article in kb:
            assert article.token_count == len(article.text.split())


class TestCorpusStats:
    def _kb(self, token_counts):
        articles = {}
        for i, count in enumerate(token_counts):
            text = " ".join(f"w{j}" for j in range(count))
            articles[f"a{i}"] = Article(
                id=f"a{i}", text=text, applicability=UserMetadata(), token_count=count
            )
        return KnowledgeBase(articles)

    def test_histogram_buckets(self):
        kb = self._kb([3, 5])
        report = corpus_stats([], kb, bucket_width=4)
        assert [(b.lo, b.hi, b.count) for b in report.token_histogram] == [(0, 4, 1), (4, 8, 1)]

    def test_histogram_counts_sum_to_articles(self):
        kb = self._kb([1, 2, 9, 17, 17])
        report = corpus_stats([], kb, bucket_width=4)
        assert sum(b.count for b in report.token_histogram) == len(kb)

    def test_top_questions(self, tiny_corpus):
        samples, kb = tiny_corpus
        doubled = samples + [samples[0]]
        report = corpus_stats(doubled, kb, top_n=1)
        assert report.top_questions == ((samples[0].question, 2),)

    def test_tie_breaks_lexicographically(self, tiny_corpus):
        samples, kb = tiny_corpus
        report = corpus_stats(samples, kb, top_n=1)
        expected = sorted(s.question for s in samples)[0]
        assert report.top_questions == ((expected, 1),)

    def test_rejects_bad_bucket_width(self, tiny_corpus):
        samples, kb = tiny_corpus
        with pytest.raises(InputError):
            corpus_stats(samples, kb, bucket_width=0)


class TestCorpusStore:
    def test_round_trip(self, tiny_corpus, tmp_path):
        samples, kb = tiny_corpus
        path = tmp_path / "corpus.json"
        save_corpus(path, samples, kb, skipped=2)
        loaded_samples, loaded_kb, skipped = load_corpus_store(path)
        assert loaded_samples == samples
        assert loaded_kb.articles == kb.articles
        assert skipped == 2

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(CorpusError):
            load_corpus_store(path)
