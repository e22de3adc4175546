from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from ragbench.annotation import AnnotationService, create_app, validate_ratings
from ragbench.errors import InputError, NotFoundError, ValidationError
from ragbench.generation import GeneratedAnswer


def _answers(n=4, model="model-a"):
    return [
        GeneratedAnswer(
            sample_id=f"s{i}",
            question=f"question {i}?",
            article_id=f"a{i}",
            answer=f"generated answer {i}",
            model=model,
            provider="scripted-mock",
            strategy="basic",
        )
        for i in range(n)
    ]


RATINGS = {"readability": 4, "relevance": 4, "truthfulness": 5, "usability": 3}


class TestValidateRatings:
    def test_accepts_full_ratings(self):
        assert validate_ratings(RATINGS) == RATINGS

    def test_rejects_zero(self):
        with pytest.raises(ValidationError):
            validate_ratings({**RATINGS, "usability": 0})

    def test_rejects_six(self):
        with pytest.raises(ValidationError):
            validate_ratings({**RATINGS, "relevance": 6})

    def test_rejects_missing_dimension(self):
        broken = dict(RATINGS)
        del broken["truthfulness"]
        with pytest.raises(ValidationError):
            validate_ratings(broken)

    def test_rejects_non_integer(self):
        with pytest.raises(ValidationError):
            validate_ratings({**RATINGS, "readability": 3.5})
        with pytest.raises(ValidationError):
            validate_ratings({**RATINGS, "readability": True})

    def test_rejects_unknown_dimension(self):
        with pytest.raises(ValidationError):
            validate_ratings({**RATINGS, "tone": 3})


class TestService:
    def test_one_task_per_answer(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(100))
        assert len(session.tasks) == 100
        assert all(service.next_task(session.session_id, "alice") is not None for _ in range(1))

    def test_same_seed_same_order(self, tmp_path):
        a = AnnotationService(tmp_path / "a").create_session(_answers(20), seed=5)
        b = AnnotationService(tmp_path / "b").create_session(_answers(20), seed=5)
        assert [t.task_id for t in a.tasks] == [t.task_id for t in b.tasks]

    def test_different_seed_different_order(self, tmp_path):
        a = AnnotationService(tmp_path / "a").create_session(_answers(20), seed=1)
        b = AnnotationService(tmp_path / "b").create_session(_answers(20), seed=2)
        assert [t.task_id for t in a.tasks] != [t.task_id for t in b.tasks]

    def test_duplicate_sample_model_rejected(self, tmp_path):
        service = AnnotationService(tmp_path)
        with pytest.raises(InputError):
            service.create_session(_answers(2) + _answers(1))

    def test_next_task_walks_queue_per_annotator(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(3))
        sid = session.session_id
        first = service.next_task(sid, "alice")
        service.submit_annotation(sid, first.task_id, "alice", RATINGS)
        second = service.next_task(sid, "alice")
        assert second.task_id == session.tasks[1].task_id
        # bob's progress is independent
        assert service.next_task(sid, "bob").task_id == session.tasks[0].task_id

    def test_done_signal(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(2))
        for task in session.tasks:
            service.submit_annotation(session.session_id, task.task_id, "alice", RATINGS)
        assert service.next_task(session.session_id, "alice") is None

    def test_unknown_session_not_found(self, tmp_path):
        service = AnnotationService(tmp_path)
        with pytest.raises(NotFoundError):
            service.next_task("nope", "alice")

    def test_unknown_task_not_found(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(1))
        with pytest.raises(NotFoundError):
            service.submit_annotation(session.session_id, "t-missing", "alice", RATINGS)

    def test_resubmission_replaces_with_trail(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(1))
        task = session.tasks[0]
        service.submit_annotation(session.session_id, task.task_id, "alice", RATINGS)
        ack = service.submit_annotation(
            session.session_id, task.task_id, "alice", {**RATINGS, "usability": 1}
        )
        assert ack["replaced"] is True
        [card] = service.export_annotations(session.session_id)
        assert card.values["human_usability"] == 1.0
        events = [json.loads(line) for line in (tmp_path / "events.jsonl").read_text().splitlines()]
        submissions = [e for e in events if e["event"] == "annotation_submitted"]
        assert len(submissions) == 2  # audit trail keeps both

    def test_task_conservation(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(5))
        sid = session.session_id
        for i, task in enumerate(session.tasks):
            progress = service.progress(sid, "alice")
            assert progress["scored"] + progress["pending"] == progress["total"] == 5
            service.submit_annotation(sid, task.task_id, "alice", RATINGS)
        progress = service.progress(sid, "alice")
        assert progress["scored"] == 5 and progress["pending"] == 0

    def test_restart_round_trip(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(3), seed=9)
        sid = session.session_id
        for task in session.tasks[:2]:
            service.submit_annotation(sid, task.task_id, "alice", RATINGS)
        before = [c.to_dict() for c in service.export_annotations(sid)]

        reloaded = AnnotationService(tmp_path)  # replay the event log
        after = [c.to_dict() for c in reloaded.export_annotations(sid)]
        assert before == after
        assert [t.task_id for t in reloaded.sessions[sid].tasks] == [t.task_id for t in session.tasks]

    def test_export_schema(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(1, model="model-z"))
        service.submit_annotation(session.session_id, session.tasks[0].task_id, "alice", RATINGS)
        [card] = service.export_annotations(session.session_id)
        assert card.model == "model-z"  # unblinded in export
        assert card.values == {
            "human_readability": 4.0,
            "human_relevance": 4.0,
            "human_truthfulness": 5.0,
            "human_usability": 3.0,
        }

    def test_empty_session_exports_nothing(self, tmp_path):
        service = AnnotationService(tmp_path)
        session = service.create_session(_answers(2))
        assert service.export_annotations(session.session_id) == []


class TestHttpApi:
    def _client(self, tmp_path, blinded=True, n=3, auto_cards=()):
        app = create_app(tmp_path / "store", answers=_answers(n), auto_cards=auto_cards)
        client = TestClient(app)
        created = client.post("/sessions", json={"blinded": blinded, "seed": 0})
        assert created.status_code == 200
        return client, created.json()["session_id"]

    def test_annotation_flow(self, tmp_path):
        client, sid = self._client(tmp_path)
        done = 0
        while True:
            body = client.get(f"/sessions/{sid}/next", params={"annotator": "alice"}).json()
            if body["done"]:
                break
            response = client.post(
                f"/sessions/{sid}/annotations",
                json={"task_id": body["task"]["task_id"], "annotator_id": "alice", "ratings": RATINGS},
            )
            assert response.status_code == 200
            done += 1
        assert done == 3
        progress = client.get(f"/sessions/{sid}/progress", params={"annotator": "alice"}).json()
        assert progress == {"total": 3, "scored": 3, "pending": 0}

    def test_blinded_payloads_have_no_model_field(self, tmp_path):
        client, sid = self._client(tmp_path, blinded=True)
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        assert "model" not in body["task"]
        assert "model-a" not in json.dumps(body)

    def test_unblinded_payload_carries_model(self, tmp_path):
        client, sid = self._client(tmp_path, blinded=False)
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        assert body["task"]["model"] == "model-a"

    def test_validation_error_maps_to_400(self, tmp_path):
        client, sid = self._client(tmp_path)
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        response = client.post(
            f"/sessions/{sid}/annotations",
            json={
                "task_id": body["task"]["task_id"],
                "annotator_id": "a",
                "ratings": {**RATINGS, "usability": 0},
            },
        )
        assert response.status_code == 400
        assert "usability" in response.json()["error"]

    def test_unknown_session_maps_to_404(self, tmp_path):
        client, _ = self._client(tmp_path)
        assert client.get("/sessions/zz/next", params={"annotator": "a"}).status_code == 404

    def test_export_endpoint(self, tmp_path):
        client, sid = self._client(tmp_path)
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        client.post(
            f"/sessions/{sid}/annotations",
            json={"task_id": body["task"]["task_id"], "annotator_id": "a", "ratings": RATINGS},
        )
        cards = client.get(f"/sessions/{sid}/export").json()["cards"]
        assert len(cards) == 1
        assert set(cards[0]["values"]) == {
            "human_readability", "human_relevance", "human_truthfulness", "human_usability",
        }

    def test_report_without_auto_cards_has_means_only(self, tmp_path):
        client, sid = self._client(tmp_path)
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        client.post(
            f"/sessions/{sid}/annotations",
            json={"task_id": body["task"]["task_id"], "annotator_id": "a", "ratings": RATINGS},
        )
        report = client.get(f"/sessions/{sid}/report").json()
        assert report["correlation"] is None
        assert any(row["metric"] == "human_usability" for row in report["means"])

    def test_report_with_auto_cards_correlates(self, tmp_path):
        from ragbench.stats import ScoreCard

        auto = [
            ScoreCard(sample_id=f"s{i}", model="model-a", values={"bleu": i / 4})
            for i in range(4)
        ]
        client, sid = self._client(tmp_path, n=4, auto_cards=auto)
        ratings_by_index = [1, 2, 4, 5]
        while True:
            body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
            if body["done"]:
                break
            i = int(body["task"]["sample_id"][1:])
            ratings = {d: ratings_by_index[i] for d in RATINGS}
            client.post(
                f"/sessions/{sid}/annotations",
                json={"task_id": body["task"]["task_id"], "annotator_id": "a", "ratings": ratings},
            )
        report = client.get(f"/sessions/{sid}/report").json()
        cells = report["correlation"]["cells"]
        bleu_cells = [c for c in cells if c["metric"] == "bleu"]
        assert bleu_cells and all(c["spearman"] == pytest.approx(1.0) for c in bleu_cells)

    def test_gold_hidden_by_default_shown_on_request(self, tmp_path):
        app = create_app(
            tmp_path / "store",
            answers=_answers(1),
            gold_answers={"s0": "the gold answer"},
        )
        client = TestClient(app)
        sid = client.post("/sessions", json={}).json()["session_id"]
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a"}).json()
        assert "gold_answer" not in body["task"]
        body = client.get(f"/sessions/{sid}/next", params={"annotator": "a", "gold": "true"}).json()
        assert body["task"]["gold_answer"] == "the gold answer"
