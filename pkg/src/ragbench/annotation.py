"""Human annotation service: Likert scoring of generated answers over HTTP.

Domain experts score one task at a time on the four quality dimensions with
integers 1..5. Sessions shuffle tasks deterministically under a seed and
blind the model tag by default. State persists as an append-only JSON Lines
event log replayed at startup, so a restart loses nothing. Exported
annotations use the stats module's score-card schema.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import InputError, NotFoundError, ValidationError
from .generation import GeneratedAnswer
from .stats import (
    DIMENSION_NAMES,
    ScoreCard,
    correlation_report,
    merge_cards,
    score_summary,
)

HUMAN_KEY = "human_{dimension}"


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    sample_id: str
    question: str
    generated: str
    gold_answer: str
    model: str

    def to_payload(self, blinded: bool, show_gold: bool) -> dict:
        """Annotator-facing view; blinding removes the model field entirely."""
        payload = {
            "task_id": self.task_id,
            "sample_id": self.sample_id,
            "question": self.question,
            "generated": self.generated,
        }
        if show_gold:
            payload["gold_answer"] = self.gold_answer
        if not blinded:
            payload["model"] = self.model
        return payload


@dataclass(frozen=True)
class HumanAnnotation:
    task_id: str
    annotator_id: str
    ratings: dict[str, int]
    timestamp: float
    comment: str = ""

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "ratings": dict(self.ratings),
            "timestamp": self.timestamp,
            "comment": self.comment,
        }


@dataclass
class Session:
    session_id: str
    blinded: bool
    seed: int
    show_gold: bool
    tasks: list[AnnotationTask]
    # latest annotation per (task_id, annotator_id); the event log is the audit trail
    annotations: dict[tuple[str, str], HumanAnnotation] = field(default_factory=dict)

    def task_by_id(self, task_id: str) -> AnnotationTask:
        for task in self.tasks:
            if task.task_id == task_id:
                return task
        raise NotFoundError(f"unknown task: {task_id}")

    def annotators(self) -> list[str]:
        return sorted({annotator for _, annotator in self.annotations})


def _task_id(sample_id: str, model: str) -> str:
    digest = hashlib.sha256(f"{sample_id}\x1f{model}".encode("utf-8")).hexdigest()
    return f"t-{digest[:10]}"


def validate_ratings(ratings: dict) -> dict[str, int]:
    """All four dimensions present, each an integer 1..5."""
    if not isinstance(ratings, dict):
        raise ValidationError("ratings must be an object")
    clean: dict[str, int] = {}
    for dimension in DIMENSION_NAMES:
        if dimension not in ratings:
            raise ValidationError(f"missing dimension: {dimension}")
        value = ratings[dimension]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"rating for {dimension} must be an integer, got {value!r}")
        if not 1 <= value <= 5:
            raise ValidationError(f"rating for {dimension} outside 1..5: {value}")
        clean[dimension] = value
    unknown = set(ratings) - set(DIMENSION_NAMES)
    if unknown:
        raise ValidationError(f"unknown dimension(s): {', '.join(sorted(unknown))}")
    return clean


class AnnotationService:
    """Session and annotation state machine with event-log persistence.

    All mutations are serialized through one lock; the running service owns
    its store directory exclusively.
    """

    def __init__(self, store_dir: str | Path):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self._log_path = self.store_dir / "events.jsonl"
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self._replay()

    # -- persistence -------------------------------------------------------

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply(json.loads(line))

    def _append(self, event: dict) -> None:
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            fh.flush()

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "session_created":
            answers = [GeneratedAnswer.from_dict(row) for row in event["answers"]]
            session = _build_session(
                session_id=event["session_id"],
                answers=answers,
                blinded=event["blinded"],
                seed=event["seed"],
                show_gold=event["show_gold"],
                gold_answers=event.get("gold_answers", {}),
            )
            self.sessions[session.session_id] = session
        elif kind == "annotation_submitted":
            row = event["annotation"]
            annotation = HumanAnnotation(
                task_id=row["task_id"],
                annotator_id=row["annotator_id"],
                ratings={k: int(v) for k, v in row["ratings"].items()},
                timestamp=float(row["timestamp"]),
                comment=row.get("comment", ""),
            )
            session = self.sessions[event["session_id"]]
            session.annotations[(annotation.task_id, annotation.annotator_id)] = annotation

    # -- operations ----------------------------------------------------------

    def create_session(
        self,
        answers: Sequence[GeneratedAnswer],
        blinded: bool = True,
        seed: int = 0,
        show_gold: bool = False,
        gold_answers: dict[str, str] | None = None,
    ) -> Session:
        """One pending task per answer, deterministically shuffled under seed."""
        answers = list(answers)
        if not answers:
            raise InputError("answers must be non-empty")
        seen = set()
        for answer in answers:
            key = (answer.sample_id, answer.model)
            if key in seen:
                raise InputError(f"duplicate (sample, model) pair: {key}")
            seen.add(key)
        with self._lock:
            session_id = f"s{len(self.sessions) + 1:04d}"
            event = {
                "event": "session_created",
                "session_id": session_id,
                "blinded": blinded,
                "seed": seed,
                "show_gold": show_gold,
                "answers": [a.to_dict() for a in answers],
                "gold_answers": gold_answers or {},
            }
            self._append(event)
            self._apply(event)
            return self.sessions[session_id]

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session: {session_id}") from None

    def next_task(self, session_id: str, annotator_id: str) -> AnnotationTask | None:
        """Lowest-ordered task this annotator has not scored; None when done."""
        if not annotator_id:
            raise InputError("annotator_id must be non-empty")
        session = self.get_session(session_id)
        for task in session.tasks:
            if (task.task_id, annotator_id) not in session.annotations:
                return task
        return None

    def submit_annotation(
        self,
        session_id: str,
        task_id: str,
        annotator_id: str,
        ratings: dict,
        comment: str = "",
        timestamp: float | None = None,
    ) -> dict:
        """Persist atomically; resubmission replaces, the log keeps the trail."""
        if not annotator_id:
            raise ValidationError("annotator_id must be non-empty")
        session = self.get_session(session_id)
        session.task_by_id(task_id)  # not-found check before validation
        clean = validate_ratings(ratings)
        annotation = HumanAnnotation(
            task_id=task_id,
            annotator_id=annotator_id,
            ratings=clean,
            timestamp=time.time() if timestamp is None else timestamp,
            comment=comment,
        )
        with self._lock:
            replaced = (task_id, annotator_id) in session.annotations
            event = {
                "event": "annotation_submitted",
                "session_id": session_id,
                "annotation": annotation.to_dict(),
            }
            self._append(event)
            self._apply(event)
        return {"ok": True, "task_id": task_id, "replaced": replaced}

    def progress(self, session_id: str, annotator_id: str | None = None) -> dict:
        session = self.get_session(session_id)
        total = len(session.tasks)
        if annotator_id:
            scored = sum(1 for t in session.tasks if (t.task_id, annotator_id) in session.annotations)
            return {"total": total, "scored": scored, "pending": total - scored}
        return {
            "total": total,
            "annotators": {
                name: {
                    "scored": sum(1 for t in session.tasks if (t.task_id, name) in session.annotations),
                    "pending": total - sum(1 for t in session.tasks if (t.task_id, name) in session.annotations),
                }
                for name in session.annotators()
            },
        }

    def export_annotations(self, session_id: str) -> list[ScoreCard]:
        """Human ratings as score-card fragments, joined by sample id and the
        unblinded model tag (export feeds the stats layer, not the annotator)."""
        session = self.get_session(session_id)
        cards = []
        for task in session.tasks:
            for annotator in session.annotators():
                annotation = session.annotations.get((task.task_id, annotator))
                if annotation is None:
                    continue
                cards.append(
                    ScoreCard(
                        sample_id=task.sample_id,
                        model=task.model,
                        values={
                            HUMAN_KEY.format(dimension=d): float(r)
                            for d, r in annotation.ratings.items()
                        },
                    )
                )
        return cards

    def report(self, session_id: str, auto_cards: Sequence[ScoreCard] = ()) -> dict:
        """Means table plus, when automatic metric cards are supplied,
        the correlation report. All statistics computed server-side."""
        human = self.export_annotations(session_id)
        cards = merge_cards(list(auto_cards) + human)
        if not cards:
            return {"means": [], "correlation": None}
        means = [
            {"model": r.model, "metric": r.metric, "mean": r.mean, "count": r.count}
            for r in score_summary(cards)
        ]
        correlation = correlation_report(cards).to_dict() if auto_cards and human else None
        return {"means": means, "correlation": correlation}


def _build_session(
    session_id: str,
    answers: Sequence[GeneratedAnswer],
    blinded: bool,
    seed: int,
    show_gold: bool,
    gold_answers: dict[str, str],
) -> Session:
    tasks = [
        AnnotationTask(
            task_id=_task_id(a.sample_id, a.model),
            sample_id=a.sample_id,
            question=a.question,
            generated=a.answer,
            gold_answer=gold_answers.get(a.sample_id, ""),
            model=a.model,
        )
        for a in answers
    ]
    Random(seed).shuffle(tasks)
    return Session(
        session_id=session_id,
        blinded=blinded,
        seed=seed,
        show_gold=show_gold,
        tasks=tasks,
    )


# ---------------------------------------------------------------------------
# HTTP layer

def create_app(
    store_dir: str | Path,
    answers: Sequence[GeneratedAnswer] = (),
    gold_answers: dict[str, str] | None = None,
    auto_cards: Sequence[ScoreCard] = (),
    ui_dir: str | Path | None = None,
):
    """FastAPI app exposing the session/annotation REST API.

    ``answers`` seed new sessions created without an explicit answer list;
    ``auto_cards`` enable the correlation part of the report endpoint;
    ``ui_dir`` is served statically at / when it exists.
    """
    app = FastAPI(title="ragbench annotation service")
    service = AnnotationService(store_dir)
    default_answers = list(answers)
    default_gold = dict(gold_answers or {})
    preloaded_cards = list(auto_cards)

    @app.exception_handler(NotFoundError)
    async def _not_found(_request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _invalid(_request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(InputError)
    async def _bad_input(_request: Request, exc: InputError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                {"session_id": s.session_id, "total": len(s.tasks), "blinded": s.blinded}
                for s in service.sessions.values()
            ]
        }

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json() if await request.body() else {}
        body = body or {}
        raw_answers = body.get("answers")
        if raw_answers:
            session_answers = [GeneratedAnswer.from_dict(row) for row in raw_answers]
        else:
            session_answers = default_answers
        session = service.create_session(
            answers=session_answers,
            blinded=bool(body.get("blinded", True)),
            seed=int(body.get("seed", 0)),
            show_gold=bool(body.get("show_gold", False)),
            gold_answers=body.get("gold_answers") or default_gold,
        )
        return {"session_id": session.session_id, "total": len(session.tasks)}

    @app.get("/sessions/{session_id}/next")
    def next_task(session_id: str, annotator: str, gold: bool = False):
        session = service.get_session(session_id)
        task = service.next_task(session_id, annotator)
        progress = service.progress(session_id, annotator)
        if task is None:
            return {"done": True, **progress}
        payload = task.to_payload(
            blinded=session.blinded, show_gold=session.show_gold or gold
        )
        return {"done": False, "task": payload, **progress}

    @app.post("/sessions/{session_id}/annotations")
    async def submit(session_id: str, request: Request):
        body = await request.json()
        return service.submit_annotation(
            session_id,
            task_id=str(body.get("task_id", "")),
            annotator_id=str(body.get("annotator_id", "")),
            ratings=body.get("ratings"),
            comment=str(body.get("comment", "")),
        )

    @app.get("/sessions/{session_id}/progress")
    def progress(session_id: str, annotator: str | None = None):
        return service.progress(session_id, annotator)

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        return {"cards": [card.to_dict() for card in service.export_annotations(session_id)]}

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        return service.report(session_id, auto_cards=preloaded_cards)

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def root():
            return {
                "service": "ragbench annotation service",
                "hint": "build the frontend bundle and pass --ui to serve it here",
            }

    app.state.service = service
    return app
