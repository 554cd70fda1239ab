"""HTTP review service: ranked queues, verdicts, disambiguation, rounds.

The service wraps one project store. Round 1 triages the stored corpus; when
a generator is configured, closing a round collects the next one on the
spot. Every mutation is validated against live state, appended to the event
log, and only then applied, through the same code path used to replay the
log, so a restarted service reproduces its pre-crash responses exactly.

Mutating routes are idempotent per (id, round): repeating a verdict or
judgment acknowledges without change, while contradicting one is a conflict.
"""

from __future__ import annotations

import logging
import threading
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .corpus import LabeledCorpus, Utterance, corpus_from_utterances, dedupe
from .detection import EmbeddingResources, detect_all_classes
from .embedding import EmbeddingMatrix, load_word_vectors
from .errors import PipelineError, TextsieveError
from .evaluation import coverage, diversity
from .generator import synthetic_word_table
from .pipeline import (
    RoundState,
    Verdict,
    build_validation_queue,
    collect_paraphrases,
    flagged_event,
    ingested_events,
    nearest_other_class,
    round_closed_event,
    round_started_event,
    seeds_selected_event,
    select_seeds,
    start_round,
    verdict_event,
    _corpus_matrix,
    _utterance_from_log_record,
    initial_seeds,
)
from .store import ProjectStore

logger = logging.getLogger(__name__)


class VerdictBody(BaseModel):
    id: str
    label: Literal["error", "unique"]


class JudgmentBody(BaseModel):
    id: str
    keep: bool


class ReviewSession:
    """Live state for one project: rounds, queues, verdicts, judgments."""

    def __init__(self, store: ProjectStore):
        self.store = store
        self.pipeline = store.pipeline_config()
        self.generator = store.generator_config()
        self.metric = store.metric_config()
        vectors_path = store.vectors_path()
        if vectors_path:
            word_vectors = load_word_vectors(vectors_path)
        elif self.generator is not None:
            word_vectors = synthetic_word_table(self.generator)
        else:
            word_vectors = None
        self.resources = EmbeddingResources(word_vectors=word_vectors)
        self.round1_corpus = store.corpus()
        self.states: list[RoundState] = []
        self.judgments: dict[int, dict[str, bool]] = {}
        self._pending_ingest: list[tuple[Utterance, str | None, bool]] = []
        self._matrices: dict[int, EmbeddingMatrix] = {}
        self.lock = threading.Lock()
        events = store.events()
        if not events:
            events = self._bootstrap_events()
            for event in events:
                store.append_event(event)
        for event in events:
            self._apply(event)

    # -- bootstrap / replay --------------------------------------------------

    def _bootstrap_events(self) -> list[dict]:
        seeds = (
            initial_seeds(self.generator, self.pipeline.seeds_per_class)
            if self.generator is not None
            else {}
        )
        state = RoundState(number=1, seeds=seeds)
        state.collected = self.round1_corpus
        build_validation_queue(state, self.resources, self.pipeline.detection)
        return [round_started_event(state, self.pipeline.strategy), flagged_event(state)]

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "round-started":
            state = RoundState(
                number=event["round"],
                seeds={
                    k: [_utterance_from_log_record(r) for r in v]
                    for k, v in event["seeds"].items()
                },
            )
            if event["round"] == 1:
                state.collected = self.round1_corpus
            self.states.append(state)
            self._pending_ingest = []
        elif kind == "paraphrase-ingested":
            self._pending_ingest.append(
                (
                    _utterance_from_log_record(event["record"]),
                    event.get("seed"),
                    bool(event.get("noise")),
                )
            )
        elif kind == "flagged":
            state = self.states[-1]
            if state.collected is None:
                state.collected = corpus_from_utterances(u for u, _, _ in self._pending_ingest)
                state.seed_of = {u.id: s for u, s, _ in self._pending_ingest if s is not None}
                state.noise_ids = {u.id for u, _, noisy in self._pending_ingest if noisy}
                self._pending_ingest = []
            state.flagged = {k: list(v) for k, v in event["classes"].items()}
            state.ranked = detect_all_classes(
                state.collected, self.resources, self.pipeline.detection
            )
        elif kind == "verdict":
            self.states[-1].verdicts[event["id"]] = Verdict(
                id=event["id"], label=event["label"], source=event.get("source", "human")
            )
        elif kind == "judgment":
            self.judgments.setdefault(event["round"], {})[event["id"]] = bool(event["keep"])
        elif kind == "seeds-selected":
            self.states[-1].next_seeds = {
                k: [_utterance_from_log_record(r) for r in v]
                for k, v in event["classes"].items()
            }
        elif kind == "round-closed":
            self.states[-1].closed = True
        else:
            raise PipelineError(f"unknown event kind {kind!r}")

    def _append_and_apply(self, event: dict) -> None:
        self.store.append_event(event)
        self._apply(event)

    # -- views ---------------------------------------------------------------

    @property
    def current(self) -> RoundState:
        return self.states[-1]

    def _matrix(self, state: RoundState) -> EmbeddingMatrix:
        if state.number not in self._matrices:
            assert state.collected is not None
            self._matrices[state.number] = _corpus_matrix(state.collected, self.resources)
        return self._matrices[state.number]

    def classes_view(self) -> dict:
        state = self.current
        assert state.collected is not None
        rows = []
        for class_key, utts in state.collected.classes.items():
            flagged = state.flagged.get(class_key, [])
            reviewed = sum(1 for id_ in flagged if id_ in state.verdicts)
            rows.append(
                {
                    "class_key": class_key,
                    "size": len(utts),
                    "flagged": len(flagged),
                    "reviewed": reviewed,
                }
            )
        return {"round": state.number, "classes": rows}

    def outliers_view(self, class_key: str, page: int, page_size: int) -> dict:
        state = self.current
        assert state.collected is not None
        if class_key not in state.collected.classes:
            raise HTTPException(status_code=404, detail=f"unknown class {class_key!r}")
        if page < 0 or page_size < 1 or page_size > 200:
            raise HTTPException(status_code=422, detail="bad paging")
        flagged = state.flagged.get(class_key, [])
        ranked = state.ranked.get(class_key)
        scores = {e.id: (e.rank, e.score) for e in ranked.entries} if ranked else {}
        by_id = state.collected.by_id()
        seeds_by_id = {s.id: s for seeds in state.seeds.values() for s in seeds}
        start = page * page_size
        entries = []
        for id_ in flagged[start : start + page_size]:
            utt = by_id[id_]
            rank, score = scores.get(id_, (None, None))
            verdict = state.verdicts.get(id_)
            seed_id = state.seed_of.get(id_)
            seed = seeds_by_id.get(seed_id) if seed_id else None
            entries.append(
                {
                    "id": id_,
                    "text": utt.text,
                    "rank": rank,
                    "score": score,
                    "verdict": verdict.label if verdict else None,
                    "seed_id": seed_id,
                    "seed_text": seed.text if seed else None,
                }
            )
        return {
            "class_key": class_key,
            "round": state.number,
            "total_flagged": len(flagged),
            "page": page,
            "page_size": page_size,
            "entries": entries,
        }

    def round_view(self) -> dict:
        state = self.current
        flagged_total = sum(len(v) for v in state.flagged.values())
        pending = len(state.pending_ids())
        per_class = {}
        assert state.collected is not None
        for class_key, utts in state.collected.classes.items():
            flagged = state.flagged.get(class_key, [])
            per_class[class_key] = {
                "size": len(utts),
                "flagged": len(flagged),
                "reviewed": sum(1 for id_ in flagged if id_ in state.verdicts),
            }
        return {
            "round": state.number,
            "rounds_total": self.pipeline.rounds,
            "strategy": self.pipeline.strategy,
            "closed": state.closed,
            "flagged_total": flagged_total,
            "reviewed": flagged_total - pending,
            "pending": pending,
            "can_close": pending == 0 and not state.closed,
            "classes": per_class,
        }

    def _validated_corpus(self, state: RoundState) -> LabeledCorpus:
        return corpus_from_utterances(state.validated_utterances())

    def diversity_view(self) -> dict:
        rounds = []
        collected_states = [s for s in self.states if s.collected is not None]
        for state in collected_states:
            validated = self._validated_corpus(state)
            rounds.append(
                {
                    "round": state.number,
                    "samples": len(validated),
                    "diversity": diversity(validated, self.metric),
                }
            )
        union, _ = dedupe(
            corpus_from_utterances(
                u for state in collected_states for u in state.validated_utterances()
            )
        )
        return {
            "max_ngram": self.metric.max_ngram,
            "rounds": rounds,
            "overall": {"samples": len(union), "diversity": diversity(union, self.metric)},
        }

    def coverage_view(self) -> dict:
        collected_states = [s for s in self.states if s.collected is not None]
        pairs = []
        if collected_states:
            base = self._validated_corpus(collected_states[0])
            for state in collected_states[1:]:
                other = self._validated_corpus(state)
                if set(base.classes) != set(other.classes):
                    continue
                pairs.append(
                    {
                        "train_round": collected_states[0].number,
                        "test_round": state.number,
                        "coverage": coverage(base, other, self.metric),
                    }
                )
        return {"max_ngram": self.metric.max_ngram, "pairs": pairs}

    def disambiguation_view(self, id_: str) -> dict:
        state = self.current
        assert state.collected is not None
        by_id = state.collected.by_id()
        if id_ not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown id {id_!r}")
        if id_ not in state.flagged_ids():
            raise HTTPException(status_code=409, detail=f"id {id_!r} is not flagged this round")
        if len(state.collected.classes) < 2:
            raise HTTPException(status_code=409, detail="need a second class to compare against")
        candidate = by_id[id_]
        nearest, own_distance, other_distance = nearest_other_class(
            candidate, state.collected, self._matrix(state)
        )
        return {
            "round": state.number,
            "candidate": {"id": candidate.id, "text": candidate.text, "class_key": candidate.class_key},
            "own_mean_distance": own_distance,
            "nearest": {
                "id": nearest.id,
                "text": nearest.text,
                "class_key": nearest.class_key,
                "distance": other_distance,
            },
            "auto_keep": own_distance < other_distance,
            "judgment": self.judgments.get(state.number, {}).get(id_),
        }

    # -- mutations -----------------------------------------------------------

    def post_verdict(self, id_: str, label: str) -> dict:
        with self.lock:
            state = self.current
            if state.closed:
                raise HTTPException(status_code=409, detail=f"round {state.number} is closed")
            assert state.collected is not None
            if id_ not in state.collected.ids():
                raise HTTPException(status_code=404, detail=f"unknown id {id_!r}")
            if id_ not in state.flagged_ids():
                raise HTTPException(status_code=409, detail=f"id {id_!r} is not flagged this round")
            existing = state.verdicts.get(id_)
            if existing is not None:
                if existing.label == label:
                    return {"status": "unchanged", "id": id_, "remaining": len(state.pending_ids())}
                raise HTTPException(
                    status_code=409,
                    detail=f"id {id_!r} already reviewed as {existing.label!r} this round",
                )
            verdict = Verdict(id=id_, label=label, source="human")
            self._append_and_apply(verdict_event(state, verdict))
            return {"status": "applied", "id": id_, "remaining": len(state.pending_ids())}

    def post_judgment(self, id_: str, keep: bool) -> dict:
        with self.lock:
            state = self.current
            if state.closed:
                raise HTTPException(status_code=409, detail=f"round {state.number} is closed")
            assert state.collected is not None
            if id_ not in state.collected.ids():
                raise HTTPException(status_code=404, detail=f"unknown id {id_!r}")
            if id_ not in state.flagged_ids():
                raise HTTPException(status_code=409, detail=f"id {id_!r} is not flagged this round")
            existing = self.judgments.get(state.number, {}).get(id_)
            if existing is not None:
                if existing == keep:
                    return {"status": "unchanged", "id": id_}
                raise HTTPException(
                    status_code=409, detail=f"id {id_!r} already judged this round"
                )
            self._append_and_apply(
                {"event": "judgment", "round": state.number, "id": id_, "keep": keep}
            )
            return {"status": "applied", "id": id_}

    def close_round(self) -> dict:
        with self.lock:
            state = self.current
            if state.closed:
                return {"status": "unchanged", "round": state.number, "next_round": None}
            pending = state.pending_ids()
            if pending:
                raise HTTPException(
                    status_code=409,
                    detail=f"{len(pending)} flagged items still need verdicts",
                )
            first_seeds = self.states[0].seeds
            can_reseed = bool(first_seeds) or self.pipeline.strategy != "same"
            if self.generator is not None and can_reseed:
                select_seeds(
                    state,
                    self.pipeline.strategy,
                    self.pipeline,
                    self.resources,
                    first_seeds,
                    self.judgments.get(state.number, {}),
                )
                self._append_and_apply(seeds_selected_event(state))
            self._append_and_apply(round_closed_event(state))
            next_round = None
            if self.generator is not None and state.number < self.pipeline.rounds and state.next_seeds:
                scratch = start_round(state, self.pipeline)
                collect_paraphrases(scratch, self.generator, self.pipeline)
                build_validation_queue(scratch, self.resources, self.pipeline.detection)
                self._append_and_apply(round_started_event(scratch, self.pipeline.strategy))
                for event in ingested_events(scratch):
                    self._append_and_apply(event)
                self._append_and_apply(flagged_event(scratch))
                next_round = scratch.number
            return {"status": "closed", "round": state.number, "next_round": next_round}


def create_app(store: ProjectStore | str) -> FastAPI:
    """Build the HTTP app over a project store (or its directory path)."""
    if not isinstance(store, ProjectStore):
        store = ProjectStore(store)
    session = ReviewSession(store)
    app = FastAPI(title="textsieve review service")
    # the browser UI is usually served from a different local origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.session = session

    @app.exception_handler(TextsieveError)
    async def _package_error(_, exc: TextsieveError):  # pragma: no cover - safety net
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/")
    def info() -> dict:
        return {
            "service": "textsieve-review",
            "round": session.current.number,
            "strategy": session.pipeline.strategy,
        }

    @app.get("/classes")
    def classes() -> dict:
        return session.classes_view()

    @app.get("/classes/{class_key}/outliers")
    def outliers(class_key: str, page: int = 0, page_size: int = 20) -> dict:
        return session.outliers_view(class_key, page, page_size)

    @app.post("/verdicts")
    def verdicts(body: VerdictBody) -> dict:
        return session.post_verdict(body.id, body.label)

    @app.get("/disambiguation/{id_}")
    def disambiguation(id_: str) -> dict:
        return session.disambiguation_view(id_)

    @app.post("/disambiguation")
    def judgment(body: JudgmentBody) -> dict:
        return session.post_judgment(body.id, body.keep)

    @app.get("/round")
    def round_() -> dict:
        return session.round_view()

    @app.post("/round/close")
    def close_round() -> dict:
        return session.close_round()

    @app.get("/reports/diversity")
    def diversity_report() -> dict:
        return session.diversity_view()

    @app.get("/reports/coverage")
    def coverage_report() -> dict:
        return session.coverage_view()

    return app
