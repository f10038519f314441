"""Blinded human-rating service: serves adaptation samples to raters and
persists their Likert ratings.

Raters see source and adapted sentences under an opaque sample id; which
system produced an adaptation is kept server-side in the session's blinding
map and only written into the append-only ratings store for post-hoc
aggregation.  One rating per (rater, sample) is enforced through a single
writer lock.
"""

import hashlib
import json
import random
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .adapters import AdaptationRun
from .corpus import Corpus
from .evaluation import (
    EvaluationError,
    LikertRating,
    likert_from_dict,
    likert_to_dict,
)

GROUND_TRUTH_SYSTEM_ID = "ground_truth"


class ServiceError(Exception):
    """Base for service failures; carries the wire error code and status."""

    code = "internal"
    http_status = 500


class UnknownSessionError(ServiceError):
    code = "unknown_session"
    http_status = 404


class UnknownSampleError(ServiceError):
    code = "unknown_sample"
    http_status = 404


class DuplicateRatingError(ServiceError):
    code = "duplicate_rating"
    http_status = 409


class InvalidRatingError(ServiceError):
    code = "invalid_rating"
    http_status = 422


class PoolError(ServiceError):
    code = "invalid_request"
    http_status = 422


@dataclass(frozen=True)
class PoolSample:
    sample_id: str          # opaque; never derived visibly from the system
    system_id: str          # server-side only
    origin_id: str          # question/pmid the adaptation came from
    source_sentences: tuple[str, ...]
    adapted_sentences: tuple[str, ...]

    def rater_payload(self) -> dict:
        """What a rater may see: no system, model or origin identifiers."""
        return {
            "sample_id": self.sample_id,
            "source_sentences": list(self.source_sentences),
            "adapted_sentences": list(self.adapted_sentences),
        }


@dataclass(frozen=True)
class RatingSession:
    session_id: str
    sample_ids: tuple[str, ...]
    blinding_map: dict[str, str]
    created_at: str


def opaque_sample_id(system_id: str, origin_id: str) -> str:
    digest = hashlib.sha256(f"{system_id}:{origin_id}".encode("utf-8"))
    return f"p{digest.hexdigest()[:12]}"


def build_pool(runs: Sequence[AdaptationRun], corpus: Corpus,
               include_gold: bool = False) -> list[PoolSample]:
    """One pool sample per run result (plus, optionally, each ground-truth
    adaptation), keyed by opaque ids.
    """
    by_abstract = {f"{a.question_id}/{a.pmid}": a for a in corpus.abstracts}
    pool: list[PoolSample] = []
    for run in runs:
        for result in run.results:
            abstract = by_abstract.get(result.sample_id)
            if abstract is None:
                raise PoolError(f"run result {result.sample_id!r} not in corpus")
            pool.append(PoolSample(
                sample_id=opaque_sample_id(run.strategy, result.sample_id),
                system_id=run.strategy,
                origin_id=result.sample_id,
                source_sentences=abstract.source_sentences,
                adapted_sentences=result.adapted_sentences,
            ))
    if include_gold:
        for a in corpus.abstracts:
            for ref in a.adaptations:
                origin = f"{a.question_id}/{a.pmid}/{ref.adaptation_id}"
                pool.append(PoolSample(
                    sample_id=opaque_sample_id(GROUND_TRUTH_SYSTEM_ID, origin),
                    system_id=GROUND_TRUTH_SYSTEM_ID,
                    origin_id=origin,
                    source_sentences=a.source_sentences,
                    adapted_sentences=ref.target_sentences,
                ))
    seen: set[str] = set()
    for sample in pool:
        if sample.sample_id in seen:
            raise PoolError(f"duplicate pool sample id {sample.sample_id!r}")
        seen.add(sample.sample_id)
    return pool


class RatingStore:
    """Append-only JSON-lines store with an in-memory (rater, sample) index.

    Replaying the file from zero reproduces the index exactly, so aggregation
    over the file equals aggregation over the live store.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str]] = set()
        self._count = 0
        if self.path.exists():
            for rating in self.ratings():
                self._seen.add((rating.rater_id, rating.sample_id))
                self._count += 1

    def __len__(self) -> int:
        return self._count

    def has(self, rater_id: str, sample_id: str) -> bool:
        return (rater_id, sample_id) in self._seen

    def append(self, rating: LikertRating) -> int:
        """Persist one rating; returns its record id (1-based line number)."""
        key = (rating.rater_id, rating.sample_id)
        with self._lock:
            if key in self._seen:
                raise DuplicateRatingError(
                    f"rater {rating.rater_id!r} already rated "
                    f"sample {rating.sample_id!r}")
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(likert_to_dict(rating), ensure_ascii=False)
                        + "\n")
            self._seen.add(key)
            self._count += 1
            return self._count

    def ratings(self) -> list[LikertRating]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    out.append(likert_from_dict(json.loads(line)))
        return out


class RatingService:
    """Session and rating logic, independent of the HTTP layer."""

    def __init__(self, pool: Sequence[PoolSample], store: RatingStore,
                 sessions_path: str | Path | None = None):
        if not pool:
            raise PoolError("rating pool is empty")
        self.pool = {s.sample_id: s for s in pool}
        if len(self.pool) != len(pool):
            raise PoolError("pool sample ids are not unique")
        self.store = store
        self.sessions_path = Path(sessions_path) if sessions_path else None
        self._sessions: dict[str, RatingSession] = {}
        if self.sessions_path and self.sessions_path.exists():
            with open(self.sessions_path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    session = RatingSession(
                        session_id=row["session_id"],
                        sample_ids=tuple(row["sample_ids"]),
                        blinding_map=dict(row["blinding_map"]),
                        created_at=row["created_at"],
                    )
                    self._sessions[session.session_id] = session

    def create_session(self, n: int, seed: int) -> RatingSession:
        if n < 1:
            raise PoolError(f"session size must be positive, got {n}")
        if n > len(self.pool):
            raise PoolError(
                f"session size {n} exceeds pool size {len(self.pool)}")
        ordered = list(self.pool)  # insertion order: deterministic per pool
        sample_ids = tuple(random.Random(seed).sample(ordered, n))
        session = RatingSession(
            session_id=f"s{uuid.uuid4().hex[:10]}",
            sample_ids=sample_ids,
            blinding_map={sid: self.pool[sid].system_id for sid in sample_ids},
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        self._sessions[session.session_id] = session
        if self.sessions_path:
            with open(self.sessions_path, "a", encoding="utf-8") as f:
                f.write(json.dumps({
                    "session_id": session.session_id,
                    "sample_ids": list(session.sample_ids),
                    "blinding_map": session.blinding_map,
                    "created_at": session.created_at,
                }, ensure_ascii=False) + "\n")
        return session

    def get_session(self, session_id: str) -> RatingSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return session

    def next_sample(self, session_id: str, rater_id: str) -> PoolSample | None:
        """First sample in session order this rater has not rated, or None
        when the session is complete for them."""
        session = self.get_session(session_id)
        for sample_id in session.sample_ids:
            if not self.store.has(rater_id, sample_id):
                return self.pool[sample_id]
        return None

    def submit_rating(self, session_id: str, rater_id: str, sample_id: str,
                      scores: dict[str, int]) -> int:
        session = self.get_session(session_id)
        if sample_id not in session.blinding_map:
            raise UnknownSampleError(
                f"sample {sample_id!r} is not part of session {session_id!r}")
        try:
            rating = LikertRating(
                rater_id=rater_id,
                sample_id=sample_id,
                system_id_hidden=session.blinding_map[sample_id],
                timestamp=datetime.now(timezone.utc).isoformat(),
                **scores,
            )
        except (EvaluationError, TypeError) as exc:
            raise InvalidRatingError(str(exc)) from exc
        return self.store.append(rating)

    def progress(self, session_id: str, rater_id: str | None = None) -> dict:
        session = self.get_session(session_id)
        total = len(session.sample_ids)
        if rater_id is None:
            rated = sum(1 for r in self.store.ratings()
                        if r.sample_id in session.blinding_map)
        else:
            rated = sum(1 for sid in session.sample_ids
                        if self.store.has(rater_id, sid))
        return {
            "session_id": session_id,
            "total": total,
            "rated": rated,
            "remaining": total - rated if rater_id is not None else None,
            "complete": rater_id is not None and rated == total,
        }


# --- HTTP layer ------------------------------------------------------------

def create_app(service: RatingService, static_dir: str | Path | None = None):
    """FastAPI app over a RatingService; optionally serves the rating UI's
    static files at the root."""
    from fastapi import FastAPI, Query, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel, Field

    class SessionRequest(BaseModel):
        n: int = Field(gt=0)
        seed: int

    class RatingSubmission(BaseModel):
        session_id: str
        rater_id: str = Field(min_length=1)
        sample_id: str
        simplicity: int
        accuracy: int
        completeness: int
        brevity: int

    app = FastAPI(title="plainbench rating service")

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.http_status,
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request,
                                 exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request",
                                     "message": str(exc.errors()[:1])})

    @app.post("/api/sessions")
    def create_session(body: SessionRequest):
        session = service.create_session(body.n, body.seed)
        return {"session_id": session.session_id,
                "n": len(session.sample_ids),
                "created_at": session.created_at}

    @app.get("/api/sessions/{session_id}/next")
    def next_sample(session_id: str, rater: str = Query(min_length=1)):
        sample = service.next_sample(session_id, rater)
        progress = service.progress(session_id, rater)
        if sample is None:
            return {"complete": True, "total": progress["total"],
                    "rated": progress["rated"]}
        return {"complete": False,
                "sample": sample.rater_payload(),
                "rated": progress["rated"],
                "total": progress["total"]}

    @app.post("/api/ratings")
    def submit_rating(body: RatingSubmission):
        record_id = service.submit_rating(
            body.session_id, body.rater_id, body.sample_id,
            {"simplicity": body.simplicity, "accuracy": body.accuracy,
             "completeness": body.completeness, "brevity": body.brevity})
        return {"record_id": record_id, "sample_id": body.sample_id}

    @app.get("/api/sessions/{session_id}/progress")
    def progress(session_id: str, rater: str | None = None):
        return service.progress(session_id, rater)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")
    return app
