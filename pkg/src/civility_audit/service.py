"""HTTP service that serves annotation batches and stores submitted ratings.

The server owns all randomness: batches, dimension display order, and
which end of each scale appears on the left are fixed when a session is
created, and the client renders exactly what it is told. Submitted raw
values are persisted append-only together with the server-side orientation
flags, so composite scores can always be recomputed from the store.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from filelock import FileLock
from pydantic import BaseModel

from .annotation import (
    AnnotatorRating,
    Batch,
    Dimension,
    RawRating,
    SCALE_MAX,
    SCALE_MIN,
    build_batches,
    composites_by_snippet,
)
from .corpus import Snippet

DEFAULT_BATCH_SIZE = 15


class RatingsStore:
    """Append-only JSON-lines store; writes run under a file lock."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    def append(self, records: Sequence[dict]) -> None:
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                for record in records:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def count(self) -> int:
        return len(self.load())


def ratings_from_store(records: Sequence[dict]) -> list[AnnotatorRating]:
    """Rebuild per-snippet ratings from stored per-dimension records."""
    grouped: dict[tuple[str, str], list[dict]] = {}
    for record in records:
        grouped.setdefault((record["annotator_id"], record["snippet_id"]), []).append(record)
    ratings = []
    for (annotator_id, snippet_id), rows in sorted(grouped.items()):
        ratings.append(
            AnnotatorRating(
                annotator_id=annotator_id,
                snippet_id=snippet_id,
                ratings=tuple(
                    RawRating(
                        dimension=Dimension.from_key(r["dimension"]),
                        value=int(r["value"]),
                        civil_end_on_left=bool(r["civil_end_on_left"]),
                    )
                    for r in rows
                ),
                timestamp=rows[0].get("timestamp", ""),
            )
        )
    return ratings


def composites_from_store(path: str | Path) -> dict:
    store = RatingsStore(path)
    return composites_by_snippet(ratings_from_store(store.load()))


@dataclass
class AnnotationSession:
    annotator_id: str
    batches: list[Batch]
    next_index: int = 0
    submitted: set[str] = field(default_factory=set)
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def current_batch(self) -> Batch | None:
        if self.next_index < len(self.batches):
            return self.batches[self.next_index]
        return None

    def completed_snippet_ids(self) -> set[str]:
        return {
            item.snippet_id
            for batch in self.batches
            if batch.batch_id in self.submitted
            for item in batch.items
        }


class ServiceState:
    def __init__(
        self,
        snippets: Sequence[Snippet],
        annotators: Sequence[str],
        store: RatingsStore,
        batch_size: int = DEFAULT_BATCH_SIZE,
        seed: int = 0,
    ):
        self.snippets = {s.id: s for s in snippets}
        self.store = store
        self.batch_size = batch_size
        self.seed = seed
        self._lock = threading.Lock()
        self.sessions = {
            annotator_id: AnnotationSession(
                annotator_id=annotator_id,
                batches=build_batches(
                    list(snippets), annotator_id, size=batch_size, seed=seed
                ),
            )
            for annotator_id in annotators
        }

    def session(self, annotator_id: str) -> AnnotationSession:
        session = self.sessions.get(annotator_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown annotator {annotator_id!r}")
        return session


def _batch_wire(state: ServiceState, batch: Batch | None, done: bool) -> dict:
    if batch is None:
        return {"batch_id": None, "annotator_id": "", "items": [], "done": done}
    items = []
    for item in batch.items:
        snippet = state.snippets[item.snippet_id]
        items.append(
            {
                "snippet_id": item.snippet_id,
                "show": snippet.show,
                "text": snippet.text,
                "presentations": [
                    {
                        "dimension": p.dimension.key,
                        "civil_label": p.dimension.civil_label,
                        "uncivil_label": p.dimension.uncivil_label,
                        "civil_end_on_left": p.civil_end_on_left,
                        "display_order": p.display_order,
                    }
                    for p in item.presentations
                ],
            }
        )
    return {
        "batch_id": batch.batch_id,
        "annotator_id": batch.annotator_id,
        "items": items,
        "done": done,
    }


class RatingIn(BaseModel):
    dimension: str
    value: int
    civil_end_on_left: bool


class SnippetRatingsIn(BaseModel):
    snippet_id: str
    ratings: list[RatingIn]


class SubmissionIn(BaseModel):
    ratings: list[SnippetRatingsIn]


def _validate_submission(batch: Batch, submission: SubmissionIn) -> list[dict]:
    """Check a submission against the served batch; returns problem dicts."""
    problems = []
    expected = {
        item.snippet_id: {p.dimension.key: p.civil_end_on_left for p in item.presentations}
        for item in batch.items
    }
    seen: dict[str, set[str]] = {}
    for entry in submission.ratings:
        if entry.snippet_id not in expected:
            problems.append(
                {"snippet_id": entry.snippet_id, "dimension": None,
                 "problem": "snippet not in this batch"}
            )
            continue
        for rating in entry.ratings:
            dims = expected[entry.snippet_id]
            if rating.dimension not in dims:
                problems.append(
                    {"snippet_id": entry.snippet_id, "dimension": rating.dimension,
                     "problem": "unknown dimension"}
                )
                continue
            if not SCALE_MIN <= rating.value <= SCALE_MAX:
                problems.append(
                    {"snippet_id": entry.snippet_id, "dimension": rating.dimension,
                     "problem": f"value {rating.value} outside {SCALE_MIN}..{SCALE_MAX}"}
                )
            if rating.civil_end_on_left != dims[rating.dimension]:
                problems.append(
                    {"snippet_id": entry.snippet_id, "dimension": rating.dimension,
                     "problem": "orientation does not match the served presentation"}
                )
            seen.setdefault(entry.snippet_id, set()).add(rating.dimension)
    for snippet_id, dims in expected.items():
        missing = set(dims) - seen.get(snippet_id, set())
        for dimension in sorted(missing):
            problems.append(
                {"snippet_id": snippet_id, "dimension": dimension, "problem": "missing rating"}
            )
    return problems


def create_app(
    snippets: Sequence[Snippet],
    annotators: Sequence[str],
    store_path: str | Path,
    batch_size: int = DEFAULT_BATCH_SIZE,
    seed: int = 0,
) -> FastAPI:
    state = ServiceState(
        snippets, annotators, RatingsStore(store_path), batch_size=batch_size, seed=seed
    )
    app = FastAPI(title="civility-audit annotation service")
    # The web client is typically served from a separate static origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.service = state

    @app.get("/api/annotators/{annotator_id}/next-batch")
    def next_batch(annotator_id: str) -> dict:
        with state._lock:
            session = state.session(annotator_id)
            batch = session.current_batch()
            if batch is None:
                return _batch_wire(state, None, done=True) | {"annotator_id": annotator_id}
            return _batch_wire(state, batch, done=False)

    @app.post("/api/annotators/{annotator_id}/batches/{batch_id}/ratings")
    def submit_ratings(annotator_id: str, batch_id: str, submission: SubmissionIn) -> dict:
        with state._lock:
            session = state.session(annotator_id)
            if batch_id in session.submitted:
                raise HTTPException(
                    status_code=409, detail=f"batch {batch_id!r} was already submitted"
                )
            batch = session.current_batch()
            if batch is None or batch.batch_id != batch_id:
                raise HTTPException(status_code=404, detail=f"unknown batch {batch_id!r}")
            problems = _validate_submission(batch, submission)
            if problems:
                raise HTTPException(status_code=422, detail={"errors": problems})
            timestamp = datetime.now(timezone.utc).isoformat()
            records = []
            for entry in submission.ratings:
                for rating in entry.ratings:
                    records.append(
                        {
                            "annotator_id": annotator_id,
                            "snippet_id": entry.snippet_id,
                            "batch_id": batch_id,
                            "dimension": rating.dimension,
                            "value": rating.value,
                            "civil_end_on_left": rating.civil_end_on_left,
                            "timestamp": timestamp,
                        }
                    )
            state.store.append(records)
            session.submitted.add(batch_id)
            session.next_index += 1
            return {"stored": len(records), "batch_id": batch_id}

    @app.get("/api/progress")
    def progress() -> dict:
        with state._lock:
            annotators_out = {}
            for annotator_id, session in sorted(state.sessions.items()):
                total = sum(b.size for b in session.batches)
                completed = sum(
                    b.size for b in session.batches if b.batch_id in session.submitted
                )
                annotators_out[annotator_id] = {
                    "total_snippets": total,
                    "completed_snippets": completed,
                    "batches_total": len(session.batches),
                    "batches_submitted": len(session.submitted),
                }
            return {"annotators": annotators_out, "stored_records": state.store.count()}

    return app
