"""JSON API behind the explorer UI.

All state derives from a directory written by `process` plus an append-only
annotations CSV next to it.  Handlers read one immutable Snapshot grabbed at
entry, so a retrain mid-request can never show half-updated scores: retrain
builds a complete new snapshot and swaps it in with a single attribute
assignment.  Retrains are single-flight (a second concurrent request gets
409) and bump scores_version, which every score-bearing response carries.

Annotations are fsynced to disk before the 204 goes out; they survive a
process restart and are the training input for retrain.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from scipy.stats import rankdata

from cascade_spotter import tables
from cascade_spotter.labeler import TreeEnsembleModel, fine_tune, load_annotations

log = logging.getLogger(__name__)

DENSITY_BINS = 50
ACTIVE_MODEL = "model_active.json"


@dataclass(frozen=True)
class Snapshot:
    """One immutable view of the dataset and its scores."""

    table: tables.UserTable
    user_row: dict[str, int]
    cascades: dict[str, tables.CascadeTable]
    model: Optional[TreeEnsembleModel]
    botness: np.ndarray
    percentile: np.ndarray
    top_hashtag: list[str]
    density: list[list[int]]
    scores_version: int


def build_snapshot(
    table: tables.UserTable,
    cascades: dict[str, tables.CascadeTable],
    model: Optional[TreeEnsembleModel],
    scores_version: int,
) -> Snapshot:
    n = len(table.user_ids)
    if model is not None and n:
        botness = model.predict(table.X, feature_names=table.feature_names)
    elif table.botness is not None:
        botness = table.botness
    else:
        botness = np.full(n, 0.5)  # no model, no stored scores: coin-flip prior

    if n:
        percentile = rankdata(table.influence, method="average") / n * 100.0
    else:
        percentile = np.zeros(0)

    counts, _, _ = np.histogram2d(
        botness, percentile, bins=DENSITY_BINS, range=[[0.0, 1.0], [0.0, 100.0]]
    )
    top = []
    for row in table.display:
        decoded = tables.decode_hashtags(row.get("hashtags_used", ""))
        top.append(decoded[0][0] if decoded else "")

    return Snapshot(
        table=table,
        user_row={uid: i for i, uid in enumerate(table.user_ids)},
        cascades=cascades,
        model=model,
        botness=botness,
        percentile=percentile,
        top_hashtag=top,
        density=counts.astype(int).tolist(),
        scores_version=scores_version,
    )


class AnnotationIn(BaseModel):
    user_id: str
    label: float = Field(ge=0.0, le=1.0)


class RetrainIn(BaseModel):
    rounds: int = Field(default=10, ge=1)
    seed: int = 0


class ExplorerState:
    def __init__(self, snapshot: Snapshot, data_dir: Path):
        self.snapshot = snapshot  # swapped atomically, read once per request
        self.data_dir = data_dir
        self.annotations_path = data_dir / tables.ANNOTATIONS_CSV
        self.write_lock = threading.Lock()
        self.retrain_lock = threading.Lock()

    def append_annotation(self, user_id: str, screen_name: str, label: float) -> None:
        with self.write_lock:
            new_file = not self.annotations_path.exists()
            with open(self.annotations_path, "a", encoding="utf-8", newline="") as fh:
                if new_file:
                    fh.write("user_id,screen_name,label\r\n")
                fh.write(f"{user_id},{screen_name},{tables.format_number(label)}\r\n")
                fh.flush()
                os.fsync(fh.fileno())

    def labeled_annotations(self) -> dict[str, float]:
        """user_id -> label, latest row wins."""
        if not self.annotations_path.exists():
            return {}
        out: dict[str, float] = {}
        for rec in load_annotations(self.annotations_path):
            if rec.label is not None:
                out[rec.user_id] = rec.label
        return out


def _density_doc(snap: Snapshot) -> dict:
    return {
        "x_bins": DENSITY_BINS,
        "y_bins": DENSITY_BINS,
        "x_range": [0.0, 1.0],
        "y_range": [0.0, 100.0],
        "counts": snap.density,
    }


def _point(snap: Snapshot, i: int) -> dict:
    return {
        "user_id": snap.table.user_ids[i],
        "screen_name": snap.table.display[i].get("screen_name", ""),
        "botness": float(snap.botness[i]),
        "influence_percentile": float(snap.percentile[i]),
        "top_hashtag": snap.top_hashtag[i],
    }


def create_app(data_dir, model_path=None, ui_dir=None) -> FastAPI:
    data_dir = Path(data_dir)
    table = tables.read_users_table(data_dir / tables.USERS_CSV)
    cascades = tables.read_cascades_table(data_dir / tables.CASCADES_CSV)
    model = TreeEnsembleModel.load(model_path) if model_path else None
    state = ExplorerState(build_snapshot(table, cascades, model, 1), data_dir)

    app = FastAPI(title="cascade-spotter explorer", version="1")
    app.state.explorer = state  # handy for tests

    @app.get("/api/scatter")
    def scatter(n: int = 1000, seed: int = 0):
        if n <= 0:
            raise HTTPException(status_code=400, detail="n must be positive")
        snap = state.snapshot
        total = len(snap.table.user_ids)
        k = min(n, total)
        idx = np.sort(np.random.default_rng(seed).choice(total, size=k, replace=False)) \
            if total else np.zeros(0, dtype=int)
        return {
            "points": [_point(snap, int(i)) for i in idx],
            "density": _density_doc(snap),
            "total_users": total,
            "scores_version": snap.scores_version,
        }

    @app.get("/api/users/{user_id}")
    def user_detail(user_id: str):
        snap = state.snapshot
        i = snap.user_row.get(user_id)
        if i is None:
            raise HTTPException(status_code=404, detail=f"unknown user {user_id}")
        display = snap.table.display[i]
        fidx = {n: j for j, n in enumerate(snap.table.feature_names)}
        x = snap.table.X[i]
        return {
            "user_id": user_id,
            "screen_name": display.get("screen_name", ""),
            "location": display.get("location", ""),
            "profile_image_url": display.get("profile_image_url", ""),
            "description": display.get("description", ""),
            "followers_count": int(x[fidx["followers_count"]]),
            "statuses_count": int(x[fidx["statuses_count"]]),
            "tweets_in_dump": int(display.get("tweets_in_dump", "0") or 0),
            "hashtags": [
                {"tag": tag, "count": count}
                for tag, count in tables.decode_hashtags(display.get("hashtags_used", ""))
            ],
            "botness": float(snap.botness[i]),
            "influence": float(snap.table.influence[i]),
            "influence_percentile": float(snap.percentile[i]),
            "cascade_ids": (display.get("cascade_ids", "") or "").split(),
            "scores_version": snap.scores_version,
        }

    @app.get("/api/cascades/{cascade_id}")
    def cascade_detail(cascade_id: str):
        snap = state.snapshot
        cascade = snap.cascades.get(cascade_id)
        if cascade is None:
            raise HTTPException(status_code=404, detail=f"unknown cascade {cascade_id}")
        events = []
        for k, e in enumerate(cascade.events):
            row = snap.user_row.get(e.user_id)
            events.append({
                "index": k,
                "tweet_id": e.tweet_id,
                "user_id": e.user_id,
                "rel_time": e.rel_time,
                "mark": e.mark,
                "expected_parent": e.expected_parent,
                "botness": float(snap.botness[row]) if row is not None else None,
            })
        return {
            "cascade_id": cascade_id,
            "root_text": cascade.root_text,
            "events": events,
            "scores_version": snap.scores_version,
        }

    @app.post("/api/annotations", status_code=204)
    def annotate(body: AnnotationIn):
        snap = state.snapshot
        i = snap.user_row.get(body.user_id)
        if i is None:
            raise HTTPException(status_code=404, detail=f"unknown user {body.user_id}")
        screen_name = snap.table.display[i].get("screen_name", "")
        state.append_annotation(body.user_id, screen_name, body.label)
        return Response(status_code=204)

    @app.post("/api/retrain")
    def retrain(body: RetrainIn):
        if not state.retrain_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="retrain already in flight")
        try:
            snap = state.snapshot
            if snap.model is None:
                raise HTTPException(status_code=409, detail="no model loaded")
            labels = state.labeled_annotations()
            rows = [(snap.user_row[u], y) for u, y in labels.items() if u in snap.user_row]
            if not rows:
                raise HTTPException(status_code=409, detail="no annotations to train on")
            idx = [r for r, _ in rows]
            y = np.array([v for _, v in rows])
            new_model = fine_tune(
                snap.model, snap.table.X[idx], y,
                rounds=body.rounds, seed=body.seed,
            )
            new_snap = build_snapshot(
                snap.table, snap.cascades, new_model, snap.scores_version + 1
            )
            tmp = state.data_dir / (ACTIVE_MODEL + ".tmp")
            tmp.write_text(new_model.to_json(), encoding="utf-8")
            os.replace(tmp, state.data_dir / ACTIVE_MODEL)
            state.snapshot = new_snap
            log.info("retrained on %d annotations, scores_version %d",
                     len(rows), new_snap.scores_version)
            return {"new_scores_version": new_snap.scores_version}
        finally:
            state.retrain_lock.release()

    @app.get("/health")
    def health():
        snap = state.snapshot
        return {
            "status": "ok",
            "users": len(snap.table.user_ids),
            "cascades": len(snap.cascades),
            "model": snap.model is not None,
            "scores_version": snap.scores_version,
        }

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<!doctype html><title>cascade-spotter</title>"
                "<h1>cascade-spotter explorer API</h1>"
                "<p>No UI build supplied. Endpoints: /api/scatter, "
                "/api/users/{id}, /api/cascades/{id}, /api/annotations, "
                "/api/retrain, /health</p>"
            )

    return app
