"""HTTP review service for human filtering and rating of generated QA items.

All state derives from replaying a single append-only log; an acknowledged
decision is fsynced before the response leaves the server, so a crash between
append and ack never loses it.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .corpus import UNANSWERABLE, QAItem, VideoRef, write_jsonl
from .errors import NothingPassed, RubricMismatch, ScoreOutOfRange, UnknownItem

PENDING = "pending"
PASS = "pass"
FILTERED = "filtered"


@dataclass
class ReviewItem:
    item: QAItem
    original_description: str
    frames: tuple[str, ...]
    status: str = PENDING

    def to_dict(self) -> dict[str, Any]:
        altered = None
        if self.item.provenance is not None:
            altered = self.item.provenance.to_dict()
        return {
            "item": self.item.to_dict(),
            "altered": altered,
            "original_description": self.original_description,
            "frames": list(self.frames),
            "status": self.status,
        }


@dataclass(frozen=True)
class Decision:
    item_id: str
    verdict: str
    annotator: str
    timestamp: str
    note: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in (PASS, FILTERED):
            raise ValueError(f"verdict must be pass or filtered, got {self.verdict!r}")


@dataclass(frozen=True)
class Rating:
    item_id: str
    rubric: str  # answerable | unanswerable
    score: int
    annotator: str
    timestamp: str


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ReviewStore:
    """Queue plus event-sourced decision/rating state over one log file."""

    def __init__(self, queue: list[ReviewItem], log_path: str | Path):
        self.queue = queue
        self.by_id = {ri.item.id: ri for ri in queue}
        self.log_path = Path(log_path)
        # item_id -> annotator -> latest verdict
        self.decisions: dict[str, dict[str, str]] = {}
        self.ratings: list[Rating] = []
        self.composed: list[QAItem] = []
        self._write_lock = threading.Lock()
        self._replay()

    @classmethod
    def load(cls, queue_path: str | Path, log_path: str | Path) -> "ReviewStore":
        queue = []
        with open(queue_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                queue.append(
                    ReviewItem(
                        item=QAItem.from_dict(d["item"]),
                        original_description=d.get("original_description", ""),
                        frames=tuple(d.get("frames", ())),
                    )
                )
        return cls(queue, log_path)

    # --- event log -----------------------------------------------------------

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply(json.loads(line), replay=True)
        self._recompute_statuses()

    def _append(self, event: dict[str, Any]) -> None:
        with self._write_lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def _apply(self, event: dict[str, Any], replay: bool = False) -> None:
        etype = event.get("type")
        if etype == "decision":
            self.decisions.setdefault(event["item_id"], {})[event["annotator"]] = event["verdict"]
        elif etype == "rating":
            self.ratings.append(
                Rating(
                    item_id=event["item_id"],
                    rubric=event["rubric"],
                    score=event["score"],
                    annotator=event["annotator"],
                    timestamp=event["timestamp"],
                )
            )
        elif etype == "compose":
            self.composed.append(QAItem.from_dict(event["item"]))

    def _recompute_statuses(self) -> None:
        for ri in self.queue:
            ri.status = self._status_of(ri.item.id)

    def _status_of(self, item_id: str) -> str:
        verdicts = list(self.decisions.get(item_id, {}).values())
        if not verdicts:
            return PENDING
        passes = verdicts.count(PASS)
        fails = verdicts.count(FILTERED)
        # Majority vote; ties filter conservatively.
        return PASS if passes > fails else FILTERED

    # --- operations ----------------------------------------------------------

    def next_item(self, annotator: str) -> ReviewItem | None:
        """Oldest queued item this annotator has not decided yet."""
        for ri in self.queue:
            if annotator not in self.decisions.get(ri.item.id, {}):
                return ri
        return None

    def submit_decision(self, d: Decision) -> dict[str, Any]:
        if d.item_id not in self.by_id:
            raise UnknownItem(d.item_id)
        event = {
            "type": "decision",
            "item_id": d.item_id,
            "verdict": d.verdict,
            "annotator": d.annotator,
            "timestamp": d.timestamp,
            "note": d.note,
        }
        self._append(event)
        self._apply(event)
        self.by_id[d.item_id].status = self._status_of(d.item_id)
        return self.progress()

    def submit_rating(self, r: Rating) -> dict[str, Any]:
        if r.item_id not in self.by_id:
            raise UnknownItem(r.item_id)
        if not 0 <= r.score <= 5:
            raise ScoreOutOfRange(f"score {r.score} outside [0, 5]")
        item = self.by_id[r.item_id].item
        expected = "unanswerable" if item.k == UNANSWERABLE else "answerable"
        if r.rubric != expected:
            raise RubricMismatch(f"item {r.item_id} needs the {expected} rubric")
        event = {
            "type": "rating",
            "item_id": r.item_id,
            "rubric": r.rubric,
            "score": r.score,
            "annotator": r.annotator,
            "timestamp": r.timestamp,
        }
        self._append(event)
        self._apply(event)
        return self.progress()

    def submit_compose(self, item: QAItem, annotator: str) -> None:
        """Store an annotator-authored unanswerable item (out-of-distribution workflow)."""
        if item.k != UNANSWERABLE:
            raise ValueError("composed items must be unanswerable")
        event = {
            "type": "compose",
            "item": item.to_dict(),
            "annotator": annotator,
            "timestamp": _now(),
        }
        self._append(event)
        self._apply(event)

    def progress(self) -> dict[str, Any]:
        statuses = [ri.status for ri in self.queue]
        means: dict[str, float] = {}
        totals: dict[str, list[int]] = {}
        for r in self.ratings:
            totals.setdefault(r.item_id, []).append(r.score)
        for item_id, scores in totals.items():
            means[item_id] = sum(scores) / len(scores)
        return {
            "total": len(self.queue),
            "pending": statuses.count(PENDING),
            "pass": statuses.count(PASS),
            "filtered": statuses.count(FILTERED),
            "decisions": sum(len(v) for v in self.decisions.values()),
            "ratings": len(self.ratings),
            "rating_means": means,
        }

    def export_curated(self, out_path: str | Path) -> int:
        passed = [ri.item for ri in self.queue if ri.status == PASS]
        if not passed:
            raise NothingPassed("no item has a pass status")
        return write_jsonl((i.to_dict() for i in passed), out_path)


# --- HTTP surface -------------------------------------------------------------


def create_app(store: ReviewStore, ui_dir: str | Path | None = None):
    from starlette.applications import Starlette
    from starlette.responses import FileResponse, JSONResponse, RedirectResponse
    from starlette.routing import Mount, Route
    from starlette.staticfiles import StaticFiles

    def error(status: int, detail: str) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=status)

    async def body_of(request) -> dict[str, Any] | JSONResponse:
        try:
            data = await request.json()
        except Exception:
            return error(400, "body must be a JSON object")
        if not isinstance(data, dict):
            return error(400, "body must be a JSON object")
        return data

    async def queue_next(request):
        annotator = request.query_params.get("annotator", "")
        ri = store.next_item(annotator)
        payload = {"item": ri.to_dict() if ri else None, "progress": store.progress()}
        return JSONResponse(payload)

    async def post_decision(request):
        data = await body_of(request)
        if isinstance(data, JSONResponse):
            return data
        try:
            d = Decision(
                item_id=data["item_id"],
                verdict=data["verdict"],
                annotator=data["annotator"],
                timestamp=_now(),
                note=data.get("note"),
            )
        except (KeyError, ValueError) as e:
            return error(400, str(e))
        try:
            progress = store.submit_decision(d)
        except UnknownItem as e:
            return error(404, str(e))
        return JSONResponse({"ok": True, "item_id": d.item_id, "progress": progress})

    async def post_rating(request):
        data = await body_of(request)
        if isinstance(data, JSONResponse):
            return data
        try:
            r = Rating(
                item_id=data["item_id"],
                rubric=data["rubric"],
                score=int(data["score"]),
                annotator=data["annotator"],
                timestamp=_now(),
            )
        except (KeyError, ValueError) as e:
            return error(400, str(e))
        try:
            progress = store.submit_rating(r)
        except UnknownItem as e:
            return error(404, str(e))
        except (RubricMismatch, ScoreOutOfRange) as e:
            return error(400, str(e))
        return JSONResponse({"ok": True, "item_id": r.item_id, "progress": progress})

    async def post_compose(request):
        data = await body_of(request)
        if isinstance(data, JSONResponse):
            return data
        try:
            item = QAItem(
                id=f"compose-{len(store.composed)}-{data['video_id']}",
                video=VideoRef(
                    id=data["video_id"], source_dataset=data.get("source_dataset", "ood")
                ),
                question=data["question"],
                gt_answer=data["gt_answer"],
                k=UNANSWERABLE,
                unanswerability_kind=data["kind"],
            )
            store.submit_compose(item, data["annotator"])
        except (KeyError, ValueError) as e:
            return error(400, str(e))
        return JSONResponse({"ok": True, "item_id": item.id})

    async def get_item(request):
        item_id = request.path_params["item_id"]
        ri = store.by_id.get(item_id)
        if ri is None:
            return error(404, f"unknown item {item_id!r}")
        return JSONResponse(ri.to_dict())

    async def get_progress(request):
        return JSONResponse(store.progress())

    async def get_frame(request):
        video_id = request.path_params["video_id"]
        n = request.path_params["n"]
        for ri in store.queue:
            if ri.item.video.id == video_id:
                uris = ri.frames or ri.item.video.frame_uris
                if 0 <= n < len(uris):
                    uri = uris[n]
                    if uri.startswith(("http://", "https://")):
                        return RedirectResponse(uri)
                    if Path(uri).exists():
                        return FileResponse(uri)
                    return error(404, "frame file missing")
        return error(404, "no such frame")

    routes = [
        Route("/api/queue/next", queue_next, methods=["GET"]),
        Route("/api/decisions", post_decision, methods=["POST"]),
        Route("/api/ratings", post_rating, methods=["POST"]),
        Route("/api/compose", post_compose, methods=["POST"]),
        Route("/api/items/{item_id}", get_item, methods=["GET"]),
        Route("/api/progress", get_progress, methods=["GET"]),
        Route("/api/frames/{video_id}/{n:int}", get_frame, methods=["GET"]),
    ]
    if ui_dir and Path(ui_dir).exists():
        routes.append(Mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui"))
    return Starlette(routes=routes)


def serve(
    queue_path: str | Path,
    log_path: str | Path,
    port: int = 8010,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> None:
    import uvicorn

    store = ReviewStore.load(queue_path, log_path)
    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
