"""HTTP rating service: sequential blinded tasks, durable submissions, export.

Raters are blind to provenance: no task or audio response ever carries the
model that produced an item; the export CSV re-attaches ``model_id`` for
analysis. Authentication is a static per-study bearer token (header or
``?token=`` query parameter), empty token meaning open access.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, PlainTextResponse

from ..errors import NotFound, ValidationError
from ..ratings import RatingRecord, records_to_csv
from .store import METRIC_SCHEMAS, RatingStore, Study, load_study


class StudyRuntime:
    def __init__(self, study: Study, log_name: str = "ratings.log.jsonl"):
        self.study = study
        log_path = (study.root or Path(".")) / log_name
        self.store = RatingStore(study, log_path)
        self._model_by_item = {item.item_id: item.model_id for item in study.items}

    def task_payload(self, rater_id: str) -> dict:
        order = self.study.rater_order(rater_id)
        rated = self.store.rated_count(rater_id)
        total = len(order)
        for item in order:
            if self.store.rating_for(item.item_id, rater_id) is None:
                payload = {"target_text": item.target_text}
                if item.english_text:
                    payload["english_text"] = item.english_text
                if item.audio:
                    payload["audio_url"] = f"/audio/{item.item_id}"
                return {
                    "done": False,
                    "item_id": item.item_id,
                    "payload": payload,
                    "metrics_schema": self.study.metrics_schema,
                    "metrics": METRIC_SCHEMAS[self.study.metrics_schema],
                    "progress": {"rated": rated, "total": total},
                }
        return {"done": True, "progress": {"rated": rated, "total": total}}


def create_app(
    study_dirs: list[str | Path], log_name: str = "ratings.log.jsonl"
) -> FastAPI:
    app = FastAPI(title="voxsynth review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    runtimes: dict[str, StudyRuntime] = {}
    audio_index: dict[str, Path] = {}
    for study_dir in study_dirs:
        study = load_study(study_dir)
        runtimes[study.study_id] = StudyRuntime(study, log_name=log_name)
        for item in study.items:
            if item.audio:
                audio_index[item.item_id] = Path(study_dir) / item.audio

    def runtime_for(study_id: str) -> StudyRuntime:
        runtime = runtimes.get(study_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail=f"no study {study_id!r}")
        return runtime

    def check_token(runtime: StudyRuntime, request: Request) -> None:
        token = runtime.study.token
        if not token:
            return
        header = request.headers.get("authorization", "")
        query = request.query_params.get("token", "")
        if header == f"Bearer {token}" or query == token:
            return
        raise HTTPException(status_code=401, detail="bad or missing study token")

    @app.get("/studies/{study_id}/next")
    def next_task(study_id: str, request: Request, rater: str = Query(...)):
        runtime = runtime_for(study_id)
        check_token(runtime, request)
        try:
            return runtime.task_payload(rater)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/studies/{study_id}/ratings")
    async def submit_rating(study_id: str, request: Request):
        runtime = runtime_for(study_id)
        check_token(runtime, request)
        body = await request.json()
        body.pop("model_id", None)  # raters are blind; provenance is server-side
        known = set(RatingRecord.__dataclass_fields__)
        unknown = set(body) - known
        if unknown:
            raise HTTPException(
                status_code=422,
                detail={"error": "unknown fields", "fields": sorted(unknown)},
            )
        record = RatingRecord(
            **{**body, "model_id": runtime._model_by_item.get(body.get("item_id", ""), "")}
        )
        record.modality = runtime.study.modality
        try:
            audit = runtime.store.submit(record)
        except ValidationError as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": str(exc), "fields": exc.fields},
            ) from exc
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"ok": True, "audit": audit}

    @app.get("/studies/{study_id}/export.csv")
    def export_csv(study_id: str, request: Request):
        runtime = runtime_for(study_id)
        check_token(runtime, request)
        csv_text = records_to_csv(runtime.store.records())
        return PlainTextResponse(csv_text, media_type="text/csv; charset=utf-8")

    @app.get("/studies/{study_id}/progress")
    def progress(study_id: str, request: Request):
        runtime = runtime_for(study_id)
        check_token(runtime, request)
        return {
            "study_id": study_id,
            "total_items": len(runtime.study.items),
            "raters": {
                rater: runtime.store.rated_count(rater)
                for rater in runtime.study.raters
            },
        }

    @app.get("/audio/{item_id}")
    def audio(item_id: str):
        path = audio_index.get(item_id)
        if path is None or not path.exists():
            raise HTTPException(status_code=404, detail=f"no audio for {item_id!r}")
        return FileResponse(path, media_type="audio/wav")

    return app
