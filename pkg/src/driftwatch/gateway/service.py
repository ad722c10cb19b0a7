"""HTTP gateway: pipelines report stats and distributions, operators
read back alerts, models, and health reports.

All state is folded from the event log, so a restart replays to exactly
the pre-shutdown state. Incoming inference stats are scored against the
model's registered profile under its active alert policy; the resulting
report (and any alert) is appended before the request is acked.

Timestamps are integer milliseconds since the epoch, server-assigned
and non-decreasing unless the client supplies one. Infinity travels as
the JSON string "inf" everywhere.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse

from ..metrics import health_score_from_doc
from ..monitor import (
    AlertPolicy,
    ScoreHistory,
    alert_to_doc,
    auto_threshold,
    evaluate_batch,
    policy_from_doc,
    policy_to_doc,
    report_to_doc,
)
from ..profile import (
    InferenceBatchStats,
    TrainingProfile,
    batch_frequencies,
    batch_to_doc,
    batch_from_doc,
    build_profile,
    now_ms,
    profile_from_doc,
    profile_to_doc,
)
from ..schema import DEFAULT_N_BINS, infer_schema
from ..serialize import from_jsonable, to_jsonable
from ..tables import DataTable, parse_cell
from .store import EventLog

STAT_CATEGORIES = ("time_series", "value", "data_distribution")

DEFAULT_POLICY = AlertPolicy(metric="similarity", threshold=0.8)

MAX_TIME = 2**62


class ApiError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


class GatewayState:
    """Event-sourced gateway state; every mutation goes through the log."""

    def __init__(self, log: EventLog):
        self.log = log
        self._lock = threading.RLock()
        self._last_ts = 0
        self.stats: list[dict[str, Any]] = []
        self.profiles: dict[str, TrainingProfile] = {}
        self.profile_docs: dict[str, dict[str, Any]] = {}
        self.policies: dict[str, AlertPolicy] = {}
        self.models: dict[str, dict[str, Any]] = {}
        self.associations: dict[str, str] = {}
        self.reports: dict[str, list[dict[str, Any]]] = {}
        self.alerts: list[dict[str, Any]] = []
        self.histories: dict[str, ScoreHistory] = {}
        for event in log.events:
            self._fold(event.seq, event.ts, event.kind, event.data)
            self._last_ts = max(self._last_ts, event.ts)

    # -- event folding ------------------------------------------------

    def _fold(self, seq: int, ts: int, kind: str, data: dict[str, Any]) -> None:
        if kind == "stat":
            self.stats.append({"seq": seq, **data})
        elif kind == "profile":
            model_id = data["model_id"]
            doc = data["profile"]
            self.profile_docs[model_id] = doc
            self.profiles[model_id] = profile_from_doc(doc)
            record = self.models.get(model_id)
            created_at = record["created_at"] if record else ts
            self.models[model_id] = {
                "model_id": model_id,
                "created_at": created_at,
                "n_train": doc["n_train"],
                "features": [f["name"] for f in doc["features"]],
                "annotations": data.get("annotations") or {},
                "seq": seq,
            }
            if data.get("pipeline_id"):
                self.associations[data["pipeline_id"]] = model_id
        elif kind == "policy":
            self.policies[data["model_id"]] = policy_from_doc(data["policy"])
        elif kind == "batch":
            if data.get("pipeline_id"):
                self.associations[data["pipeline_id"]] = data["batch"]["model_id"]
        elif kind == "report":
            model_id = data["model_id"]
            doc = data["report"]
            self.reports.setdefault(model_id, []).append(
                {"seq": seq, "timestamp": ts, "report": doc}
            )
            history = self.histories.setdefault(model_id, ScoreHistory(model_id))
            history.append(doc["batch_id"], ts, health_score_from_doc(doc["score"]))
        elif kind == "alert":
            self.alerts.append({"seq": seq, "timestamp": ts, "record": data["record"]})
        # unknown kinds are tolerated: forward-compatible replay

    def _append(self, kind: str, data: dict[str, Any], ts: Optional[int] = None) -> tuple[int, int]:
        if ts is None:
            ts = max(now_ms(), self._last_ts)
        self._last_ts = max(self._last_ts, ts)
        event = self.log.append(kind, data, ts)
        self._fold(event.seq, event.ts, event.kind, event.data)
        return event.seq, event.ts

    def policy_for(self, model_id: str) -> AlertPolicy:
        return self.policies.get(model_id, DEFAULT_POLICY)

    # -- handlers -------------------------------------------------------

    def set_stat(self, body: dict[str, Any]) -> dict[str, Any]:
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ApiError(400, "stat needs a non-empty name")
        category = body.get("category", "value")
        if category not in STAT_CATEGORIES:
            raise ApiError(400, f"unknown category {category!r}")
        with self._lock:
            ts = body.get("timestamp")
            record = {
                "pipeline_id": body.get("pipeline_id"),
                "name": name,
                "category": category,
                "payload": body.get("payload"),
                "timestamp": int(ts) if ts is not None else max(now_ms(), self._last_ts),
            }
            seq, env_ts = self._append("stat", record, ts=record["timestamp"])
            return {"seq": seq, "timestamp": env_ts}

    def get_stats(
        self,
        name: Optional[str],
        pipeline: Optional[str],
        start: int,
        end: int,
    ) -> dict[str, Any]:
        with self._lock:
            items = [
                s
                for s in self.stats
                if (name is None or s["name"] == name)
                and (pipeline is None or s["pipeline_id"] == pipeline)
                and start <= s["timestamp"] <= end
            ]
            return {"stats": items}

    def set_distribution(self, model_id: str, body: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            if "columns" in body and "rows" in body:
                return self._ingest_table(model_id, body)
            if "n_train" in body:
                return self._register_profile(model_id, body, body)
            if "n_infer" in body:
                return self._score_batch(model_id, self._parse_batch(model_id, body))
            raise ApiError(
                400, "body is not a training profile, inference stats, or raw table"
            )

    def _register_profile(
        self, model_id: str, doc: dict[str, Any], body: dict[str, Any]
    ) -> dict[str, Any]:
        if doc.get("model_id") not in (None, model_id):
            raise ApiError(
                400, f"payload model_id {doc['model_id']!r} does not match path {model_id!r}"
            )
        try:
            profile = profile_from_doc({**doc, "model_id": model_id})
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, f"invalid training profile: {exc}") from None
        data = {
            "model_id": model_id,
            "profile": profile_to_doc(profile),
            "pipeline_id": body.get("pipeline_id"),
            "annotations": body.get("annotations"),
        }
        seq, _ = self._append("profile", data)
        if body.get("policy") is not None:
            try:
                policy = policy_from_doc(body["policy"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ApiError(400, f"invalid policy: {exc}") from None
            self._append("policy", {"model_id": model_id, "policy": policy_to_doc(policy)})
        return {"seq": seq, "model_id": model_id, "registered": True, "n_train": profile.n_train}

    def _parse_batch(self, model_id: str, doc: dict[str, Any]) -> InferenceBatchStats:
        if doc.get("model_id") not in (None, "", model_id):
            raise ApiError(
                400, f"payload model_id {doc['model_id']!r} does not match path {model_id!r}"
            )
        try:
            return batch_from_doc({**doc, "model_id": model_id})
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, f"invalid batch stats: {exc}") from None

    def _score_batch(
        self, model_id: str, batch: InferenceBatchStats, pipeline_id: Optional[str] = None
    ) -> dict[str, Any]:
        profile = self.profiles.get(model_id)
        if profile is None:
            raise ApiError(404, f"no training profile registered for model {model_id!r}")
        policy = self.policy_for(model_id)
        try:
            report = evaluate_batch(profile, batch, policy)
        except (KeyError, ValueError) as exc:
            raise ApiError(400, f"cannot score batch: {exc}") from None
        self._append(
            "batch",
            {"model_id": model_id, "batch": batch_to_doc(batch), "pipeline_id": pipeline_id},
        )
        report_doc = report_to_doc(report)
        seq, ts = self._append("report", {"model_id": model_id, "report": report_doc})
        if report.alert is not None:
            self._append("alert", {"record": alert_to_doc(report.alert)})
        history = self.histories[model_id]
        if policy.auto and policy.threshold is None and len(history) >= policy.warmup_runs:
            configured = auto_threshold(history, policy)
            self._append(
                "policy", {"model_id": model_id, "policy": policy_to_doc(configured)}
            )
        return {"seq": seq, "timestamp": ts, "report": report_doc}

    def _ingest_table(self, model_id: str, body: dict[str, Any]) -> dict[str, Any]:
        role = body.get("role")
        if role not in ("training", "inference"):
            raise ApiError(400, f"raw table needs role training or inference, got {role!r}")
        try:
            table = _table_from_body(body)
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, f"invalid table: {exc}") from None
        if role == "training":
            try:
                schemas = infer_schema(table, n_bins=int(body.get("n_bins", DEFAULT_N_BINS)))
                profile = build_profile(table, schemas, model_id)
            except ValueError as exc:
                raise ApiError(400, f"cannot profile table: {exc}") from None
            return self._register_profile(model_id, profile_to_doc(profile), body)
        profile = self.profiles.get(model_id)
        if profile is None:
            raise ApiError(404, f"no training profile registered for model {model_id!r}")
        try:
            batch = batch_frequencies(
                table,
                profile,
                batch_id=str(body.get("batch_id", "")),
                timestamp=int(body.get("timestamp", 0)),
            )
        except ValueError as exc:
            raise ApiError(400, f"cannot count batch: {exc}") from None
        return self._score_batch(model_id, batch, body.get("pipeline_id"))

    def get_distribution(self, model_id: str) -> dict[str, Any]:
        with self._lock:
            doc = self.profile_docs.get(model_id)
            if doc is None:
                raise ApiError(404, f"no training profile registered for model {model_id!r}")
            return {
                "model_id": model_id,
                "profile": doc,
                "policy": policy_to_doc(self.policy_for(model_id)),
            }

    def set_alert(self, body: dict[str, Any]) -> dict[str, Any]:
        title = body.get("title")
        if not isinstance(title, str) or not title:
            raise ApiError(400, "alert needs a non-empty title")
        severity = body.get("severity", "warning")
        if severity not in ("warning", "critical"):
            raise ApiError(400, f"unknown severity {severity!r}")
        with self._lock:
            record = {
                "title": title,
                "description": str(body.get("description", "")),
                "severity": severity,
                "payload": body.get("payload"),
                "model_id": str(body.get("model_id", "")),
                "batch_id": str(body.get("batch_id", "")),
                "timestamp": int(body["timestamp"])
                if body.get("timestamp") is not None
                else max(now_ms(), self._last_ts),
                "source": "external",
            }
            seq, ts = self._append("alert", {"record": record}, ts=record["timestamp"])
            return {"seq": seq, "timestamp": ts}

    def get_alerts(self, since: int) -> dict[str, Any]:
        with self._lock:
            return {"alerts": [a for a in self.alerts if a["timestamp"] >= since]}

    def get_models(self, start: int, end: int) -> dict[str, Any]:
        if start > end:
            raise ApiError(400, f"inverted time range: start {start} > end {end}")
        with self._lock:
            records = [
                {k: v for k, v in m.items() if k != "seq"}
                for m in sorted(self.models.values(), key=lambda m: (m["created_at"], m["seq"]))
                if start <= m["created_at"] <= end
            ]
            return {"models": records}

    def current_model(self, pipeline: str) -> dict[str, Any]:
        with self._lock:
            model_id = self.associations.get(pipeline)
            if model_id is None or model_id not in self.models:
                raise ApiError(404, f"no model associated with pipeline {pipeline!r}")
            return {k: v for k, v in self.models[model_id].items() if k != "seq"}

    def get_reports(self, model_id: str) -> dict[str, Any]:
        with self._lock:
            if model_id not in self.models:
                raise ApiError(404, f"unknown model {model_id!r}")
            return {"model_id": model_id, "reports": self.reports.get(model_id, [])}


def _table_from_body(body: dict[str, Any]) -> DataTable:
    columns = [str(c) for c in body["columns"]]
    rows = []
    for row in body["rows"]:
        cells = []
        for cell in row:
            if cell is None or isinstance(cell, (int, float)):
                cells.append(None if cell is None else float(cell))
            else:
                cells.append(parse_cell(str(cell)))
        rows.append(tuple(cells))
    return DataTable(columns=tuple(columns), rows=tuple(rows))


def create_app(store_path: str) -> FastAPI:
    log = EventLog(store_path)
    state = GatewayState(log)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        log.close()

    app = FastAPI(title="driftwatch gateway", lifespan=lifespan)
    app.state.gateway = state

    def _json(doc: dict[str, Any], status: int = 200) -> JSONResponse:
        return JSONResponse(content=to_jsonable(doc), status_code=status)

    def _run(fn, *args) -> JSONResponse:
        try:
            return _json(fn(*args))
        except ApiError as exc:
            raise HTTPException(status_code=exc.status, detail=exc.detail) from None

    @app.get("/api/ping")
    def ping() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/api/stats")
    def post_stats(body: dict[str, Any] = Body(...)) -> JSONResponse:
        return _run(state.set_stat, from_jsonable(body))

    @app.get("/api/stats")
    def list_stats(
        name: Optional[str] = None,
        pipeline: Optional[str] = None,
        start: int = 0,
        end: int = MAX_TIME,
    ) -> JSONResponse:
        return _run(state.get_stats, name, pipeline, start, end)

    @app.post("/api/distributions/{model_id}")
    def post_distribution(model_id: str, body: dict[str, Any] = Body(...)) -> JSONResponse:
        return _run(state.set_distribution, model_id, from_jsonable(body))

    @app.get("/api/distributions/{model_id}")
    def get_distribution(model_id: str) -> JSONResponse:
        return _run(state.get_distribution, model_id)

    @app.post("/api/alerts")
    def post_alert(body: dict[str, Any] = Body(...)) -> JSONResponse:
        return _run(state.set_alert, from_jsonable(body))

    @app.get("/api/alerts")
    def list_alerts(since: int = 0) -> JSONResponse:
        return _run(state.get_alerts, since)

    @app.get("/api/models")
    def list_models(start: int = 0, end: int = MAX_TIME) -> JSONResponse:
        return _run(state.get_models, start, end)

    @app.get("/api/models/current")
    def current_model(pipeline: str) -> JSONResponse:
        return _run(state.current_model, pipeline)

    @app.get("/api/health-reports/{model_id}")
    def health_reports(model_id: str) -> JSONResponse:
        return _run(state.get_reports, model_id)

    return app


def serve(store_path: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the gateway until interrupted; blocks."""
    import uvicorn

    app = create_app(store_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")
