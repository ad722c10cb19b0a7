"""HTTP session for reporting pipeline health to a stats gateway.

One ClientSession wraps one gateway base URL plus optional pipeline and
model defaults. Transport failures are retried with exponential backoff;
HTTP error responses are never retried, so a rejected request surfaces the
gateway's own explanation immediately. Retried writes can therefore reach
the gateway more than once: stat and alert submissions are not idempotent
and may produce duplicate records when a response is lost in transit.

Sessions are not thread-safe; give each worker thread its own.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Optional
from urllib.parse import urlsplit

import requests

from .wire import batch_doc, tabularize

DEFAULT_TIMEOUT = 10.0


class ClientError(RuntimeError):
    """The gateway rejected a request or returned an unusable response."""

    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class TransportError(ClientError):
    """The gateway could not be reached within the configured retries."""


@dataclass(frozen=True)
class RetryPolicy:
    """How hard to try when the gateway is unreachable."""

    max_attempts: int = 3
    backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.backoff < 0:
            raise ValueError("backoff must be non-negative")


def _check_url(base_url: str) -> str:
    parts = urlsplit(base_url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError(f"base_url must be an http(s) URL, got {base_url!r}")
    return base_url.rstrip("/")


def _to_millis(when: Any) -> int:
    if isinstance(when, datetime):
        return int(when.timestamp() * 1000)
    return int(when)


def _from_millis(ms: int) -> datetime:
    return datetime.fromtimestamp(ms / 1000, tz=timezone.utc)


class ClientSession:
    """Talks to one gateway on behalf of one reporting pipeline."""

    def __init__(
        self,
        base_url: str,
        pipeline_id: Optional[str] = None,
        model_id: Optional[str] = None,
        timeout: float = DEFAULT_TIMEOUT,
        retry: RetryPolicy = RetryPolicy(),
    ):
        self.base_url = _check_url(base_url)
        self.pipeline_id = pipeline_id
        self.model_id = model_id
        self.timeout = timeout
        self.retry = retry
        self._http = requests.Session()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ClientSession":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    def _request(
        self,
        method: str,
        path: str,
        body: Optional[dict[str, Any]] = None,
        params: Optional[dict[str, Any]] = None,
    ) -> dict[str, Any]:
        url = self.base_url + path
        attempts = self.retry.max_attempts
        for attempt in range(attempts):
            try:
                resp = self._http.request(
                    method, url, json=body, params=params, timeout=self.timeout
                )
            except requests.RequestException as exc:
                if attempt + 1 == attempts:
                    raise TransportError(
                        f"{method} {url} failed after {attempts} attempt(s): {exc}"
                    ) from exc
                time.sleep(self.retry.backoff * 2**attempt)
                continue
            if resp.status_code >= 400:
                raise ClientError(_error_detail(resp), status=resp.status_code)
            try:
                return resp.json()
            except ValueError as exc:
                raise ClientError(
                    f"{method} {url} returned a non-JSON body"
                ) from exc
        raise AssertionError("unreachable")  # loop always returns or raises

    def ping(self) -> bool:
        """True when the gateway answers its liveness endpoint."""
        try:
            return self._request("GET", "/api/ping").get("status") == "ok"
        except ClientError:
            return False

    def set_stat(
        self, name: str, value: Any = None, category: str = "value"
    ) -> int:
        """Record one pipeline statistic; returns its sequence number."""
        body: dict[str, Any] = {"name": name, "payload": value, "category": category}
        if self.pipeline_id is not None:
            body["pipeline_id"] = self.pipeline_id
        return int(self._request("POST", "/api/stats", body=body)["seq"])

    def set_data_distribution_stat(
        self,
        data: Any,
        model_id: Optional[str] = None,
        role: Optional[str] = None,
        batch_id: str = "",
        timestamp: Optional[int] = None,
    ) -> dict[str, Any]:
        """Report a data distribution as training or inference traffic.

        With role=None the gateway is probed: if the model already has a
        training profile the table is counted locally against that profile's
        bin layout and shipped as inference statistics, returning the health
        report; otherwise the raw table is shipped to become the training
        profile, returning the registration acknowledgement. Pass an explicit
        role to skip the guess. Inference against an unprofiled model fails
        with the gateway's explanation.
        """
        model = model_id or self.model_id
        if not model:
            raise ValueError("no model_id given and the session has no default")
        if role not in (None, "training", "inference"):
            raise ValueError(f"role must be 'training' or 'inference', got {role!r}")
        columns, rows = tabularize(data)
        profile = None
        if role != "training":
            profile = self._fetch_profile(model, required=role == "inference")
        if profile is None:
            body: dict[str, Any] = {"columns": columns, "rows": rows, "role": "training"}
            if self.pipeline_id is not None:
                body["pipeline_id"] = self.pipeline_id
            return self._request("POST", f"/api/distributions/{model}", body=body)
        doc = batch_doc(profile, columns, rows, batch_id=batch_id, timestamp=timestamp)
        resp = self._request("POST", f"/api/distributions/{model}", body=doc)
        report = resp.get("report")
        if not isinstance(report, dict):
            raise ClientError("gateway response carried no health report")
        return report

    def _fetch_profile(self, model: str, required: bool) -> Optional[dict[str, Any]]:
        try:
            resp = self._request("GET", f"/api/distributions/{model}")
        except ClientError as exc:
            if exc.status == 404 and not required:
                return None
            raise
        profile = resp.get("profile")
        if not isinstance(profile, dict):
            raise ClientError(f"gateway returned no profile document for {model!r}")
        return profile

    def health_alert(
        self,
        title: str,
        description: str = "",
        data: Any = None,
        severity: str = "warning",
        model_id: Optional[str] = None,
        batch_id: Optional[str] = None,
    ) -> int:
        """File an operator-visible alert; returns its sequence number."""
        if not isinstance(title, str) or not title:
            raise ValueError("alert title must be a non-empty string")
        body: dict[str, Any] = {
            "title": title,
            "description": description,
            "severity": severity,
            "payload": data,
        }
        if model_id or self.model_id:
            body["model_id"] = model_id or self.model_id
        if batch_id is not None:
            body["batch_id"] = batch_id
        return int(self._request("POST", "/api/alerts", body=body)["seq"])

    def get_alerts(self, since: Any = 0) -> list[dict[str, Any]]:
        """All alert records stamped at or after `since` (ms or datetime)."""
        resp = self._request(
            "GET", "/api/alerts", params={"since": _to_millis(since)}
        )
        return list(resp["alerts"])

    def get_models_by_time(
        self, start: Any = None, end: Any = None
    ) -> list[dict[str, Any]]:
        """Models registered inside [start, end], oldest first.

        Bounds accept epoch milliseconds or datetime objects; omitted bounds
        are unbounded. Each record's created_at comes back as a UTC datetime.
        """
        params: dict[str, Any] = {}
        if start is not None:
            params["start"] = _to_millis(start)
        if end is not None:
            params["end"] = _to_millis(end)
        resp = self._request("GET", "/api/models", params=params)
        return [_with_created_datetime(m) for m in resp["models"]]

    def current_model(self) -> Optional[dict[str, Any]]:
        """The model currently associated with this pipeline, if any."""
        if not self.pipeline_id:
            raise ValueError("the session has no pipeline_id")
        try:
            record = self._request(
                "GET", "/api/models/current", params={"pipeline": self.pipeline_id}
            )
        except ClientError as exc:
            if exc.status == 404:
                return None
            raise
        return _with_created_datetime(record)


def _with_created_datetime(record: dict[str, Any]) -> dict[str, Any]:
    out = dict(record)
    if isinstance(out.get("created_at"), (int, float)):
        out["created_at"] = _from_millis(int(out["created_at"]))
    return out


def _error_detail(resp: requests.Response) -> str:
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, str) and detail:
        return detail
    return f"HTTP {resp.status_code}: {resp.text[:200]}"
