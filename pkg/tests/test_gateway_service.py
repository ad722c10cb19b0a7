"""HTTP behavior of the stats gateway, including restart recovery."""

from __future__ import annotations

import concurrent.futures
import math

import requests

from driftwatch.metrics import score_batch
from driftwatch.monitor import AlertPolicy, evaluate_batch, report_to_doc
from driftwatch.profile import batch_frequencies, batch_to_doc, build_profile, profile_to_doc
from driftwatch.schema import infer_schema
from driftwatch.serialize import canonical_json, from_jsonable
from driftwatch.tables import DataTable


def color_profile(model_id="m1"):
    table = DataTable.from_columns({"color": ["a"] * 10 + ["b"] * 70 + ["c"] * 20})
    return build_profile(table, infer_schema(table), model_id=model_id)


def register(gateway, profile, **extra):
    doc = {**profile_to_doc(profile), **extra}
    resp = requests.post(
        f"{gateway.base_url}/api/distributions/{profile.model_id}", json=doc
    )
    assert resp.status_code == 200, resp.text
    return resp.json()

def post_batch(gateway, profile, cells, batch_id="b", timestamp=0):
    table = DataTable.from_columns({"color": list(cells)})
    batch = batch_frequencies(table, profile, batch_id=batch_id, timestamp=timestamp)
    return requests.post(
        f"{gateway.base_url}/api/distributions/{profile.model_id}",
        json=batch_to_doc(batch),
    )


HEALTHY = ["a"] * 1 + ["b"] * 7 + ["c"] * 2
DRIFTED = ["q"] * 10


class TestStats:
    def test_set_and_filter_by_name_pipeline_and_time(self, gateway):
        base = gateway.base_url
        for name, pipe, ts, val in (
            ("acc", "p1", 100, 0.9),
            ("acc", "p2", 200, 0.8),
            ("lat", "p1", 300, 12.5),
        ):
            resp = requests.post(
                f"{base}/api/stats",
                json={"name": name, "pipeline_id": pipe, "timestamp": ts, "payload": val},
            )
            assert resp.status_code == 200
            assert resp.json()["seq"] > 0

        by_name = requests.get(f"{base}/api/stats", params={"name": "acc"}).json()
        assert [s["payload"] for s in by_name["stats"]] == [0.9, 0.8]
        by_pipe = requests.get(f"{base}/api/stats", params={"pipeline": "p1"}).json()
        assert [s["name"] for s in by_pipe["stats"]] == ["acc", "lat"]
        by_time = requests.get(
            f"{base}/api/stats", params={"start": 150, "end": 250}
        ).json()
        assert [s["timestamp"] for s in by_time["stats"]] == [200]

    def test_category_validated(self, gateway):
        resp = requests.post(
            f"{gateway.base_url}/api/stats",
            json={"name": "x", "category": "bogus"},
        )
        assert resp.status_code == 400

    def test_empty_name_rejected(self, gateway):
        resp = requests.post(f"{gateway.base_url}/api/stats", json={"name": ""})
        assert resp.status_code == 400

    def test_time_series_payload_passes_through(self, gateway):
        payload = {"points": [[1, 0.5], [2, 0.75]]}
        requests.post(
            f"{gateway.base_url}/api/stats",
            json={"name": "curve", "category": "time_series", "payload": payload},
        )
        got = requests.get(
            f"{gateway.base_url}/api/stats", params={"name": "curve"}
        ).json()["stats"]
        assert got[0]["payload"] == payload


class TestDistributions:
    def test_register_then_fetch_profile_and_policy(self, gateway):
        profile = color_profile()
        ack = register(gateway, profile)
        assert ack["registered"] and ack["n_train"] == 100
        got = requests.get(f"{gateway.base_url}/api/distributions/m1").json()
        assert got["profile"] == profile_to_doc(profile)
        assert got["policy"]["metric"] == "similarity"  # default policy applies

    def test_model_id_mismatch_rejected(self, gateway):
        profile = color_profile("real-name")
        doc = profile_to_doc(profile)
        resp = requests.post(
            f"{gateway.base_url}/api/distributions/other-name", json=doc
        )
        assert resp.status_code == 400

    def test_identity_batch_scores_one(self, gateway):
        profile = color_profile()
        register(gateway, profile)
        resp = post_batch(gateway, profile, HEALTHY)
        report = resp.json()["report"]
        assert report["score"]["aggregate"]["similarity"] == 1.0
        assert report["alert"] is None

    def test_batch_for_unknown_model_is_404(self, gateway):
        profile = color_profile("ghost")
        resp = post_batch(gateway, profile, HEALTHY)
        assert resp.status_code == 404
        assert "ghost" in resp.json()["detail"]

    def test_unscorable_body_rejected(self, gateway):
        resp = requests.post(
            f"{gateway.base_url}/api/distributions/m1", json={"hello": 1}
        )
        assert resp.status_code == 400

    def test_raw_table_training_then_inference(self, gateway):
        base = gateway.base_url
        train = {
            "columns": ["x", "c"],
            "rows": [[float(i % 10), "u" if i % 2 else "v"] for i in range(40)],
            "role": "training",
            "n_bins": 5,
        }
        resp = requests.post(f"{base}/api/distributions/raw1", json=train)
        assert resp.status_code == 200 and resp.json()["registered"]
        infer = {
            "columns": ["x", "c"],
            "rows": [[float(i % 10), "u" if i % 2 else "v"] for i in range(20)],
            "role": "inference",
        }
        resp = requests.post(f"{base}/api/distributions/raw1", json=infer)
        assert resp.json()["report"]["score"]["aggregate"]["similarity"] == 1.0

    def test_gateway_report_matches_local_scoring_byte_for_byte(self, gateway):
        profile = color_profile()
        register(gateway, profile, policy={"metric": "similarity", "threshold": 0.8})
        resp = post_batch(gateway, profile, DRIFTED, batch_id="b1", timestamp=42)
        stored = resp.json()["report"]

        table = DataTable.from_columns({"color": DRIFTED})
        batch = batch_frequencies(table, profile, batch_id="b1", timestamp=42)
        local = evaluate_batch(
            profile, batch, AlertPolicy(metric="similarity", threshold=0.8)
        )
        assert canonical_json(from_jsonable(stored)) == canonical_json(report_to_doc(local))


class TestAlerts:
    def test_internal_alert_visible_after_drifted_batch(self, gateway):
        profile = color_profile()
        register(gateway, profile, policy={"metric": "similarity", "threshold": 0.8})
        post_batch(gateway, profile, HEALTHY, batch_id="ok")
        post_batch(gateway, profile, DRIFTED, batch_id="bad")
        alerts = requests.get(f"{gateway.base_url}/api/alerts").json()["alerts"]
        assert len(alerts) == 1
        record = alerts[0]["record"]
        assert record["batch_id"] == "bad"
        assert record["source"] == "internal"
        assert record["severity"] == "critical"

    def test_since_filter_uses_server_receive_time(self, gateway):
        base = gateway.base_url
        requests.post(f"{base}/api/alerts", json={"title": "first", "timestamp": 100})
        requests.post(f"{base}/api/alerts", json={"title": "second", "timestamp": 900})
        all_alerts = requests.get(f"{base}/api/alerts").json()["alerts"]
        assert [a["record"]["title"] for a in all_alerts] == ["first", "second"]
        late = requests.get(f"{base}/api/alerts", params={"since": 500}).json()["alerts"]
        assert [a["record"]["title"] for a in late] == ["second"]

    def test_external_alert_payload_passthrough(self, gateway):
        resp = requests.post(
            f"{gateway.base_url}/api/alerts",
            json={
                "title": "upstream nulls",
                "description": "schema change",
                "severity": "warning",
                "payload": {"column": "age", "null_rate": 0.4},
            },
        )
        assert resp.status_code == 200
        alerts = requests.get(f"{gateway.base_url}/api/alerts").json()["alerts"]
        assert alerts[0]["record"]["payload"] == {"column": "age", "null_rate": 0.4}
        assert alerts[0]["record"]["source"] == "external"

    def test_empty_title_rejected(self, gateway):
        resp = requests.post(f"{gateway.base_url}/api/alerts", json={"title": ""})
        assert resp.status_code == 400

    def test_bad_severity_rejected(self, gateway):
        resp = requests.post(
            f"{gateway.base_url}/api/alerts", json={"title": "t", "severity": "mild"}
        )
        assert resp.status_code == 400


class TestModels:
    def test_listing_sorted_by_creation_time(self, gateway):
        for mid in ("m-b", "m-a"):
            register(gateway, color_profile(mid))
        models = requests.get(f"{gateway.base_url}/api/models").json()["models"]
        assert [m["model_id"] for m in models] == ["m-b", "m-a"]
        created = [m["created_at"] for m in models]
        assert created == sorted(created)

    def test_time_range_filter(self, gateway):
        register(gateway, color_profile("m1"))
        models = requests.get(f"{gateway.base_url}/api/models").json()["models"]
        t = models[0]["created_at"]
        hit = requests.get(
            f"{gateway.base_url}/api/models", params={"start": t, "end": t}
        ).json()["models"]
        assert [m["model_id"] for m in hit] == ["m1"]
        miss = requests.get(
            f"{gateway.base_url}/api/models", params={"start": t + 1, "end": t + 2}
        ).json()["models"]
        assert miss == []

    def test_inverted_range_rejected(self, gateway):
        resp = requests.get(
            f"{gateway.base_url}/api/models", params={"start": 9, "end": 1}
        )
        assert resp.status_code == 400

    def test_current_model_follows_pipeline_association(self, gateway):
        register(gateway, color_profile("m1"), pipeline_id="checkout")
        got = requests.get(
            f"{gateway.base_url}/api/models/current", params={"pipeline": "checkout"}
        ).json()
        assert got["model_id"] == "m1"

    def test_latest_registration_wins_the_association(self, gateway):
        register(gateway, color_profile("m1"), pipeline_id="p")
        register(gateway, color_profile("m2"), pipeline_id="p")
        got = requests.get(
            f"{gateway.base_url}/api/models/current", params={"pipeline": "p"}
        ).json()
        assert got["model_id"] == "m2"

    def test_unknown_pipeline_is_404(self, gateway):
        resp = requests.get(
            f"{gateway.base_url}/api/models/current", params={"pipeline": "nope"}
        )
        assert resp.status_code == 404


class TestHealthReports:
    def test_reports_accumulate_in_order(self, gateway):
        profile = color_profile()
        register(gateway, profile)
        post_batch(gateway, profile, HEALTHY, batch_id="b1")
        post_batch(gateway, profile, DRIFTED, batch_id="b2")
        got = requests.get(f"{gateway.base_url}/api/health-reports/m1").json()
        assert [r["report"]["batch_id"] for r in got["reports"]] == ["b1", "b2"]

    def test_unknown_model_is_404(self, gateway):
        resp = requests.get(f"{gateway.base_url}/api/health-reports/nope")
        assert resp.status_code == 404


class TestAutoPolicy:
    def test_warmup_then_single_alert(self, gateway):
        profile = color_profile()
        register(
            gateway,
            profile,
            policy={"metric": "similarity", "auto": True, "warmup_runs": 3, "epsilon": 0.05},
        )
        for i in range(3):
            resp = post_batch(gateway, profile, HEALTHY, batch_id=f"warm{i}")
            assert resp.json()["report"]["alert"] is None
        policy = requests.get(f"{gateway.base_url}/api/distributions/m1").json()["policy"]
        assert policy["threshold"] is not None
        resp = post_batch(gateway, profile, DRIFTED, batch_id="drift")
        assert resp.json()["report"]["alert"] is not None
        alerts = requests.get(f"{gateway.base_url}/api/alerts").json()["alerts"]
        assert len(alerts) == 1


class TestRestart:
    def test_state_survives_restart(self, gateway):
        base = gateway.base_url
        profile = color_profile()
        register(gateway, profile, pipeline_id="p1")
        post_batch(gateway, profile, HEALTHY, batch_id="b1")
        post_batch(gateway, profile, DRIFTED, batch_id="b2")
        requests.post(f"{base}/api/stats", json={"name": "acc", "payload": 0.9})
        before = {
            "alerts": requests.get(f"{base}/api/alerts").json(),
            "models": requests.get(f"{base}/api/models").json(),
            "reports": requests.get(f"{base}/api/health-reports/m1").json(),
            "stats": requests.get(f"{base}/api/stats").json(),
            "profile": requests.get(f"{base}/api/distributions/m1").json(),
        }
        gateway.restart()
        base = gateway.base_url
        after = {
            "alerts": requests.get(f"{base}/api/alerts").json(),
            "models": requests.get(f"{base}/api/models").json(),
            "reports": requests.get(f"{base}/api/health-reports/m1").json(),
            "stats": requests.get(f"{base}/api/stats").json(),
            "profile": requests.get(f"{base}/api/distributions/m1").json(),
        }
        assert canonical_json(after) == canonical_json(before)

    def test_infinite_kl_survives_restart(self, gateway):
        profile = color_profile()
        register(gateway, profile)
        resp = post_batch(gateway, profile, ["a"] * 5)  # leaves training bins empty
        kl = resp.json()["report"]["score"]["aggregate"]["kl"]
        assert kl == "inf"
        gateway.restart()
        got = requests.get(f"{gateway.base_url}/api/health-reports/m1").json()
        assert got["reports"][0]["report"]["score"]["aggregate"]["kl"] == "inf"


class TestConcurrency:
    def test_parallel_batch_posts_all_become_reports(self, gateway):
        profile = color_profile()
        register(gateway, profile)
        n = 40

        def post_one(i):
            resp = post_batch(gateway, profile, HEALTHY, batch_id=f"b{i}")
            return resp.status_code

        with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
            statuses = list(pool.map(post_one, range(n)))
        assert statuses == [200] * n
        got = requests.get(f"{gateway.base_url}/api/health-reports/m1").json()
        assert len(got["reports"]) == n
        seqs = sorted(r["seq"] for r in got["reports"])
        assert len(set(seqs)) == n
