"""End-to-end reporting pipeline demo against a live stats gateway.

Registers a synthetic training distribution, replays the same table as an
inference batch (similarity comes back exactly 1.0), then ships a shifted
batch that trips the gateway's default similarity policy. Each step prints
one JSON line so the run is easy to assert on.

Start a gateway first, e.g.:

    python3 -m driftwatch serve --port 8800 --store /tmp/gateway.jsonl

then:

    python3 examples/pipeline.py --gateway-url http://127.0.0.1:8800
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Any

from driftwatch_client import ClientSession


def emit(step: str, **fields: Any) -> None:
    print(json.dumps({"step": step, **fields}, sort_keys=True))


def training_table(rng: random.Random, n: int) -> dict[str, list]:
    return {
        "latency_ms": [rng.gauss(120.0, 15.0) for _ in range(n)],
        "channel": [rng.choice(["web", "mobile", "batch"]) for _ in range(n)],
        "error_rate": [rng.uniform(0.0, 0.05) for _ in range(n)],
    }


def drifted_table(rng: random.Random, n: int) -> dict[str, list]:
    # Latencies and error rates far outside the training range, plus a
    # channel label the training vocabulary has never seen.
    return {
        "latency_ms": [rng.gauss(900.0, 40.0) for _ in range(n)],
        "channel": [rng.choice(["backfill", "batch"]) for _ in range(n)],
        "error_rate": [rng.uniform(0.4, 0.6) for _ in range(n)],
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--gateway-url", required=True, help="gateway base URL")
    parser.add_argument("--model-id", default="demo-classifier")
    parser.add_argument("--pipeline-id", default="demo-pipeline")
    parser.add_argument("--rows", type=int, default=400)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    with ClientSession(
        args.gateway_url, pipeline_id=args.pipeline_id, model_id=args.model_id
    ) as session:
        if not session.ping():
            print(f"gateway at {args.gateway_url} is not answering", file=sys.stderr)
            return 2

        train = training_table(rng, args.rows)
        ack = session.set_data_distribution_stat(train, role="training")
        emit("register", model_id=ack["model_id"], n_train=ack["n_train"], seq=ack["seq"])

        session.set_stat("rows_ingested", args.rows, category="value")

        report = session.set_data_distribution_stat(train, batch_id="identity")
        similarity = report["score"]["aggregate"]["similarity"]
        emit("identity", similarity=similarity, alert=report["alert"])

        report = session.set_data_distribution_stat(
            drifted_table(rng, args.rows), batch_id="shifted"
        )
        alert = report["alert"]
        emit(
            "drift",
            similarity=report["score"]["aggregate"]["similarity"],
            alert=alert and {"title": alert["title"], "severity": alert["severity"]},
        )

        seq = session.health_alert(
            "pipeline run finished",
            description="synthetic demo traffic",
            data={"rows": args.rows},
        )
        emit("custom-alert", seq=seq)

        alerts = session.get_alerts()
        emit("alerts", count=len(alerts), titles=[a["record"]["title"] for a in alerts])

        model = session.current_model()
        assert model is not None
        emit(
            "current-model",
            model_id=model["model_id"],
            created_at=model["created_at"].isoformat(),
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
