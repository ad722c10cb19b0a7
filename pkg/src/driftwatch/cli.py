"""Command-line entry point.

Subcommands: profile (build a training profile from CSV), score (rate
one batch against a profile), monitor (watch a directory of batch
CSVs), study (run a synthetic sweep), serve (run the HTTP gateway).

Exit codes are a stable scripting contract: 0 healthy, 2 usage or input
error, 3 health-threshold violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import socket
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .metrics import METRIC_NAMES
from .monitor import (
    DEFAULT_EPSILON,
    DEFAULT_WARMUP_RUNS,
    AlertPolicy,
    AlertRecord,
    HealthReport,
    ScoreHistory,
    alert_to_doc,
    auto_threshold,
    evaluate_batch,
    report_to_doc,
)
from .profile import TrainingProfile, batch_frequencies, build_profile, load_profile, save_profile
from .schema import CATEGORICAL, CONTINUOUS, DEFAULT_N_BINS, infer_schema
from .serialize import canonical_json
from .tables import read_csv
from .harness.loads import LOAD_KINDS, LoadSpec
from .harness.studies import (
    DEFAULT_LEVELS,
    DEFAULT_SIZES,
    StudyReport,
    run_load_shift_study,
    run_noise_study,
    run_sample_size_study,
    write_overlay_csv,
)

log = logging.getLogger("driftwatch")

OK = 0
USAGE = 2
UNHEALTHY = 3


class CliError(Exception):
    """Input problem the user can fix; rendered once, exits 2."""


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


# ---------------------------------------------------------------------------
# profile


def cmd_profile(args: argparse.Namespace) -> int:
    table = read_csv(args.train_csv)
    overrides = {name: CATEGORICAL for name in args.categorical}
    overrides.update({name: CONTINUOUS for name in args.continuous})
    schemas = infer_schema(table, overrides=overrides or None, n_bins=args.bins)
    model_id = args.model_id or Path(args.train_csv).stem
    profile = build_profile(table, schemas, model_id=model_id)
    save_profile(profile, args.out)
    print(f"profile {model_id}: {profile.n_train} rows, {len(profile.features)} features")
    for feat in profile.features:
        kind = feat.schema.kind
        detail = (
            f"{len(feat.schema.categories)} categories"
            if kind == CATEGORICAL
            else f"{feat.schema.bins.n_interior} bins"
        )
        print(f"  {feat.schema.name}: {kind}, {detail}")
    print(f"wrote {args.out}")
    return OK


# ---------------------------------------------------------------------------
# score


def _render_score(report: HealthReport, fmt: str) -> str:
    if fmt == "json":
        return canonical_json(report_to_doc(report))
    score = report.score
    lines = []
    if fmt == "csv":
        lines.append("feature,similarity,kl,rmse,wasserstein")
        for f in score.features:
            lines.append(f"{f.name},{_fmt(f.similarity)},{_fmt(f.kl)},{_fmt(f.rmse)},{_fmt(f.wasserstein)}")
        agg = score.aggregate
        lines.append(
            f"aggregate,{_fmt(agg['similarity'])},{_fmt(agg['kl'])},{_fmt(agg['rmse'])},{_fmt(agg['wasserstein'])}"
        )
        return "\n".join(lines)
    names = [f.name for f in score.features] + ["aggregate"]
    width = max(len(n) for n in names)
    lines.append(f"{'feature'.ljust(width)}  similarity  kl        rmse      wasserstein")
    for f in score.features:
        lines.append(
            f"{f.name.ljust(width)}  {_fmt(f.similarity):<10}  {_fmt(f.kl):<8}  {_fmt(f.rmse):<8}  {_fmt(f.wasserstein)}"
        )
    agg = score.aggregate
    lines.append(
        f"{'aggregate'.ljust(width)}  {_fmt(agg['similarity']):<10}  {_fmt(agg['kl']):<8}  {_fmt(agg['rmse']):<8}  {_fmt(agg['wasserstein'])}"
    )
    lines.append(f"selected features: {', '.join(score.selected)}")
    if report.alert:
        lines.append(f"ALERT [{report.alert.severity}] {report.alert.title}: {report.alert.description}")
    return "\n".join(lines)


def cmd_score(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    table = read_csv(args.batch_csv)
    batch = batch_frequencies(table, profile, batch_id=args.batch_id)
    if args.threshold is not None:
        policy = AlertPolicy(metric=args.metric, threshold=args.threshold, epsilon=args.epsilon)
    else:
        policy = AlertPolicy(metric=args.metric, threshold=None, auto=True)
    report = evaluate_batch(profile, batch, policy, k=args.top_k)
    print(_render_score(report, args.format))
    if args.hist_csv:
        write_overlay_csv(profile, batch, args.hist_csv)
    return UNHEALTHY if report.alert else OK


# ---------------------------------------------------------------------------
# monitor


def _post_alert(url: str, alert: AlertRecord, retries: int = 3, backoff: float = 0.5) -> bool:
    import requests

    from .serialize import to_jsonable

    record = alert_to_doc(alert)
    doc = to_jsonable(
        {
            "title": record["title"],
            "description": record["description"],
            "severity": record["severity"],
            "model_id": record["model_id"],
            "batch_id": record["batch_id"],
            "timestamp": record["timestamp"],
            "payload": {
                "metric": record["metric"],
                "value": record["value"],
                "threshold": record["threshold"],
            },
        }
    )
    for attempt in range(retries):
        try:
            resp = requests.post(f"{url.rstrip('/')}/api/alerts", json=doc, timeout=5)
        except requests.RequestException as exc:
            wait = backoff * (2**attempt)
            log.warning("gateway unreachable (%s); retry in %.1fs", exc.__class__.__name__, wait)
            time.sleep(wait)
            continue
        if resp.status_code < 300:
            return True
        if resp.status_code < 500:
            # our own payload is malformed; retrying cannot help
            log.warning("gateway rejected alert: %s %s", resp.status_code, resp.text)
            return False
        wait = backoff * (2**attempt)
        log.warning("gateway error %s; retry in %.1fs", resp.status_code, wait)
        time.sleep(wait)
    log.warning("giving up on alert delivery after %d attempts", retries)
    return False


def _monitor_policy(args: argparse.Namespace) -> AlertPolicy:
    if args.auto and args.threshold is not None:
        raise CliError("--auto and --threshold are mutually exclusive")
    if args.threshold is not None:
        return AlertPolicy(metric=args.metric, threshold=args.threshold, epsilon=args.epsilon)
    return AlertPolicy(
        metric=args.metric,
        threshold=None,
        auto=True,
        epsilon=args.epsilon,
        warmup_runs=args.warmup,
    )


def _process_batch(
    profile: TrainingProfile,
    path: Path,
    policy: AlertPolicy,
    history: ScoreHistory,
    args: argparse.Namespace,
) -> tuple[AlertPolicy, Optional[AlertRecord]]:
    """Score one file; returns the (possibly auto-configured) policy."""
    table = read_csv(path)
    batch = batch_frequencies(table, profile, batch_id=path.name)
    report = evaluate_batch(profile, batch, policy, k=args.top_k)
    history.append(path.name, len(history), report.score)
    agg = report.score.aggregate
    status = f"ALERT ({report.alert.severity})" if report.alert else "ok"
    print(
        f"{path.name}: similarity={_fmt(agg['similarity'])} kl={_fmt(agg['kl'])} "
        f"rmse={_fmt(agg['rmse'])} -> {status}",
        flush=True,
    )
    if policy.auto and policy.threshold is None and len(history) >= policy.warmup_runs:
        policy = auto_threshold(history, policy)
        print(
            f"warmup complete: {policy.metric} threshold set to {policy.threshold:.4f}",
            flush=True,
        )
    if report.alert and args.gateway_url:
        _post_alert(args.gateway_url, report.alert)
    return policy, report.alert


def cmd_monitor(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    watch_dir = Path(args.watch_dir)
    if not watch_dir.is_dir():
        raise CliError(f"watch directory {watch_dir} does not exist")
    policy = _monitor_policy(args)
    history = ScoreHistory(profile.model_id)
    seen: set[str] = set()
    alerts = 0
    while True:
        pending = sorted(p for p in watch_dir.glob("*.csv") if p.name not in seen)
        for path in pending:
            seen.add(path.name)
            try:
                policy, alert = _process_batch(profile, path, policy, history, args)
            except (ValueError, OSError) as exc:
                log.warning("skipping %s: %s", path.name, exc)
                continue
            if alert:
                alerts += 1
        if args.once:
            return UNHEALTHY if alerts else OK
        time.sleep(args.interval)


# ---------------------------------------------------------------------------
# study


def _write_study(report: StudyReport, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"study-{report.kind}.csv"
    txt_path = outdir / f"study-{report.kind}.txt"
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    txt_path.write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    print(f"wrote {csv_path} and {txt_path}")


def cmd_study(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    if args.study_kind == "sample-size":
        spec = LoadSpec(
            kind=args.load,
            n_samples=args.train_samples,
            n_features=args.features,
            seed=args.seed,
            label_seed=args.seed,
        )
        sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else DEFAULT_SIZES
        report = run_sample_size_study(
            spec, sizes=sizes, seeds=range(args.seeds), n_bins=args.bins
        )
    elif args.study_kind == "noise":
        spec = LoadSpec(
            kind=args.load,
            n_samples=args.train_samples,
            n_features=args.features,
            seed=args.seed,
            label_seed=args.seed,
        )
        levels = [float(s) for s in args.levels.split(",")] if args.levels else DEFAULT_LEVELS
        report = run_noise_study(
            spec,
            levels=levels,
            seeds=range(args.seeds),
            batch_size=args.batch_size,
            n_bins=args.bins,
        )
    else:
        report = run_load_shift_study(
            train_samples=args.train_samples,
            batch_size=args.batch_size,
            n_features=args.features,
            base_seed=args.seed,
            label_seed=args.seed,
            seeds=range(args.seeds),
            n_bins=args.bins,
        )
    _write_study(report, outdir)
    return OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as exc:
        raise CliError(f"cannot listen on {args.host}:{args.port}: {exc}") from None
    from .gateway import serve

    serve(args.store, host=args.host, port=args.port)
    return OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftwatch", description="Label-free model health monitoring."
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="build a training profile from a CSV")
    p.add_argument("train_csv")
    p.add_argument("-o", "--out", required=True, help="output profile JSON path")
    p.add_argument("--model-id", default=None)
    p.add_argument("--bins", type=int, default=DEFAULT_N_BINS)
    p.add_argument("--categorical", action="append", default=[], metavar="COLUMN")
    p.add_argument("--continuous", action="append", default=[], metavar="COLUMN")
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("score", help="score one batch CSV against a profile")
    p.add_argument("profile")
    p.add_argument("batch_csv")
    p.add_argument("--metric", choices=METRIC_NAMES, default="similarity")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--batch-id", default="")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--hist-csv", default=None, help="write train/batch histogram overlay CSV")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("monitor", help="watch a directory of batch CSVs")
    p.add_argument("profile")
    p.add_argument("watch_dir")
    p.add_argument("--metric", choices=METRIC_NAMES, default="similarity")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--auto", action="store_true", help="derive the threshold from warmup runs")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--warmup", type=int, default=DEFAULT_WARMUP_RUNS)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--gateway-url", default=None)
    p.add_argument("--interval", type=float, default=1.0, help="poll period in seconds")
    p.add_argument("--once", action="store_true", help="process current files then exit")
    p.set_defaults(fn=cmd_monitor)

    p = sub.add_parser("study", help="run a synthetic sweep")
    p.add_argument("study_kind", choices=("sample-size", "noise", "load-shift"))
    p.add_argument("-o", "--out", default=".", help="output directory")
    p.add_argument("--load", choices=LOAD_KINDS, default="periodic", help="training load kind")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=3, help="replicates per condition")
    p.add_argument("--sizes", default=None, help="comma-separated batch sizes")
    p.add_argument("--levels", default=None, help="comma-separated noise levels")
    p.add_argument("--batch-size", type=int, default=1000)
    p.add_argument("--train-samples", type=int, default=2000)
    p.add_argument("--features", type=int, default=3)
    p.add_argument("--bins", type=int, default=DEFAULT_N_BINS)
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("serve", help="run the stats gateway")
    p.add_argument("--store", default=None, help="event log path (env DRIFTWATCH_STORE)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve" and args.store is None:
        import os

        args.store = os.environ.get("DRIFTWATCH_STORE", "driftwatch-store.jsonl")
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except KeyboardInterrupt:
        return OK
