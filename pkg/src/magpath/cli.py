"""Command-line client for the pathway service.

Every subcommand is a thin wrapper over one HTTP endpoint; the heavy
lifting always happens behind the REST API, so scripted runs and the
browser UI cannot drift apart.  Point it at a running server with
``--base-url`` or let it spin up an in-process application with
``--data-dir`` (handy for local one-shots and tests).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import httpx


def _connection(args) -> httpx.Client:
    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    base_url = args.base_url or config.get("base_url")
    data_dir = args.data_dir or config.get("data_dir")
    if base_url:
        return httpx.Client(base_url=base_url, timeout=args.timeout)
    if data_dir:
        from starlette.testclient import TestClient

        from .service import ServiceConfig, create_app
        app = create_app(ServiceConfig(data_dir=data_dir,
                                       static_dir=config.get("static_dir")))
        return TestClient(app, raise_server_exceptions=False)
    raise SystemExit("need --base-url or --data-dir (flag or --config file)")


def _emit(response: httpx.Response) -> int:
    content_type = response.headers.get("content-type", "")
    if content_type.startswith("application/json"):
        print(json.dumps(response.json(), indent=2, sort_keys=True))
    else:
        sys.stdout.write(response.text)
    return 0 if response.status_code < 400 else 1


def _wait_for_job(client: httpx.Client, job: dict, timeout: float) -> dict:
    deadline = time.monotonic() + timeout
    while job["state"] in ("queued", "running"):
        if time.monotonic() > deadline:
            raise SystemExit(f"timed out waiting for job {job['id']}")
        time.sleep(0.2)
        job = client.get(f"/jobs/{job['id']}").json()
    return job


def _job_command(client: httpx.Client, response: httpx.Response, wait: bool,
                 timeout: float) -> int:
    if response.status_code >= 400:
        return _emit(response)
    job = response.json()
    if wait:
        job = _wait_for_job(client, job, timeout)
    print(json.dumps(job, indent=2, sort_keys=True))
    return 0 if job.get("state") != "failed" else 1


def _load_json_arg(path: str | None) -> dict:
    return json.loads(Path(path).read_text()) if path else {}


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="magpath", description="pathway model service client")
    top.add_argument("--config", help="JSON file with base_url/data_dir defaults")
    top.add_argument("--base-url", help="URL of a running service")
    top.add_argument("--data-dir", help="run the service in-process on this dir")
    top.add_argument("--timeout", type=float, default=600.0)
    sub = top.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--workers", type=int, default=2)
    serve.add_argument("--static-dir")

    ingest = sub.add_parser("ingest", help="upload an event log")
    ingest.add_argument("--name", required=True)
    ingest.add_argument("--file", required=True)
    ingest.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    ingest.add_argument("--parse", help="JSON file with the column mapping")

    sub.add_parser("datasets", help="list datasets")

    stats = sub.add_parser("stats", help="pathway length summary")
    stats.add_argument("--dataset", required=True)

    filt = sub.add_parser("filter", help="threshold preview or apply")
    filt.add_argument("--dataset", required=True)
    filt.add_argument("--control", required=True)
    filt.add_argument("--thresholds", help="JSON file with threshold values")
    filt.add_argument("--apply", action="store_true")
    filt.add_argument("--name", help="name of the filtered dataset (with --apply)")
    filt.add_argument("--whitelist", help="file with one diagnosis code per line")

    mag = sub.add_parser("mag", help="build a graph from a dataset")
    mag.add_argument("--dataset", required=True)
    mag.add_argument("--aspects", required=True,
                     help="comma-separated perspective names")
    mag.add_argument("--no-endpoints", action="store_true")

    matrix = sub.add_parser("matrix", help="start a dissimilarity matrix job")
    matrix.add_argument("--mag", required=True)
    matrix.add_argument("--params", help="JSON file with alignment parameters")
    matrix.add_argument("--workers", type=int, default=1)
    matrix.add_argument("--wait", action="store_true")

    cluster = sub.add_parser("cluster", help="start a clustering job")
    cluster.add_argument("--matrix", required=True)
    cluster.add_argument("--runs", type=int, default=25)
    cluster.add_argument("--seeds", type=int, default=5)
    cluster.add_argument("--alpha", type=float, default=0.5)
    cluster.add_argument("--wait", action="store_true")

    profile = sub.add_parser("profile", help="cluster frequency profile")
    profile.add_argument("--clusters", required=True)
    profile.add_argument("--csv", action="store_true")
    profile.add_argument("--perspectives", default="intervention,occupation")

    relevance = sub.add_parser("relevance", help="score nodes")
    relevance.add_argument("--mag", required=True)
    relevance.add_argument("--w1", type=float, default=0.5)
    relevance.add_argument("--w2", type=float, default=0.5)
    relevance.add_argument("--alpha", type=float, default=0.85)
    relevance.add_argument("--clusters")
    relevance.add_argument("--cluster-index", type=int)

    render = sub.add_parser("render", help="simplified model document")
    render.add_argument("--mag", required=True)
    render.add_argument("--model", help="JSON file with thresholds and options")
    render.add_argument("--dot", action="store_true")

    job = sub.add_parser("job", help="poll one job")
    job.add_argument("--id", required=True)
    return top


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import ServiceConfig, create_app
        if not args.data_dir:
            raise SystemExit("serve needs --data-dir")
        app = create_app(ServiceConfig(data_dir=args.data_dir,
                                       workers=args.workers,
                                       static_dir=args.static_dir))
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    client = _connection(args)
    try:
        if args.command == "ingest":
            body = {"name": args.name, "format": args.format,
                    "content": Path(args.file).read_text(),
                    "parse": _load_json_arg(args.parse) or None}
            return _emit(client.post("/datasets", json=body))
        if args.command == "datasets":
            return _emit(client.get("/datasets"))
        if args.command == "stats":
            return _emit(client.get(f"/datasets/{args.dataset}/stats"))
        if args.command == "filter":
            body = {"control": args.control,
                    "thresholds": _load_json_arg(args.thresholds)}
            if args.apply:
                if not args.name:
                    raise SystemExit("--apply needs --name")
                body["name"] = args.name
                if args.whitelist:
                    body["diagnosis_whitelist"] = [
                        line.strip()
                        for line in Path(args.whitelist).read_text().splitlines()
                        if line.strip()]
                return _emit(client.post(
                    f"/datasets/{args.dataset}/filter/apply", json=body))
            return _emit(client.post(
                f"/datasets/{args.dataset}/filter/preview", json=body))
        if args.command == "mag":
            body = {"aspects": args.aspects.split(","),
                    "virtual_endpoints": not args.no_endpoints}
            return _emit(client.post(f"/datasets/{args.dataset}/mag", json=body))
        if args.command == "matrix":
            body = {"params": _load_json_arg(args.params),
                    "workers": args.workers}
            response = client.post(f"/mags/{args.mag}/matrix", json=body)
            return _job_command(client, response, args.wait, args.timeout)
        if args.command == "cluster":
            body = {"runs": args.runs, "seeds": args.seeds, "alpha": args.alpha}
            response = client.post(f"/matrices/{args.matrix}/clusters", json=body)
            return _job_command(client, response, args.wait, args.timeout)
        if args.command == "profile":
            p1, p2 = args.perspectives.split(",")
            params = {"p1": p1, "p2": p2, "fmt": "csv" if args.csv else "json"}
            return _emit(client.get(f"/clusters/{args.clusters}/profile",
                                    params=params))
        if args.command == "relevance":
            body = {"w1": args.w1, "w2": args.w2, "alpha": args.alpha}
            if args.clusters:
                body["clusters"] = args.clusters
                body["cluster_index"] = args.cluster_index
            return _emit(client.post(f"/mags/{args.mag}/relevance", json=body))
        if args.command == "render":
            body = _load_json_arg(args.model)
            params = {"fmt": "dot"} if args.dot else {}
            return _emit(client.post(f"/mags/{args.mag}/model", json=body,
                                     params=params))
        if args.command == "job":
            return _emit(client.get(f"/jobs/{args.id}"))
        raise SystemExit(f"unknown command {args.command}")
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
