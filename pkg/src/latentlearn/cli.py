"""Thin HTTP client for the experiment service, plus the `serve` command.

Every data/compute command submits a job to a running service (start one
with `latentlearn serve`) and, by default, polls it to completion. Exit code
0 means the job finished; failures print a machine-readable error record to
stderr and exit nonzero.
"""

from __future__ import annotations

import json
import os
import sys
import time
from typing import Any, Optional

import click
import httpx

DEFAULT_SERVER = "http://127.0.0.1:8077"


def _server_option(f):
    return click.option(
        "--server",
        default=lambda: os.environ.get("LATENTLEARN_SERVER", DEFAULT_SERVER),
        show_default=DEFAULT_SERVER,
        help="Base URL of a running latentlearn service.",
    )(f)


def _fail(code: str, message: str, **extra: Any) -> None:
    record = {"error": code, "message": message, **extra}
    click.echo(json.dumps(record, sort_keys=True), err=True)
    sys.exit(1)


def _post(server: str, path: str, payload: dict) -> dict:
    try:
        resp = httpx.post(f"{server}{path}", json=payload, timeout=30.0)
    except httpx.HTTPError as exc:
        _fail("connection", f"cannot reach {server}: {exc}")
    if resp.status_code >= 400:
        _fail("request", f"{path} returned {resp.status_code}", detail=resp.text)
    return resp.json()


def _get(server: str, path: str) -> dict:
    try:
        resp = httpx.get(f"{server}{path}", timeout=30.0)
    except httpx.HTTPError as exc:
        _fail("connection", f"cannot reach {server}: {exc}")
    if resp.status_code >= 400:
        _fail("request", f"{path} returned {resp.status_code}", detail=resp.text)
    return resp.json()


def _wait_for_job(server: str, job: dict, poll_s: float = 2.0) -> dict:
    job_id = job["job_id"]
    shown = 0
    while True:
        record = _get(server, f"/jobs/{job_id}")
        for line in record["progress"][shown:]:
            click.echo(line)
        shown = len(record["progress"])
        if record["status"] in ("done", "error"):
            return record
        time.sleep(poll_s)


def _finish(server: str, job: dict, wait: bool) -> None:
    if not wait:
        click.echo(json.dumps({"job_id": job["job_id"], "status": job["status"]}))
        return
    record = _wait_for_job(server, job)
    if record["status"] == "error":
        _fail("job", record.get("error") or "job failed", job_id=record["job_id"])
    click.echo(json.dumps(record["result"], indent=2, sort_keys=True))


def _experiment_payload(
    config: Optional[str],
    benchmark: Optional[str],
    condition: Optional[str],
    preset: Optional[str],
    seeds: Optional[str],
    data_seed: Optional[int],
    cue_variant: Optional[str],
    set_: tuple[str, ...],
    force: bool,
) -> dict:
    payload: dict[str, Any] = {}
    if config:
        payload.update(json.loads(open(config, encoding="utf-8").read()))
    if benchmark:
        payload["benchmark"] = benchmark
    if condition:
        payload["condition"] = condition
    if preset:
        payload["preset"] = preset
    if seeds:
        payload["seeds"] = [int(s) for s in seeds.split(",") if s]
    if data_seed is not None:
        payload["data_seed"] = data_seed
    if cue_variant:
        payload["cue_variant"] = cue_variant
    overrides = dict(payload.get("train_overrides", {}))
    for item in set_:
        if "=" not in item:
            _fail("usage", f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    if overrides:
        payload["train_overrides"] = overrides
    if force:
        payload["force"] = True
    missing = {"benchmark", "condition"} - set(payload)
    if missing:
        _fail("usage", f"missing required fields: {sorted(missing)}")
    return payload


def _experiment_options(f):
    f = click.option("--config", type=click.Path(exists=True), help="JSON config file.")(f)
    f = click.option("--benchmark", type=str, default=None)(f)
    f = click.option("--condition", type=str, default=None)(f)
    f = click.option("--preset", type=str, default=None)(f)
    f = click.option("--seeds", type=str, default=None, help="Comma-separated, e.g. 0,1,2,3.")(f)
    f = click.option("--data-seed", type=int, default=None)(f)
    f = click.option("--cue-variant", type=str, default=None)(f)
    f = click.option("--set", "set_", multiple=True, help="Training override, key=value.")(f)
    f = click.option("--force", is_flag=True, help="Re-run even when cached artifacts match.")(f)
    f = click.option("--wait/--no-wait", default=True, show_default=True)(f)
    return f


@click.group()
def main() -> None:
    """Latent-learning benchmark harness."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True)
@click.option(
    "--artifacts", default=None,
    help="Artifacts directory (default: $LATENTLEARN_ARTIFACTS or ./artifacts).",
)
def serve(host: str, port: int, artifacts: Optional[str]) -> None:
    """Run the experiment service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(artifacts), host=host, port=port, log_level="info")


@main.command("gen-data")
@click.argument("benchmark")
@click.option("--preset", default="desk", show_default=True)
@click.option("--data-seed", default=0, show_default=True)
@click.option("--no-icl", is_flag=True, help="Build the ICL-free dataset variant.")
@click.option("--force", is_flag=True)
@click.option("--wait/--no-wait", default=True, show_default=True)
@_server_option
def gen_data(benchmark: str, preset: str, data_seed: int, no_icl: bool,
             force: bool, wait: bool, server: str) -> None:
    """Generate (or reuse) a benchmark dataset."""
    job = _post(
        server, "/datasets",
        {
            "benchmark": benchmark, "preset": preset, "data_seed": data_seed,
            "icl_enabled": not no_icl, "force": force,
        },
    )
    _finish(server, job, wait)


@main.command()
@_experiment_options
@_server_option
def run(server: str, wait: bool, **kwargs) -> None:
    """Generate data, train, evaluate, and report, end to end."""
    job = _post(server, "/experiments", _experiment_payload(**kwargs))
    _finish(server, job, wait)


@main.command()
@_experiment_options
@_server_option
def train(server: str, wait: bool, **kwargs) -> None:
    """Train runs for an experiment without evaluating suites."""
    job = _post(server, "/experiments/train", _experiment_payload(**kwargs))
    _finish(server, job, wait)


@main.command("eval")
@_experiment_options
@_server_option
def eval_cmd(server: str, wait: bool, **kwargs) -> None:
    """Evaluate previously trained runs and emit the report."""
    job = _post(server, "/experiments/evaluate", _experiment_payload(**kwargs))
    _finish(server, job, wait)


@main.command()
@click.option("--benchmark", required=True)
@click.option("--condition", required=True)
@click.option("--preset", default="desk", show_default=True)
@click.option("--data-seed", default=0, show_default=True)
@_server_option
def report(benchmark: str, condition: str, preset: str, data_seed: int, server: str) -> None:
    """Print the across-seed summary of a finished experiment."""
    record = _get(server, f"/experiments/{benchmark}/{condition}/{preset}/{data_seed}/summary")
    click.echo(json.dumps(record["summary"], indent=2, sort_keys=True))


@main.command()
@click.argument("job_id", required=False)
@_server_option
def jobs(job_id: Optional[str], server: str) -> None:
    """List jobs, or show one job's record."""
    if job_id:
        click.echo(json.dumps(_get(server, f"/jobs/{job_id}"), indent=2, sort_keys=True))
    else:
        for record in _get(server, "/jobs")["jobs"]:
            click.echo(
                f"{record['job_id']}  {record['kind']:<8}  {record['status']:<7}  "
                f"{record['created_at']}"
            )


if __name__ == "__main__":
    main()
