"""FastAPI application wrapping the experiment harness.

Long work (generation, training, evaluation) runs as queued jobs; summaries
and health checks answer immediately. The CLI is a thin client of these
endpoints.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiments import (
    ExperimentConfig,
    build_dataset,
    dataset_key,
    experiment_dir,
    get_preset,
    run_experiment,
)
from .jobs import JobManager
from .schemas import (
    ExperimentRequest,
    GenerateDataRequest,
    HealthResponse,
    JobList,
    JobRecord,
    PresetInfo,
    ReportRequest,
    SummaryResponse,
)

DEFAULT_ARTIFACTS = "artifacts"


def _experiment_config(req: ExperimentRequest) -> ExperimentConfig:
    return ExperimentConfig(
        benchmark=req.benchmark,
        condition=req.condition,
        preset=req.preset,
        seeds=tuple(req.seeds),
        data_seed=req.data_seed,
        cue_variant=req.cue_variant,
        train_overrides=tuple(sorted(req.train_overrides.items())),
    )


def create_app(artifacts_root: str | Path | None = None) -> FastAPI:
    root = Path(
        artifacts_root
        or os.environ.get("LATENTLEARN_ARTIFACTS", DEFAULT_ARTIFACTS)
    ).resolve()
    app = FastAPI(title="latentlearn", version=__version__)
    jobs = JobManager()
    app.state.artifacts_root = root
    app.state.jobs = jobs

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__, artifacts_root=str(root))

    @app.get("/presets", response_model=PresetInfo)
    def presets() -> PresetInfo:
        return PresetInfo()

    @app.post("/datasets", response_model=JobRecord)
    def generate_data(req: GenerateDataRequest) -> JobRecord:
        preset = get_preset(req.preset, req.benchmark)

        def work(progress) -> dict:
            progress(f"generating {req.benchmark} ({req.preset}, seed {req.data_seed})")
            ds_dir = build_dataset(
                req.benchmark, preset.dataset, req.data_seed, root,
                icl_enabled=req.icl_enabled,
                episodes_per_suite=preset.episodes_per_suite or 500,
                force=req.force,
            )
            manifest = json.loads((ds_dir / "dataset_manifest.json").read_text())
            return {
                "dataset_dir": str(ds_dir),
                "key": manifest["key"],
                "counts": manifest["counts"],
                "fingerprints": manifest["fingerprints"],
            }

        return jobs.submit("gen-data", work)

    def _submit_experiment(req: ExperimentRequest, kind: str, do_train: bool, do_eval: bool) -> JobRecord:
        config = _experiment_config(req)

        def work(progress) -> dict:
            exp_dir = run_experiment(
                config, root, force=req.force,
                do_train=do_train, do_eval=do_eval, progress=progress,
            )
            out = {"experiment_dir": str(exp_dir)}
            summary_path = exp_dir / "report" / "summary.json"
            if summary_path.exists():
                out["summary"] = json.loads(summary_path.read_text())
            return out

        return jobs.submit(kind, work)

    @app.post("/experiments", response_model=JobRecord)
    def run(req: ExperimentRequest) -> JobRecord:
        return _submit_experiment(req, "run", do_train=True, do_eval=True)

    @app.post("/experiments/train", response_model=JobRecord)
    def train(req: ExperimentRequest) -> JobRecord:
        return _submit_experiment(req, "train", do_train=True, do_eval=False)

    @app.post("/experiments/evaluate", response_model=JobRecord)
    def evaluate(req: ExperimentRequest) -> JobRecord:
        return _submit_experiment(req, "eval", do_train=False, do_eval=True)

    @app.post("/reports", response_model=JobRecord)
    def report(req: ReportRequest) -> JobRecord:
        config = ExperimentConfig(
            benchmark=req.benchmark, condition=req.condition,
            preset=req.preset, data_seed=req.data_seed,
        )

        def work(progress) -> dict:
            exp_dir = run_experiment(config, root, do_train=False, do_eval=True, progress=progress)
            summary_path = exp_dir / "report" / "summary.json"
            return {
                "experiment_dir": str(exp_dir),
                "summary": json.loads(summary_path.read_text()),
            }

        return jobs.submit("report", work)

    @app.get("/jobs", response_model=JobList)
    def list_jobs() -> JobList:
        return JobList(jobs=jobs.list())

    @app.get("/jobs/{job_id}", response_model=JobRecord)
    def get_job(job_id: str) -> JobRecord:
        record = jobs.get(job_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no such job: {job_id}")
        return record

    @app.get(
        "/experiments/{benchmark}/{condition}/{preset}/{data_seed}/summary",
        response_model=SummaryResponse,
    )
    def summary(benchmark: str, condition: str, preset: str, data_seed: int) -> SummaryResponse:
        try:
            config = ExperimentConfig(
                benchmark=benchmark, condition=condition, preset=preset, data_seed=data_seed
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        exp_dir = experiment_dir(config, root)
        summary_path = exp_dir / "report" / "summary.json"
        if not summary_path.exists():
            raise HTTPException(
                status_code=404, detail=f"no report under {exp_dir}; run the experiment first"
            )
        return SummaryResponse(
            benchmark=benchmark,
            experiment_dir=str(exp_dir),
            summary=json.loads(summary_path.read_text()),
        )

    return app
