"""Experiment orchestration: presets, dataset caching, training runs, reports.

An experiment is (benchmark, condition, preset, seeds). Datasets are built
once per configuration and reused whenever the fingerprinted manifest
matches; finished training runs are likewise skipped on re-execution, so
reproducing a report is cheap and idempotent.

The `desk` preset is sized for a small workstation (or the CI box): a
4-layer model and shrunken corpora that still reproduce the qualitative
orderings. The `paper` preset carries the full-scale shapes and
hyperparameters and is correspondingly expensive.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import codebooks, gridworld, reversals, semantic
from .corpus import Document, corpus_fingerprint, read_corpus, write_corpus
from .evaluation import (
    ContextProvider,
    EvalResult,
    emit_report,
    exact_match_eval,
    model_policy_factory,
    multiple_choice_eval,
    online_success_eval,
    random_policy_factory,
)
from .gridworld import EpisodeSpec, Maze
from .model import CausalTransformer, ModelConfig, load_checkpoint
from .retrieval import RetrievalConfig, index_corpus
from .rng import SeededRng
from .trainer import BatchAssembler, RunManifest, TrainConfig, train_run
from .vocab import Vocab

BENCHMARKS = ("codebooks", "reversals", "semantic_structure", "gridworld_bc")
CONDITIONS = (
    "baseline",
    "retrieval",
    "larger_batch",
    "irrelevant_retrieval",
    "no_icl",
    "seq_batch_grid",
)
PRESETS = ("desk", "paper")

CONDITION_BENCHMARKS = {
    "no_icl": ("codebooks", "reversals"),
    "seq_batch_grid": ("gridworld_bc",),
    "larger_batch": ("codebooks", "reversals"),
    "irrelevant_retrieval": ("codebooks", "reversals", "semantic_structure"),
}


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    condition: str
    preset: str = "desk"
    seeds: tuple[int, ...] = (0, 1, 2, 3)
    data_seed: int = 0
    cue_variant: str = "both"  # semantic structure reporting: strong | reduced | both
    train_overrides: tuple[tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        if self.benchmark not in BENCHMARKS:
            raise ExperimentError(f"unknown benchmark {self.benchmark!r}")
        if self.condition not in CONDITIONS:
            raise ExperimentError(f"unknown condition {self.condition!r}")
        if self.preset not in PRESETS:
            raise ExperimentError(f"unknown preset {self.preset!r}")
        allowed = CONDITION_BENCHMARKS.get(self.condition)
        if allowed and self.benchmark not in allowed:
            raise ExperimentError(
                f"condition {self.condition!r} is not defined for {self.benchmark!r}"
            )
        if self.cue_variant not in ("strong", "reduced", "both"):
            raise ExperimentError(f"unknown cue_variant {self.cue_variant!r}")
        if not self.seeds:
            raise ExperimentError("need at least one seed")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        d["train_overrides"] = {k: v for k, v in self.train_overrides}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data["seeds"] = tuple(data.get("seeds", (0, 1, 2, 3)))
        overrides = data.get("train_overrides", {})
        if isinstance(overrides, dict):
            data["train_overrides"] = tuple(sorted(overrides.items()))
        return cls(**data)


@dataclass(frozen=True)
class BenchmarkPreset:
    dataset: object
    model: dict
    train: TrainConfig
    retrieval: RetrievalConfig
    loss_on: str = "all"
    episodes_per_suite: int = 0          # gridworld only
    saturation_suites: tuple[str, ...] = ()
    saturation_items: int = 48


def _desk_presets() -> dict[str, BenchmarkPreset]:
    model = dict(n_layers=4, d_model=128, d_mlp=256, n_heads=4)
    return {
        "codebooks": BenchmarkPreset(
            dataset=codebooks.CodebooksDatasetConfig(
                n_codebooks=48, n_latent_codebooks=8, latent_pairs_per_codebook=8,
                plaintext_len_range=(4, 10), n_icl_codebooks=8, suite_size=128,
            ),
            model=model,
            train=TrainConfig(
                learning_rate=1e-3, batch_size=32, seq_len=112,
                seq_len_with_retrieval=336, max_steps=4500,
                eval_every=250, min_steps=1000,
            ),
            retrieval=RetrievalConfig(k_total=3),
            saturation_suites=(
                codebooks.SUITE_DEFINITION_RECALL,
                codebooks.SUITE_TRAINED_ENCODING,
                codebooks.SUITE_INCONTEXT_ENCODING,
            ),
        ),
        "reversals": BenchmarkPreset(
            dataset=reversals.ReversalsDatasetConfig(
                n_entities=256, n_relations=8, n_holdout=48,
                repetitions_per_fact=6, suite_size=192,
            ),
            model=model,
            train=TrainConfig(
                learning_rate=7e-4, batch_size=64, seq_len=12,
                seq_len_with_retrieval=48, max_steps=4000,
                eval_every=250, min_steps=750,
            ),
            retrieval=RetrievalConfig(k_total=3),
            saturation_suites=(reversals.SUITE_FORWARD_VALIDATION,),
            saturation_items=64,
        ),
        "semantic_structure": BenchmarkPreset(
            dataset=semantic.SemanticDatasetConfig(
                n_clones=3, n_docs=1500, suite_size=96,
            ),
            model=model,
            train=TrainConfig(
                learning_rate=1e-3, batch_size=32, seq_len=128,
                seq_len_with_retrieval=512, max_steps=3500,
                eval_every=250, min_steps=750,
            ),
            retrieval=RetrievalConfig(k_total=5),
            saturation_suites=(f"{semantic.EVAL_REPHRASE}_{semantic.VARIANT_STRONG}",),
        ),
        "gridworld_bc": BenchmarkPreset(
            dataset=gridworld.GridworldDatasetConfig(
                n_mazes=5, trajectories_per_pair=24, max_doc_len=1023,
            ),
            model=model,
            train=TrainConfig(
                learning_rate=1e-3, batch_size=8, seq_len=1024,
                seq_len_with_retrieval=2048, max_steps=2500,
                eval_every=200, min_steps=600, loss_on="target",
            ),
            retrieval=RetrievalConfig(
                k_total=2, relevant_per_group=2, add_distractors=False,
            ),
            loss_on="target",
            episodes_per_suite=128,
            saturation_suites=(gridworld.SUITE_VALIDATION,),
            saturation_items=24,
        ),
    }


def _paper_presets() -> dict[str, BenchmarkPreset]:
    model = dict(n_layers=12, d_model=1024, d_mlp=2048, n_heads=8)
    return {
        "codebooks": BenchmarkPreset(
            dataset=codebooks.CodebooksDatasetConfig(),
            model=model,
            train=TrainConfig(
                learning_rate=1e-3, batch_size=1024, seq_len=256,
                seq_len_with_retrieval=2048, max_steps=18000,
                eval_every=500, min_steps=4000,
            ),
            retrieval=RetrievalConfig(k_total=5),
            saturation_suites=(
                codebooks.SUITE_DEFINITION_RECALL,
                codebooks.SUITE_TRAINED_ENCODING,
                codebooks.SUITE_INCONTEXT_ENCODING,
            ),
        ),
        "reversals": BenchmarkPreset(
            dataset=reversals.ReversalsDatasetConfig(),
            model=model,
            train=TrainConfig(
                learning_rate=3e-5, batch_size=1024, seq_len=32,
                seq_len_with_retrieval=128, max_steps=16000,
                eval_every=500, min_steps=4000,
            ),
            retrieval=RetrievalConfig(k_total=3),
            saturation_suites=(reversals.SUITE_FORWARD_VALIDATION,),
            saturation_items=64,
        ),
        "semantic_structure": BenchmarkPreset(
            dataset=semantic.SemanticDatasetConfig(),
            model=model,
            train=TrainConfig(
                learning_rate=2e-3, batch_size=1024, seq_len=128,
                seq_len_with_retrieval=1024, max_steps=24000,
                eval_every=500, min_steps=6000,
            ),
            retrieval=RetrievalConfig(k_total=7),
            saturation_suites=(f"{semantic.EVAL_REPHRASE}_{semantic.VARIANT_STRONG}",),
        ),
        "gridworld_bc": BenchmarkPreset(
            dataset=gridworld.GridworldDatasetConfig(),
            model=model,
            train=TrainConfig(
                learning_rate=1e-3, batch_size=64, seq_len=1024,
                seq_len_with_retrieval=4096, max_steps=12000,
                eval_every=400, min_steps=2000, loss_on="target",
            ),
            retrieval=RetrievalConfig(
                k_total=2, relevant_per_group=2, add_distractors=False,
            ),
            loss_on="target",
            episodes_per_suite=500,
            saturation_suites=(gridworld.SUITE_VALIDATION,),
            saturation_items=24,
        ),
    }


def get_preset(preset: str, benchmark: str) -> BenchmarkPreset:
    table = _desk_presets() if preset == "desk" else _paper_presets()
    return table[benchmark]


# ---------------------------------------------------------------------------
# dataset building and caching


@dataclass
class BenchmarkData:
    benchmark: str
    vocab: Vocab
    train_docs: list[Document]
    suites: dict[str, list[Document]] = field(default_factory=dict)
    mazes: dict[int, Maze] = field(default_factory=dict)
    episode_suites: dict[str, list[EpisodeSpec]] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def _dataset_config_dict(cfg: object) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def dataset_key(
    benchmark: str, dataset_cfg: object, data_seed: int, icl_enabled: bool = True
) -> str:
    payload = json.dumps(
        {
            "benchmark": benchmark,
            "config": _dataset_config_dict(dataset_cfg),
            "data_seed": data_seed,
            "icl_enabled": icl_enabled,
        },
        sort_keys=True,
    )
    return hashlib.blake2b(payload.encode(), digest_size=8).hexdigest()


def _with_icl_disabled(benchmark: str, cfg):
    """The no-ICL dataset variant: same document counts, no ICL-supporting docs."""
    if benchmark == "reversals":
        return dataclasses.replace(cfg, icl_enabled=False)
    if benchmark == "codebooks":
        return dataclasses.replace(
            cfg,
            n_encoding_docs=cfg.n_encoding_docs + cfg.n_defenc_docs,
            n_defenc_docs=0,
        )
    raise ExperimentError(f"no-ICL variant undefined for {benchmark!r}")


def build_dataset(
    benchmark: str,
    dataset_cfg: object,
    data_seed: int,
    root: Path | str,
    icl_enabled: bool = True,
    episodes_per_suite: int = 500,
    force: bool = False,
) -> Path:
    """Generate (or reuse) a dataset directory; returns its path."""
    root = Path(root)
    if not icl_enabled:
        dataset_cfg = _with_icl_disabled(benchmark, dataset_cfg)
    key = dataset_key(benchmark, dataset_cfg, data_seed, icl_enabled)
    ds_dir = root / "datasets" / benchmark / key
    manifest_path = ds_dir / "dataset_manifest.json"
    if manifest_path.exists() and not force:
        return ds_dir
    ds_dir.mkdir(parents=True, exist_ok=True)
    rng = SeededRng(data_seed, f"{benchmark}/data")
    fingerprints: dict[str, str] = {}
    counts: dict[str, int] = {}
    chance: dict[str, float] = {}

    if benchmark == "codebooks":
        data = codebooks.generate_dataset(dataset_cfg, rng)
        chance = codebooks.suite_chance_levels(dataset_cfg)
    elif benchmark == "reversals":
        data = reversals.generate_dataset(dataset_cfg, rng)
        chance = reversals.suite_chance_levels(dataset_cfg)
    elif benchmark == "semantic_structure":
        data = semantic.generate_dataset(dataset_cfg, rng)
        chance = semantic.suite_chance_levels(dataset_cfg)
    elif benchmark == "gridworld_bc":
        data = gridworld.generate_dataset(dataset_cfg, rng, episodes_per_suite)
    else:
        raise ExperimentError(f"unknown benchmark {benchmark!r}")

    train_path = ds_dir / "train.jsonl"
    write_corpus(train_path, data.train_docs, data.vocab)
    fingerprints["train"] = corpus_fingerprint(train_path)
    counts["train"] = len(data.train_docs)
    for name, docs in getattr(data, "suites", {}).items():
        path = ds_dir / f"suite_{name}.jsonl"
        write_corpus(path, docs, data.vocab)
        fingerprints[name] = corpus_fingerprint(path)
        counts[name] = len(docs)
    if benchmark == "gridworld_bc":
        gridworld.save_mazes(ds_dir / "mazes.json", data.mazes)
        fingerprints["mazes"] = hashlib.blake2b(
            (ds_dir / "mazes.json").read_bytes(), digest_size=16
        ).hexdigest()
        episodes = {
            suite: [[s.maze_index, s.target, list(s.start)] for s in specs]
            for suite, specs in data.episode_suites.items()
        }
        (ds_dir / "episodes.json").write_text(
            json.dumps(episodes, indent=0, sort_keys=True), encoding="utf-8"
        )
        fingerprints["episodes"] = hashlib.blake2b(
            (ds_dir / "episodes.json").read_bytes(), digest_size=16
        ).hexdigest()
        counts.update({k: len(v) for k, v in data.episode_suites.items()})

    manifest = {
        "benchmark": benchmark,
        "config": _dataset_config_dict(dataset_cfg),
        "data_seed": data_seed,
        "icl_enabled": icl_enabled,
        "key": key,
        "counts": counts,
        "chance_levels": chance,
        "fingerprints": fingerprints,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ds_dir


def load_dataset(benchmark: str, ds_dir: Path | str) -> BenchmarkData:
    ds_dir = Path(ds_dir)
    manifest = json.loads((ds_dir / "dataset_manifest.json").read_text())
    train_docs, vocab = read_corpus(ds_dir / "train.jsonl")
    data = BenchmarkData(
        benchmark=benchmark, vocab=vocab, train_docs=train_docs, manifest=manifest
    )
    for path in sorted(ds_dir.glob("suite_*.jsonl")):
        name = path.stem[len("suite_"):]
        docs, _ = read_corpus(path)
        data.suites[name] = docs
    if benchmark == "gridworld_bc":
        mazes = gridworld.load_mazes(ds_dir / "mazes.json")
        data.mazes = {m.index: m for m in mazes}
        episodes = json.loads((ds_dir / "episodes.json").read_text())
        data.episode_suites = {
            suite: [EpisodeSpec(mi, target, (r, c)) for mi, target, (r, c) in specs]
            for suite, specs in episodes.items()
        }
    return data


# ---------------------------------------------------------------------------
# running experiments


@dataclass(frozen=True)
class SubRun:
    label: str                       # condition label carried into results
    retrieval_mode: str              # none | oracle | irrelevant_only
    batch_multiplier: int = 1
    seq_multiplier: int = 1
    icl_enabled: bool = True


def condition_subruns(config: ExperimentConfig) -> list[SubRun]:
    c = config.condition
    if c == "baseline":
        return [SubRun("baseline", "none")]
    if c == "retrieval":
        return [SubRun("retrieval", "oracle")]
    if c == "larger_batch":
        return [SubRun("ablation-larger_batch", "none", batch_multiplier=4)]
    if c == "irrelevant_retrieval":
        return [SubRun("ablation-irrelevant_retrieval", "irrelevant_only")]
    if c == "no_icl":
        return [SubRun("ablation-no_icl", "oracle", icl_enabled=False)]
    if c == "seq_batch_grid":
        return [
            SubRun("ablation-double_batch", "none", batch_multiplier=2),
            SubRun("ablation-double_seq", "none", seq_multiplier=2),
        ]
    raise ExperimentError(f"unknown condition {c!r}")


def _effective_train_config(
    base: TrainConfig, sub: SubRun, seed: int, overrides: dict
) -> TrainConfig:
    updates: dict = dict(overrides)
    updates["seed"] = seed
    if sub.batch_multiplier != 1:
        updates["batch_size"] = base.batch_size * sub.batch_multiplier
    if sub.seq_multiplier != 1:
        updates["seq_len"] = base.seq_len * sub.seq_multiplier
        updates["seq_len_with_retrieval"] = max(
            base.seq_len_with_retrieval, base.seq_len * sub.seq_multiplier
        )
    return dataclasses.replace(base, **updates)


def _retrieval_config(preset: BenchmarkPreset, sub: SubRun) -> Optional[RetrievalConfig]:
    if sub.retrieval_mode == "none":
        return None
    return dataclasses.replace(preset.retrieval, mode=sub.retrieval_mode)


def _dataset_for_subrun(
    config: ExperimentConfig, preset: BenchmarkPreset, sub: SubRun, root: Path
) -> Path:
    dataset_cfg = preset.dataset
    if config.benchmark == "gridworld_bc" and sub.seq_multiplier != 1:
        dataset_cfg = dataclasses.replace(
            dataset_cfg,
            max_doc_len=preset.train.seq_len * sub.seq_multiplier - 1,
        )
    return build_dataset(
        config.benchmark,
        dataset_cfg,
        config.data_seed,
        root,
        icl_enabled=sub.icl_enabled,
        episodes_per_suite=preset.episodes_per_suite or 500,
    )


def _suite_results(
    benchmark: str,
    model: CausalTransformer,
    data: BenchmarkData,
    context: Optional[ContextProvider],
    label: str,
    seed: int,
    cue_variant: str = "both",
    limit: int = 0,
) -> list[EvalResult]:
    results = []
    if benchmark in ("codebooks", "reversals"):
        for suite, docs in sorted(data.suites.items()):
            subset = docs[:limit] if limit else docs
            results.append(
                exact_match_eval(
                    model, subset, data.vocab, context,
                    suite=suite, condition=label, seed=seed,
                )
            )
    elif benchmark == "semantic_structure":
        for suite, docs in sorted(data.suites.items()):
            if cue_variant != "both" and not suite.endswith(cue_variant):
                continue
            subset = docs[:limit] if limit else docs
            results.append(
                multiple_choice_eval(
                    model, subset, data.vocab, context,
                    suite=suite, condition=label, seed=seed,
                )
            )
    elif benchmark == "gridworld_bc":
        factory = model_policy_factory(model, data.vocab, context)
        for suite, episodes in sorted(data.episode_suites.items()):
            subset = episodes[:limit] if limit else episodes
            results.append(
                online_success_eval(
                    factory, data.mazes, subset,
                    suite=suite, condition=label, seed=seed,
                )
            )
    else:
        raise ExperimentError(f"unknown benchmark {benchmark!r}")
    return results


def _saturation_fn(
    benchmark: str,
    data: BenchmarkData,
    context: Optional[ContextProvider],
    preset: BenchmarkPreset,
) -> Callable[[CausalTransformer], float]:
    def metric(model: CausalTransformer) -> float:
        results = []
        if benchmark == "gridworld_bc":
            factory = model_policy_factory(model, data.vocab, context)
            for suite in preset.saturation_suites:
                episodes = data.episode_suites[suite][: preset.saturation_items]
                results.append(
                    online_success_eval(factory, data.mazes, episodes, suite=suite)
                )
        else:
            for suite in preset.saturation_suites:
                docs = data.suites[suite][: preset.saturation_items]
                if benchmark == "semantic_structure":
                    results.append(
                        multiple_choice_eval(model, docs, data.vocab, context, suite=suite)
                    )
                else:
                    results.append(
                        exact_match_eval(model, docs, data.vocab, context, suite=suite)
                    )
        return sum(r.accuracy for r in results) / len(results)

    return metric


def results_to_json(results: Sequence[EvalResult]) -> str:
    rows = [
        {
            "suite": r.suite, "condition": r.condition, "seed": r.seed,
            "metric": r.metric, "accuracy": r.accuracy, "n_items": r.n_items,
            "ci_low": r.ci_low, "ci_high": r.ci_high, "extra": r.extra,
        }
        for r in results
    ]
    return json.dumps(rows, indent=1, sort_keys=True)


def results_from_json(payload: str) -> list[EvalResult]:
    return [EvalResult(**row) for row in json.loads(payload)]


def experiment_dir(config: ExperimentConfig, root: Path | str) -> Path:
    name = f"{config.benchmark}-{config.condition}-{config.preset}-ds{config.data_seed}"
    return Path(root) / "experiments" / name


def run_experiment(
    config: ExperimentConfig,
    root: Path | str,
    force: bool = False,
    do_train: bool = True,
    do_eval: bool = True,
    progress: Optional[Callable[[str], None]] = None,
) -> Path:
    """Generate data, train every (subrun, seed), evaluate, and report.

    Completed runs whose manifest matches are reused unless `force` is set.
    Returns the experiment directory.
    """
    root = Path(root)
    exp_dir = experiment_dir(config, root)
    exp_dir.mkdir(parents=True, exist_ok=True)
    preset = get_preset(config.preset, config.benchmark)
    say = progress or (lambda msg: None)

    all_results: list[EvalResult] = []
    for sub in condition_subruns(config):
        ds_dir = _dataset_for_subrun(config, preset, sub, root)
        say(f"dataset ready: {ds_dir.name}")
        data = load_dataset(config.benchmark, ds_dir)
        ds_manifest = data.manifest
        retrieval_cfg = _retrieval_config(preset, sub)
        store = index_corpus(data.train_docs) if retrieval_cfg else None

        for seed in config.seeds:
            run_dir = exp_dir / "runs" / f"{sub.label}-seed{seed}"
            train_cfg = _effective_train_config(
                preset.train, sub, seed, dict(config.train_overrides)
            )
            eff_seq = (
                train_cfg.seq_len_with_retrieval if retrieval_cfg else train_cfg.seq_len
            )
            model_cfg = ModelConfig(
                max_seq_len=eff_seq, vocab_size=len(data.vocab), **preset.model
            )
            manifest = RunManifest(
                benchmark=config.benchmark,
                condition=sub.label,
                seed=seed,
                model_config=model_cfg.to_dict(),
                train_config=train_cfg.to_dict(),
                retrieval_config=retrieval_cfg.to_dict() if retrieval_cfg else None,
                dataset_fingerprints=ds_manifest["fingerprints"],
            )
            results_path = run_dir / "results.json"
            done = run_dir / "DONE"
            reusable = (
                not force
                and done.exists()
                and results_path.exists()
                and (run_dir / "manifest.json").exists()
                and RunManifest.load(run_dir / "manifest.json").matches(manifest)
            )
            if reusable:
                say(f"reusing {run_dir.name}")
                all_results.extend(results_from_json(results_path.read_text()))
                continue
            if not do_train:
                raise ExperimentError(
                    f"run {run_dir.name} has no finished artifacts; train it first"
                )
            manifest_file = run_dir / "manifest.json"
            if force or (
                manifest_file.exists()
                and not RunManifest.load(manifest_file).matches(manifest)
            ):
                shutil.rmtree(run_dir)  # stale run under a different configuration
            say(f"training {run_dir.name}")
            assembler = BatchAssembler(
                data.train_docs, data.vocab,
                batch_size=train_cfg.batch_size,
                seq_len=eff_seq,
                loss_on=train_cfg.loss_on,
                rng=SeededRng(train_cfg.seed, f"trainer/{config.benchmark}"),
                retrieval_cfg=retrieval_cfg,
                store=store,
            )
            eval_context = (
                ContextProvider(
                    data.vocab, retrieval_cfg, store,
                    budget=train_cfg.seq_len_with_retrieval - 1,
                    rng=SeededRng(seed, "eval-context"),
                )
                if retrieval_cfg
                else None
            )
            outcome = train_run(
                run_dir, manifest, model_cfg, train_cfg, assembler,
                saturation_eval=_saturation_fn(config.benchmark, data, eval_context, preset),
            )
            say(
                f"finished {run_dir.name}: {outcome.steps_run} steps "
                f"({outcome.stopped_on}), loss {outcome.final_loss:.4f}"
            )
            if do_eval:
                model, _, _, _ = load_checkpoint(outcome.checkpoint)
                model.eval()
                results = _suite_results(
                    config.benchmark, model, data, eval_context,
                    sub.label, seed, config.cue_variant,
                )
                if config.benchmark == "gridworld_bc":
                    walker = random_policy_factory(SeededRng(seed, "random-walk"))
                    for suite, episodes in sorted(data.episode_suites.items()):
                        results.append(
                            online_success_eval(
                                walker, data.mazes, episodes,
                                suite=suite, condition="random_walk", seed=seed,
                            )
                        )
                results_path.write_text(results_to_json(results))
                all_results.extend(results)
                done.write_text(time.strftime("%Y-%m-%dT%H:%M:%S\n"))

    (exp_dir / "experiment.json").write_text(
        json.dumps(
            {"config": config.to_dict(), "created_at": time.strftime("%Y-%m-%dT%H:%M:%S")},
            indent=2, sort_keys=True,
        )
        + "\n"
    )
    if do_eval and all_results:
        emit_report(all_results, exp_dir / "report", config.benchmark)
    return exp_dir


def load_summary(exp_dir: Path | str) -> dict:
    path = Path(exp_dir) / "report" / "summary.json"
    return json.loads(path.read_text())


def mean_accuracy(summary: dict, benchmark: str, suite: str, condition: str) -> float:
    return summary[benchmark][suite][condition]["mean_accuracy"]
