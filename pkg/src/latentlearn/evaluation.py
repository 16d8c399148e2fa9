"""Evaluation suites, confidence intervals, and report emission.

Three evaluator families cover every benchmark: teacher-forced accuracy over
target segments (codebooks, reversals), multiple choice by log-likelihood
ranking (semantic structure), and online episode success (gridworld).
Per-run rows carry Wilson binomial intervals; across-seed aggregation uses
t-based intervals. Report emission is deterministic: re-emitting the same
results is byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import torch
from scipy import stats

from .corpus import Document, TARGET
from .gridworld import (
    ACTION_SYMBOLS,
    EpisodeSpec,
    Maze,
    default_step_budget,
    maze_symbol,
    run_online_episode,
)
from .model import CausalTransformer, KVCache, ModelError, score_continuations
from .retrieval import EpisodeStore, RetrievalConfig, assemble_context, retrieve
from .rng import SeededRng
from .vocab import Vocab


class EvalError(ValueError):
    pass


Z_95 = 1.959963984540054


def wilson_interval(successes: int, n: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n < 1:
        raise EvalError("Wilson interval needs n >= 1")
    p = successes / n
    z2 = Z_95 * Z_95
    denom = 1 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = Z_95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return (min(max(0.0, center - half), p), max(min(1.0, center + half), p))


def t_interval(values: Sequence[float]) -> tuple[float, float]:
    """95% t-based interval of the mean across runs (needs >= 2 runs)."""
    if len(values) < 2:
        raise EvalError("across-run interval needs at least two runs")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    half = float(stats.t.ppf(0.975, df=len(arr) - 1)) * sd / math.sqrt(len(arr))
    return (max(0.0, mean - half), min(1.0, mean + half))


@dataclass
class EvalResult:
    suite: str
    condition: str
    seed: int
    metric: str
    accuracy: float
    n_items: int
    ci_low: float
    ci_high: float
    extra: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.ci_low <= self.accuracy <= self.ci_high <= 1.0):
            raise EvalError(
                f"inconsistent result bounds: {self.ci_low}, {self.accuracy}, {self.ci_high}"
            )


class ContextProvider:
    """Applies the run's retrieval condition to evaluation inputs.

    Retrieval draws are keyed by each item's doc_id, so re-evaluation of the
    same suite is deterministic regardless of item order.
    """

    def __init__(
        self,
        vocab: Vocab,
        retrieval_cfg: Optional[RetrievalConfig] = None,
        store: Optional[EpisodeStore] = None,
        budget: int = 0,
        rng: Optional[SeededRng] = None,
    ):
        self.vocab = vocab
        self.cfg = retrieval_cfg
        self.store = store
        self.budget = budget
        self.rng = rng or SeededRng(0, "eval-context")
        self.enabled = retrieval_cfg is not None and retrieval_cfg.mode != "none"
        if self.enabled and store is None:
            raise EvalError("retrieval-conditioned evaluation needs an episode store")

    def assemble(self, doc: Document) -> Document:
        if not self.enabled:
            return doc
        episodes = retrieve(
            self.store, doc.meta, self.cfg, self.rng.child(doc.meta.get("doc_id", "?"))
        )
        return assemble_context(episodes, doc, self.budget, self.vocab.eod_id)

    def context_tokens(self, query_meta: Mapping[str, str]) -> list[int]:
        """Retrieved context as a flat token list (for online episodes)."""
        if not self.enabled:
            return []
        episodes = retrieve(
            self.store, query_meta, self.cfg,
            self.rng.child(query_meta.get("doc_id", "?")),
        )
        shell = Document(tokens=[], segments=[], meta=dict(query_meta))
        assembled = assemble_context(episodes, shell, self.budget, self.vocab.eod_id)
        return assembled.tokens


@torch.no_grad()
def exact_match_eval(
    model: CausalTransformer,
    docs: Sequence[Document],
    vocab: Vocab,
    context: Optional[ContextProvider] = None,
    suite: str = "",
    condition: str = "baseline",
    seed: int = 0,
    batch_size: int = 64,
) -> EvalResult:
    """Teacher-forced per-token accuracy over target segments.

    Whole-sequence exact match rides along in `extra`.
    """
    if not docs:
        raise EvalError(f"suite {suite!r} is empty")
    model.eval()
    token_correct = token_total = 0
    doc_exact = 0
    for lo in range(0, len(docs), batch_size):
        chunk = docs[lo: lo + batch_size]
        assembled = [context.assemble(d) if context else d for d in chunk]
        width = max(len(d.tokens) for d in assembled)
        if width > model.cfg.max_seq_len:
            raise EvalError(f"document of {width} tokens exceeds model context")
        rows = [list(d.tokens) + [vocab.pad_id] * (width - len(d.tokens)) for d in assembled]
        logits = model(torch.tensor(rows, dtype=torch.long))
        preds = logits.argmax(dim=-1)
        for i, doc in enumerate(assembled):
            positions = doc.positions_of(TARGET)
            ok = all(
                int(preds[i, p - 1]) == doc.tokens[p] for p in positions
            )
            token_correct += sum(
                1 for p in positions if int(preds[i, p - 1]) == doc.tokens[p]
            )
            token_total += len(positions)
            doc_exact += int(ok)
    if token_total == 0:
        raise EvalError(f"suite {suite!r} has no target positions")
    acc = token_correct / token_total
    lo_ci, hi_ci = wilson_interval(token_correct, token_total)
    return EvalResult(
        suite=suite, condition=condition, seed=seed, metric="token_accuracy",
        accuracy=acc, n_items=len(docs), ci_low=lo_ci, ci_high=hi_ci,
        extra={"exact_match": doc_exact / len(docs), "n_target_tokens": float(token_total)},
    )


@torch.no_grad()
def multiple_choice_eval(
    model: CausalTransformer,
    items: Sequence[Document],
    vocab: Vocab,
    context: Optional[ContextProvider] = None,
    suite: str = "",
    condition: str = "baseline",
    seed: int = 0,
) -> EvalResult:
    """Accuracy of log-likelihood ranking over each item's candidate set.

    Ties resolve to the lowest choice index; over-length items are skipped
    and counted in the skip report.
    """
    if not items:
        raise EvalError(f"suite {suite!r} is empty")
    model.eval()
    correct = scored = skipped = ties = 0
    for doc in items:
        choices = doc.meta["choices"].split("|")
        answer = int(doc.meta["answer_index"])
        if len(choices) < 2:
            raise EvalError(f"item {doc.meta.get('doc_id')} has fewer than 2 choices")
        assembled = context.assemble(doc) if context else doc
        conts = [vocab.encode(c.split(" ")) for c in choices]
        longest = max(len(c) for c in conts)
        if len(assembled.tokens) + longest > model.cfg.max_seq_len:
            skipped += 1
            continue
        scores = score_continuations(model, assembled.tokens, conts)
        best = int(np.argmax(scores))
        if sum(1 for s in scores if s == scores[best]) > 1:
            ties += 1
        correct += int(best == answer)
        scored += 1
    if scored == 0:
        raise EvalError(f"suite {suite!r}: every item was over-length")
    acc = correct / scored
    lo_ci, hi_ci = wilson_interval(correct, scored)
    return EvalResult(
        suite=suite, condition=condition, seed=seed, metric="mc_accuracy",
        accuracy=acc, n_items=scored, ci_low=lo_ci, ci_high=hi_ci,
        extra={"skipped": float(skipped), "ties": float(ties)},
    )


class TokenPolicy:
    """Greedy next-token policy over the interleaved observation/action format.

    Keeps an incremental cache; when the token history would exceed the model
    context, the oldest observation/action blocks are dropped (the cue and any
    retrieved context are always kept) and the cache is rebuilt.
    """

    def __init__(self, model: CausalTransformer, vocab: Vocab, prelude: Sequence[int]):
        self.model = model
        self.vocab = vocab
        self.prelude = list(prelude)
        self.blocks: list[list[int]] = []
        self.pending: list[int] = list(prelude)
        self.cache = KVCache(model.cfg.n_layers)
        self.block_tokens = 26  # 25 window symbols + 1 action

    def _rebuild(self) -> None:
        keep = (self.model.cfg.max_seq_len - len(self.prelude)) // self.block_tokens - 1
        self.blocks = self.blocks[-max(keep, 1):]
        self.cache = KVCache(self.model.cfg.n_layers)
        self.pending = list(self.prelude) + [t for b in self.blocks for t in b]

    @torch.no_grad()
    def __call__(self, obs: list[str]) -> str:
        obs_ids = self.vocab.encode(obs)
        total = self.cache.length + len(self.pending) + len(obs_ids) + 1
        if total > self.model.cfg.max_seq_len:
            self._rebuild()
        feed = self.pending + obs_ids
        self.pending = []
        logits = self.model(torch.tensor([feed], dtype=torch.long), cache=self.cache)
        action_id = int(logits[0, -1].argmax())
        self.blocks.append(obs_ids + [action_id])
        self.pending = [action_id]
        return self.vocab.symbol_of(action_id)


def model_policy_factory(
    model: CausalTransformer,
    vocab: Vocab,
    context: Optional[ContextProvider] = None,
) -> Callable[[EpisodeSpec, Maze], Callable[[list[str]], str]]:
    def make(spec: EpisodeSpec, maze: Maze) -> Callable[[list[str]], str]:
        query = {
            "doc_id": f"ep-{spec.maze_index}-{spec.target}-{spec.start[0]}-{spec.start[1]}",
            "needs": f"bct:{maze_symbol(spec.maze_index)}:{spec.target}",
            "start": f"{spec.start[0]},{spec.start[1]}",
        }
        ctx = context.context_tokens(query) if context else []
        cue = vocab.encode([spec.target, maze_symbol(spec.maze_index)])
        return TokenPolicy(model, vocab, ctx + cue)

    return make


def random_policy_factory(rng: SeededRng) -> Callable[[EpisodeSpec, Maze], Callable[[list[str]], str]]:
    def make(spec: EpisodeSpec, maze: Maze) -> Callable[[list[str]], str]:
        gen = rng.child(spec.maze_index, spec.target, spec.start[0], spec.start[1]).generator()

        def step(obs: list[str]) -> str:
            return ACTION_SYMBOLS[int(gen.integers(0, len(ACTION_SYMBOLS)))]

        return step

    return make


def online_success_eval(
    policy_factory: Callable[[EpisodeSpec, Maze], Callable[[list[str]], str]],
    mazes: Mapping[int, Maze],
    episodes: Sequence[EpisodeSpec],
    suite: str = "",
    condition: str = "baseline",
    seed: int = 0,
    budget_fn: Callable[[Maze, tuple[int, int], str], int] = default_step_budget,
) -> EvalResult:
    """Success rate of online episodes, with a binomial Wilson interval."""
    if not episodes:
        raise EvalError(f"suite {suite!r} is empty")
    successes = 0
    total_steps = 0
    for spec in episodes:
        maze = mazes[spec.maze_index]
        policy = policy_factory(spec, maze)
        budget = budget_fn(maze, spec.start, spec.target)
        result = run_online_episode(maze, spec.target, spec.start, policy, budget)
        successes += int(result.success)
        total_steps += result.steps_taken
    acc = successes / len(episodes)
    lo_ci, hi_ci = wilson_interval(successes, len(episodes))
    return EvalResult(
        suite=suite, condition=condition, seed=seed, metric="success_rate",
        accuracy=acc, n_items=len(episodes), ci_low=lo_ci, ci_high=hi_ci,
        extra={"mean_steps": total_steps / len(episodes)},
    )


def confidence_interval(
    per_seed: Optional[Sequence[float]] = None,
    binomial: Optional[tuple[int, int]] = None,
) -> tuple[float, float]:
    """Across-run t interval, or Wilson interval for (successes, n)."""
    if (per_seed is None) == (binomial is None):
        raise EvalError("pass exactly one of per_seed or binomial")
    if per_seed is not None:
        return t_interval(per_seed)
    return wilson_interval(*binomial)


RESULT_COLUMNS = (
    "benchmark", "suite", "condition", "seed", "metric",
    "n_items", "accuracy", "ci_low", "ci_high",
)


def emit_report(
    results: Sequence[EvalResult], out_dir: Path | str, benchmark: str
) -> dict[str, Path]:
    """Per-seed rows, across-seed summary, and a machine-readable index.

    Output is sorted and fixed-format so re-emission from the same results
    is byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = sorted(results, key=lambda r: (r.suite, r.condition, r.seed, r.metric))

    results_path = out_dir / "results.csv"
    with results_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow(
                [benchmark, r.suite, r.condition, r.seed, r.metric,
                 r.n_items, f"{r.accuracy:.6f}", f"{r.ci_low:.6f}", f"{r.ci_high:.6f}"]
            )

    grouped: dict[tuple[str, str, str], list[EvalResult]] = {}
    for r in rows:
        grouped.setdefault((r.suite, r.condition, r.metric), []).append(r)
    summary_path = out_dir / "summary.csv"
    summary: dict[str, dict] = {}
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["benchmark", "suite", "condition", "metric", "n_seeds",
             "mean_accuracy", "ci_low", "ci_high"]
        )
        for (suite, condition, metric), group in sorted(grouped.items()):
            accs = [g.accuracy for g in group]
            mean = sum(accs) / len(accs)
            if len(accs) >= 2:
                lo, hi = t_interval(accs)
            else:
                lo, hi = group[0].ci_low, group[0].ci_high
            writer.writerow(
                [benchmark, suite, condition, metric, len(accs),
                 f"{mean:.6f}", f"{lo:.6f}", f"{hi:.6f}"]
            )
            summary.setdefault(suite, {})[condition] = {
                "metric": metric,
                "mean_accuracy": round(mean, 6),
                "ci_low": round(lo, 6),
                "ci_high": round(hi, 6),
                "n_seeds": len(accs),
                "per_seed": {str(g.seed): round(g.accuracy, 6) for g in group},
            }

    json_path = out_dir / "summary.json"
    json_path.write_text(
        json.dumps({benchmark: summary}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return {"results": results_path, "summary": summary_path, "json": json_path}
