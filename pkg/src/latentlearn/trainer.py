"""Causal-LM training loop with retrieval-aware batch assembly.

Batches are a pure function of (seed, step): document sampling uses named
counter streams, so a retrieval run and a baseline run with the same seed
train on the same current documents, and resuming a run reproduces the next
step bit-for-bit. Loss masks exclude retrieved context and padding, and the
first token of the current document, so the number of loss-bearing tokens
per step is identical with and without retrieval.
"""

from __future__ import annotations

import csv
import json
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from .corpus import Document, RETRIEVED, TARGET
from .model import (
    CausalTransformer,
    ModelConfig,
    causal_lm_loss,
    load_checkpoint,
    save_checkpoint,
)
from .retrieval import EpisodeStore, RetrievalConfig, assemble_context, retrieve
from .rng import SeededRng
from .vocab import Vocab

LOSS_ON_ALL = "all"
LOSS_ON_TARGET = "target"


class TrainError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    seq_len: int
    seq_len_with_retrieval: int
    max_steps: int
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    grad_clip: float = 1.0
    seed: int = 0
    loss_on: str = LOSS_ON_ALL
    eval_every: int = 200
    checkpoint_every: int = 0
    min_steps: int = 200
    saturation_patience: int = 4
    saturation_delta: float = 0.005
    saturation_ceiling: float = 0.985

    def __post_init__(self) -> None:
        if self.seq_len_with_retrieval < self.seq_len:
            raise TrainError("seq_len_with_retrieval must be >= seq_len")
        if self.loss_on not in (LOSS_ON_ALL, LOSS_ON_TARGET):
            raise TrainError(f"unknown loss_on setting {self.loss_on!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        data["betas"] = tuple(data["betas"])
        return cls(**data)


def code_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


@dataclass
class RunManifest:
    benchmark: str
    condition: str
    seed: int
    model_config: dict
    train_config: dict
    retrieval_config: Optional[dict]
    dataset_fingerprints: dict[str, str]
    code_revision: str = field(default_factory=code_revision)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def matches(self, other: "RunManifest") -> bool:
        a, b = asdict(self), asdict(other)
        a.pop("code_revision"), b.pop("code_revision")
        return a == b


class BatchAssembler:
    """Turns a corpus into fixed-shape (tokens, loss-mask) training batches."""

    def __init__(
        self,
        docs: Sequence[Document],
        vocab: Vocab,
        batch_size: int,
        seq_len: int,
        loss_on: str,
        rng: SeededRng,
        retrieval_cfg: Optional[RetrievalConfig] = None,
        store: Optional[EpisodeStore] = None,
    ):
        if not docs:
            raise TrainError("empty corpus")
        self.docs = list(docs)
        self.vocab = vocab
        self.batch_size = batch_size
        self.seq_len = seq_len
        self.loss_on = loss_on
        self.rng = rng
        self.retrieval_cfg = retrieval_cfg
        self.store = store
        self.retrieval_on = retrieval_cfg is not None and retrieval_cfg.mode != "none"
        if self.retrieval_on and store is None:
            raise TrainError("retrieval enabled but no episode store given")
        for doc in self.docs:
            if len(doc.tokens) + 1 > seq_len and not self.retrieval_on:
                raise TrainError(
                    f"document {doc.meta.get('doc_id')} does not fit seq_len {seq_len}; "
                    "regenerate the dataset with a smaller document budget"
                )

    def _row(self, doc: Document, step: int, slot: int) -> tuple[list[int], list[int], int]:
        """Token row, loss-mask row, and retrieved-token count for one slot."""
        offset = 0
        if self.retrieval_on:
            episodes = retrieve(
                self.store, doc.meta, self.retrieval_cfg,
                self.rng.child("retrieve", step, slot),
            )
            assembled = assemble_context(
                episodes, doc, self.seq_len - 1, self.vocab.eod_id
            )
            for seg in assembled.segments:
                if seg.kind == RETRIEVED:
                    offset = seg.end
            row_doc = assembled
        else:
            row_doc = doc
        tokens = list(row_doc.tokens) + [self.vocab.eod_id]
        mask = [0] * len(tokens)
        if self.loss_on == LOSS_ON_ALL:
            # current document plus its end marker, except the document's
            # first token: that keeps loss-token counts identical whether or
            # not retrieved context precedes the document
            for p in range(offset + 1, len(tokens)):
                mask[p] = 1
        else:
            for seg in row_doc.segments:
                if seg.kind == TARGET:
                    for p in range(seg.start, seg.end):
                        mask[p] = 1
        pad = self.seq_len - len(tokens)
        tokens.extend([self.vocab.pad_id] * pad)
        mask.extend([0] * pad)
        return tokens, mask, offset

    def batch(self, step: int) -> tuple[torch.Tensor, torch.Tensor, dict[str, int]]:
        gen = self.rng.child("batch", step).generator()
        indices = gen.integers(0, len(self.docs), size=self.batch_size)
        rows, masks = [], []
        audit = {"loss_tokens": 0, "retrieved_tokens": 0}
        for slot, idx in enumerate(indices):
            tokens, mask, offset = self._row(self.docs[int(idx)], step, slot)
            if any(m and p < offset for p, m in enumerate(mask)):
                raise TrainError("loss mask leaked into retrieved context")
            audit["loss_tokens"] += sum(mask)
            audit["retrieved_tokens"] += offset
            rows.append(tokens)
            masks.append(mask)
        return (
            torch.tensor(rows, dtype=torch.long),
            torch.tensor(masks, dtype=torch.float32),
            audit,
        )


def build_optimizer(model: CausalTransformer, cfg: TrainConfig) -> torch.optim.Optimizer:
    return torch.optim.Adam(
        model.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.eps
    )


def train_step(
    model: CausalTransformer,
    optimizer: torch.optim.Optimizer,
    tokens: torch.Tensor,
    mask: torch.Tensor,
    grad_clip: float,
) -> tuple[float, int]:
    loss, n_tokens = causal_lm_loss(model, tokens, mask)
    value = float(loss.detach())
    if not np.isfinite(value):
        raise TrainError(f"non-finite loss {value}")
    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    if grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    return value, n_tokens


@dataclass
class TrainResult:
    checkpoint: Path
    steps_run: int
    final_loss: float
    stopped_on: str  # "saturation" or "max_steps"


def train_run(
    run_dir: Path | str,
    manifest: RunManifest,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    assembler: BatchAssembler,
    saturation_eval: Optional[Callable[[CausalTransformer], float]] = None,
    resume: bool = True,
    log_every: int = 25,
) -> TrainResult:
    """Train to saturation or the step ceiling, checkpointing into run_dir.

    A matching manifest plus a `last.pt` checkpoint resumes mid-run and
    reproduces the remaining steps exactly (batches are stateless in the
    step index).
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = run_dir / "manifest.json"
    last_path = run_dir / "last.pt"
    if manifest_path.exists():
        previous = RunManifest.load(manifest_path)
        if not previous.matches(manifest):
            raise TrainError(f"{run_dir} holds a run with a different manifest")
    manifest.save(manifest_path)

    start_step = 0
    if resume and last_path.exists():
        model, opt_state, start_step, _ = load_checkpoint(last_path)
        optimizer = build_optimizer(model, train_cfg)
        optimizer.load_state_dict(opt_state)
    else:
        torch.manual_seed(train_cfg.seed * 7919 + 13)
        model = CausalTransformer(model_cfg)
        optimizer = build_optimizer(model, train_cfg)

    train_log = run_dir / "train_log.csv"
    eval_log = run_dir / "eval_log.csv"
    mode = "a" if start_step > 0 else "w"
    best_metric = -1.0
    stale_rounds = 0
    stopped_on = "max_steps"
    final_loss = float("nan")
    t0 = time.monotonic()
    with train_log.open(mode, newline="") as ftrain, eval_log.open(mode, newline="") as feval:
        train_writer = csv.writer(ftrain)
        eval_writer = csv.writer(feval)
        if start_step == 0:
            train_writer.writerow(["step", "loss", "loss_tokens", "retrieved_tokens", "elapsed_s"])
            eval_writer.writerow(["step", "saturation_metric"])
        step = start_step
        while step < train_cfg.max_steps:
            tokens, mask, audit = assembler.batch(step)
            try:
                final_loss, _ = train_step(
                    model, optimizer, tokens, mask, train_cfg.grad_clip
                )
            except TrainError:
                save_checkpoint(
                    run_dir / "diagnostic.pt", model, optimizer, step,
                    extra={"failed_step": step},
                )
                raise
            step += 1
            if step % log_every == 0 or step == train_cfg.max_steps:
                train_writer.writerow(
                    [step, f"{final_loss:.6f}", audit["loss_tokens"],
                     audit["retrieved_tokens"], f"{time.monotonic() - t0:.1f}"]
                )
                ftrain.flush()
            if train_cfg.checkpoint_every and step % train_cfg.checkpoint_every == 0:
                save_checkpoint(last_path, model, optimizer, step)
            if saturation_eval is not None and step % train_cfg.eval_every == 0:
                model.eval()
                metric = float(saturation_eval(model))
                model.train()
                eval_writer.writerow([step, f"{metric:.6f}"])
                feval.flush()
                if metric > best_metric + train_cfg.saturation_delta:
                    best_metric = metric
                    stale_rounds = 0
                else:
                    stale_rounds += 1
                saturated = metric >= train_cfg.saturation_ceiling or (
                    stale_rounds >= train_cfg.saturation_patience
                )
                if step >= train_cfg.min_steps and saturated:
                    stopped_on = "saturation"
                    break
    save_checkpoint(last_path, model, optimizer, step)
    final_path = run_dir / "checkpoint.pt"
    save_checkpoint(final_path, model, optimizer, step, extra={"stopped_on": stopped_on})
    return TrainResult(
        checkpoint=final_path, steps_run=step, final_loss=final_loss, stopped_on=stopped_on
    )
