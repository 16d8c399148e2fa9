"""Decoder-only causal transformer with teacher-forced scoring and decoding.

Pre-norm blocks, GELU MLPs, learned absolute positions, weight-tied
input/output embeddings. Sized by :class:`ModelConfig`; the shipped presets
live in :mod:`latentlearn.experiments`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int
    d_model: int
    d_mlp: int
    n_heads: int
    max_seq_len: int
    vocab_size: int
    position_encoding_kind: str = "learned"

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ModelError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if self.position_encoding_kind != "learned":
            raise ModelError(
                f"unsupported position encoding: {self.position_encoding_kind!r}"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


class KVCache:
    """Per-layer key/value tensors for incremental decoding."""

    def __init__(self, n_layers: int):
        self.keys: list[Optional[torch.Tensor]] = [None] * n_layers
        self.values: list[Optional[torch.Tensor]] = [None] * n_layers
        self.length = 0

    def append(self, layer: int, k: torch.Tensor, v: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if self.keys[layer] is None:
            self.keys[layer], self.values[layer] = k, v
        else:
            self.keys[layer] = torch.cat([self.keys[layer], k], dim=2)
            self.values[layer] = torch.cat([self.values[layer], v], dim=2)
        return self.keys[layer], self.values[layer]


class _Attention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_model // cfg.n_heads
        self.qkv = nn.Linear(cfg.d_model, 3 * cfg.d_model)
        self.proj = nn.Linear(cfg.d_model, cfg.d_model)

    def forward(self, x: torch.Tensor, layer: int, cache: Optional[KVCache]) -> torch.Tensor:
        bsz, seq, _ = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)

        def split(t: torch.Tensor) -> torch.Tensor:
            return t.view(bsz, seq, self.n_heads, self.d_head).transpose(1, 2)

        q, k, v = split(q), split(k), split(v)
        if cache is None:
            out = F.scaled_dot_product_attention(q, k, v, is_causal=True)
        else:
            past = cache.length
            k, v = cache.append(layer, k, v)
            if past == 0:
                out = F.scaled_dot_product_attention(q, k, v, is_causal=True)
            elif seq == 1:
                out = F.scaled_dot_product_attention(q, k, v)
            else:
                # queries are positions past..past+seq-1 over past+seq keys
                mask = torch.ones(seq, past + seq, dtype=torch.bool, device=x.device)
                mask = torch.tril(mask, diagonal=past)
                out = F.scaled_dot_product_attention(q, k, v, attn_mask=mask)
        out = out.transpose(1, 2).reshape(bsz, seq, -1)
        return self.proj(out)


class _Block(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = _Attention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_mlp),
            nn.GELU(),
            nn.Linear(cfg.d_mlp, cfg.d_model),
        )

    def forward(self, x: torch.Tensor, layer: int, cache: Optional[KVCache]) -> torch.Tensor:
        x = x + self.attn(self.ln1(x), layer, cache)
        return x + self.mlp(self.ln2(x))


class CausalTransformer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.tok_emb = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.pos_emb = nn.Embedding(cfg.max_seq_len, cfg.d_model)
        self.blocks = nn.ModuleList(_Block(cfg) for _ in range(cfg.n_layers))
        self.ln_f = nn.LayerNorm(cfg.d_model)
        self.apply(self._init_weights)
        # residual-branch output projections get a depth-scaled init
        scale = 0.02 / math.sqrt(2 * cfg.n_layers)
        for block in self.blocks:
            nn.init.normal_(block.attn.proj.weight, std=scale)
            nn.init.normal_(block.mlp[2].weight, std=scale)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, std=0.02)

    def _check_tokens(self, tokens: torch.Tensor, start: int) -> None:
        if tokens.dim() != 2:
            raise ModelError(f"expected (batch, seq) tokens, got shape {tuple(tokens.shape)}")
        if start + tokens.shape[1] > self.cfg.max_seq_len:
            raise ModelError(
                f"sequence length {start + tokens.shape[1]} exceeds max_seq_len "
                f"{self.cfg.max_seq_len}"
            )
        if tokens.numel() and int(tokens.max()) >= self.cfg.vocab_size:
            raise ModelError(
                f"token id {int(tokens.max())} outside vocabulary of size {self.cfg.vocab_size}"
            )

    def forward(self, tokens: torch.Tensor, cache: Optional[KVCache] = None) -> torch.Tensor:
        """Next-token logits of shape (batch, seq, vocab).

        With a cache, `tokens` are appended after the cached positions and
        only their logits are returned.
        """
        start = cache.length if cache is not None else 0
        self._check_tokens(tokens, start)
        positions = torch.arange(start, start + tokens.shape[1], device=tokens.device)
        x = self.tok_emb(tokens) + self.pos_emb(positions)[None]
        for i, block in enumerate(self.blocks):
            x = block(x, i, cache)
        if cache is not None:
            cache.length += tokens.shape[1]
        x = self.ln_f(x)
        return F.linear(x, self.tok_emb.weight)


def causal_lm_loss(
    model: CausalTransformer, tokens: torch.Tensor, loss_mask: torch.Tensor
) -> tuple[torch.Tensor, int]:
    """Mean cross-entropy over positions whose mask entry is set.

    `loss_mask[b, t]` marks token t of row b as a prediction target; position
    0 can never be one. Masked-out positions (retrieved context, padding)
    contribute no loss term but still shape the predictions made at other
    positions, so gradients flow through their representations.
    """
    if loss_mask.shape != tokens.shape:
        raise ModelError(
            f"loss mask shape {tuple(loss_mask.shape)} != tokens shape {tuple(tokens.shape)}"
        )
    target_mask = loss_mask[:, 1:]
    n_tokens = int(target_mask.sum())
    if n_tokens == 0:
        raise ModelError("all positions are masked out; nothing to train on")
    logits = model(tokens)[:, :-1]
    logprobs = F.log_softmax(logits, dim=-1)
    picked = logprobs.gather(-1, tokens[:, 1:].unsqueeze(-1)).squeeze(-1)
    loss = -(picked * target_mask).sum() / n_tokens
    return loss, n_tokens


@torch.no_grad()
def greedy_decode(
    model: CausalTransformer, prefix: Sequence[int], n_tokens: int
) -> list[int]:
    """Deterministic argmax continuation of `prefix` by `n_tokens` tokens."""
    if len(prefix) + n_tokens > model.cfg.max_seq_len:
        raise ModelError("prefix plus continuation exceeds max_seq_len")
    if not prefix:
        raise ModelError("prefix must be non-empty")
    device = model.tok_emb.weight.device
    cache = KVCache(model.cfg.n_layers)
    tokens = torch.tensor([list(prefix)], dtype=torch.long, device=device)
    out: list[int] = []
    logits = model(tokens, cache=cache)[:, -1]
    for _ in range(n_tokens):
        nxt = int(logits.argmax(dim=-1))
        out.append(nxt)
        if len(out) == n_tokens:
            break
        step = torch.tensor([[nxt]], dtype=torch.long, device=device)
        logits = model(step, cache=cache)[:, -1]
    return out


@torch.no_grad()
def score_continuation(
    model: CausalTransformer, prefix: Sequence[int], continuation: Sequence[int]
) -> float:
    """Sum of log-probabilities of `continuation` given `prefix` (0.0 if empty)."""
    return score_continuations(model, prefix, [list(continuation)])[0]


@torch.no_grad()
def score_continuations(
    model: CausalTransformer, prefix: Sequence[int], continuations: Sequence[Sequence[int]]
) -> list[float]:
    """Log-likelihood of each candidate continuation given a shared prefix."""
    if not prefix:
        raise ModelError("prefix must be non-empty")
    scores = [0.0] * len(continuations)
    todo = [(i, list(c)) for i, c in enumerate(continuations) if c]
    if not todo:
        return scores
    longest = max(len(c) for _, c in todo)
    if len(prefix) + longest > model.cfg.max_seq_len:
        raise ModelError("prefix plus continuation exceeds max_seq_len")
    device = model.tok_emb.weight.device
    rows = []
    for _, cont in todo:
        rows.append(list(prefix) + cont + [0] * (longest - len(cont)))
    tokens = torch.tensor(rows, dtype=torch.long, device=device)
    logprobs = F.log_softmax(model(tokens), dim=-1)
    p = len(prefix)
    for row, (i, cont) in enumerate(todo):
        total = 0.0
        for j, tok in enumerate(cont):
            total += float(logprobs[row, p + j - 1, tok])
        scores[i] = total
    return scores


CHECKPOINT_FORMAT = "latentlearn.checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Path | str,
    model: CausalTransformer,
    optimizer: Optional[torch.optim.Optimizer],
    step: int,
    extra: Optional[dict] = None,
) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model_config": model.cfg.to_dict(),
        "step": step,
        "model_state": model.state_dict(),
        "optimizer_state": optimizer.state_dict() if optimizer is not None else None,
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(
    path: Path | str,
) -> tuple[CausalTransformer, Optional[dict], int, dict]:
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ModelError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ModelError(f"{path}: unsupported checkpoint version")
    model = CausalTransformer(ModelConfig.from_dict(payload["model_config"]))
    model.load_state_dict(payload["model_state"])
    return model, payload["optimizer_state"], payload["step"], payload["extra"]
