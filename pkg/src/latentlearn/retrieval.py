"""Oracle episodic store and retrieval-augmented context assembly.

Documents are indexed by the relevance keys their generators wrote into
metadata (`provides`); a query's `needs` lists key groups, and oracle
retrieval returns at least one stored episode per group plus uniformly
sampled irrelevant distractors. Gridworld queries additionally filter by
start-cell proximity. Retrieved episodes are prepended to the current
document inside `retrieved` segments so the trainer can mask their loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

from .corpus import RETRIEVED, CorpusError, Document, Segment
from .rng import SeededRng

MODE_ORACLE = "oracle"
MODE_IRRELEVANT = "irrelevant_only"
MODE_NONE = "none"
MODES = (MODE_ORACLE, MODE_IRRELEVANT, MODE_NONE)


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class RetrievalConfig:
    mode: str = MODE_ORACLE
    k_total: int = 5
    relevant_per_group: int = 1
    add_distractors: bool = True
    bc_start_radius: int = 2

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise RetrievalError(f"unknown retrieval mode {self.mode!r}")
        if not 1 <= self.k_total <= 16:
            raise RetrievalError(f"k_total out of range: {self.k_total}")
        if self.relevant_per_group < 1:
            raise RetrievalError("relevant_per_group must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RetrievalConfig":
        return cls(**data)


@dataclass
class RetrievedEpisode:
    doc: Document
    relevant: bool


def _parse_cell(raw: str) -> tuple[int, int]:
    r, c = raw.split(",")
    return int(r), int(c)


class EpisodeStore:
    """Immutable index over a training corpus, keyed by generation metadata."""

    def __init__(self, docs: Sequence[Document]):
        self.docs = list(docs)
        self.by_key: dict[str, list[int]] = {}
        self.index_of_id: dict[str, int] = {}
        for i, doc in enumerate(self.docs):
            doc_id = doc.meta.get("doc_id")
            if not doc_id:
                raise RetrievalError(f"document {i} has no doc_id metadata")
            keys = doc.provides_keys()
            if not keys:
                raise RetrievalError(f"document {doc_id} has no relevance keys ('provides')")
            if doc_id in self.index_of_id:
                raise RetrievalError(f"duplicate doc_id {doc_id!r}")
            self.index_of_id[doc_id] = i
            for key in keys:
                self.by_key.setdefault(key, []).append(i)

    def __len__(self) -> int:
        return len(self.docs)

    def lookup(self, key: str) -> list[Document]:
        return [self.docs[i] for i in self.by_key.get(key, [])]


def index_corpus(docs: Sequence[Document]) -> EpisodeStore:
    return EpisodeStore(docs)


def _group_pool(
    store: EpisodeStore,
    group: Sequence[str],
    excluded: set[int],
    query_meta: Mapping[str, str],
    cfg: RetrievalConfig,
) -> list[int]:
    pool: list[int] = []
    seen: set[int] = set()
    for key in group:
        for i in store.by_key.get(key, []):
            if i not in seen and i not in excluded:
                seen.add(i)
                pool.append(i)
    if pool and all(k.startswith("bct:") for k in group) and "start" in query_meta:
        qr, qc = _parse_cell(query_meta["start"])
        radius = cfg.bc_start_radius
        while radius < 64:
            near = []
            for i in pool:
                sr, sc = _parse_cell(store.docs[i].meta["start"])
                if max(abs(sr - qr), abs(sc - qc)) <= radius:
                    near.append(i)
            if near:
                return near
            radius *= 2
    return pool


def retrieve(
    store: EpisodeStore,
    query_meta: Mapping[str, str],
    cfg: RetrievalConfig,
    rng: SeededRng,
) -> list[RetrievedEpisode]:
    """Episodes for one query, shuffled; relevant ones flagged.

    Oracle mode guarantees at least one episode per needs-group (an error
    means the dataset's answerability guarantee was violated upstream);
    irrelevant_only returns only episodes sharing no key with the query.
    """
    if cfg.mode == MODE_NONE:
        return []
    gen = rng.generator()
    needs_raw = query_meta.get("needs", "")
    groups = [g.split(",") for g in needs_raw.split(";") if g]
    query_keys = {k for g in groups for k in g}
    self_idx = store.index_of_id.get(query_meta.get("doc_id", ""), -1)
    picked: list[int] = []

    if cfg.mode == MODE_ORACLE:
        if not groups:
            raise RetrievalError("oracle retrieval needs a non-empty 'needs' metadata key")
        for group in groups:
            excluded = set(picked) | {self_idx}
            pool = _group_pool(store, group, excluded, query_meta, cfg)
            if not pool:
                already = any(
                    key in store.docs[i].provides_keys() for i in picked for key in group
                )
                if already:
                    continue  # an earlier pick covers this group
                raise RetrievalError(
                    f"no stored episode serves {group}; latent answerability violated "
                    f"upstream (query {query_meta.get('doc_id', '?')})"
                )
            take = min(cfg.relevant_per_group, len(pool))
            for j in gen.choice(len(pool), size=take, replace=False):
                picked.append(pool[int(j)])

    episodes = [RetrievedEpisode(store.docs[i], True) for i in picked]
    n_distractors = cfg.k_total - len(episodes)
    if cfg.mode == MODE_IRRELEVANT:
        n_distractors = cfg.k_total
    if (cfg.add_distractors or cfg.mode == MODE_IRRELEVANT) and n_distractors > 0:
        chosen = set(picked)
        attempts = 0
        while len(chosen) - len(picked) < n_distractors:
            attempts += 1
            if attempts > 200 * cfg.k_total:
                raise RetrievalError("could not sample enough irrelevant distractors")
            i = int(gen.integers(0, len(store.docs)))
            if i in chosen or i == self_idx:
                continue
            if query_keys & set(store.docs[i].provides_keys()):
                continue
            chosen.add(i)
            episodes.append(RetrievedEpisode(store.docs[i], False))
    order = gen.permutation(len(episodes))
    return [episodes[int(i)] for i in order]


def assemble_context(
    retrieved: Sequence[RetrievedEpisode],
    current: Document,
    budget: int,
    eod_id: int,
) -> Document:
    """Retrieved episodes (each closed by an end-of-document token) before the
    current document, within `budget` tokens.

    When over budget, distractors are dropped first (newest first), then the
    oldest surviving episode is truncated from its end. The current document
    is never touched; if even one-token episodes cannot fit alongside it, the
    budget is misconfigured and an error is raised.
    """
    if len(current.tokens) > budget:
        raise RetrievalError(
            f"current document ({len(current.tokens)} tokens) exceeds context budget {budget}"
        )
    episodes = list(retrieved)
    lengths = [len(ep.doc.tokens) + 1 for ep in episodes]

    def total() -> int:
        return sum(lengths) + len(current.tokens)

    while total() > budget:
        drop = next(
            (i for i in range(len(episodes) - 1, -1, -1) if not episodes[i].relevant), None
        )
        if drop is None:
            break
        episodes.pop(drop)
        lengths.pop(drop)
    i = 0
    while total() > budget and i < len(episodes):
        overflow = total() - budget
        can_cut = lengths[i] - 2  # keep at least one token plus the separator
        cut = min(overflow, max(can_cut, 0))
        lengths[i] -= cut
        i += 1
    if total() > budget:
        if any(ep.relevant for ep in episodes):
            raise RetrievalError(
                f"relevant episode cannot fit in context budget {budget} "
                f"alongside a {len(current.tokens)}-token document"
            )
        episodes, lengths = [], []

    tokens: list[int] = []
    for ep, keep in zip(episodes, lengths):
        tokens.extend(ep.doc.tokens[: keep - 1])
        tokens.append(eod_id)
    offset = len(tokens)
    segments = [Segment(0, offset, RETRIEVED)] if offset else []
    segments.extend(
        Segment(s.start + offset, s.end + offset, s.kind) for s in current.segments
    )
    meta = dict(current.meta)
    meta["n_retrieved"] = str(len(episodes))
    meta["n_relevant"] = str(sum(1 for ep in episodes if ep.relevant))
    doc = Document(tokens=tokens + list(current.tokens), segments=segments, meta=meta)
    return doc
