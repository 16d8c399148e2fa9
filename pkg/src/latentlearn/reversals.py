"""Simple-reversals benchmark generator.

Facts pair each (entity, relation) with a single object entity. Training
sees every fact in the forward direction and most reversals; 200 reversals
(by default) are withheld for the test split. A fraction of training
documents put the forward and reversed sentence side by side, which is what
teaches reversal-in-context.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import CONTEXT, CUE, TARGET, Document, Segment
from .rng import SeededRng
from .vocab import Vocab, build_vocab

FWD = "fwd"
REV = "rev"
ICL_PAIR = "icl_pair"

SUITE_FORWARD_VALIDATION = "forward_validation"
SUITE_REVERSAL_TEST = "reversal_test"
EVAL_SUITES = (SUITE_FORWARD_VALIDATION, SUITE_REVERSAL_TEST)


class ReversalsError(ValueError):
    pass


@dataclass(frozen=True)
class RelationSchema:
    forward_name: str
    reverse_name: str


@dataclass(frozen=True)
class Fact:
    subject: str
    relation: RelationSchema
    obj: str
    reversal_held_out: bool = False

    @property
    def fact_id(self) -> str:
        return f"{self.subject}~{self.relation.forward_name}"


@dataclass(frozen=True)
class ReversalsDatasetConfig:
    n_entities: int = 1000
    n_relations: int = 20
    n_holdout: int = 200
    repetitions_per_fact: int = 8
    icl_fraction: float = 1 / 8
    icl_enabled: bool = True
    n_prefix: int = 100
    n_suffix: int = 100
    suite_size: int = 512

    def __post_init__(self) -> None:
        if self.n_entities < 2:
            raise ReversalsError("need at least two entities")
        if self.repetitions_per_fact < 1:
            raise ReversalsError("repetitions_per_fact must be >= 1")
        if self.n_holdout > self.n_entities * self.n_relations:
            raise ReversalsError("cannot hold out more reversals than facts")

    @property
    def n_facts(self) -> int:
        return self.n_entities * self.n_relations


def entity_symbols(config: ReversalsDatasetConfig) -> list[str]:
    return [f"E_{i:04d}" for i in range(config.n_entities)]


def relation_schemas(config: ReversalsDatasetConfig) -> list[RelationSchema]:
    return [
        RelationSchema(f"R{r:02d}_fwd", f"R{r:02d}_rev") for r in range(config.n_relations)
    ]


def prefix_symbols(config: ReversalsDatasetConfig) -> list[str]:
    return [f"P_{i:02d}" for i in range(config.n_prefix)]


def suffix_symbols(config: ReversalsDatasetConfig) -> list[str]:
    return [f"S_{i:02d}" for i in range(config.n_suffix)]


def build_reversals_vocab(config: ReversalsDatasetConfig) -> Vocab:
    inventory = entity_symbols(config) + prefix_symbols(config) + suffix_symbols(config)
    for schema in relation_schemas(config):
        inventory.extend((schema.forward_name, schema.reverse_name))
    return build_vocab(inventory)


def generate_facts(config: ReversalsDatasetConfig, rng: SeededRng) -> list[Fact]:
    """One fact per (entity, relation); objects never equal their subject."""
    entities = entity_symbols(config)
    schemas = relation_schemas(config)
    held = set(
        int(i)
        for i in rng.child("holdout")
        .generator()
        .choice(config.n_facts, size=config.n_holdout, replace=False)
    )
    facts: list[Fact] = []
    gen = rng.child("objects").generator()
    for r, schema in enumerate(schemas):
        for e in range(config.n_entities):
            obj = int(gen.integers(0, config.n_entities - 1))
            if obj >= e:
                obj += 1
            idx = r * config.n_entities + e
            facts.append(
                Fact(
                    subject=entities[e],
                    relation=schema,
                    obj=entities[obj],
                    reversal_held_out=idx in held,
                )
            )
    return facts


def _sentence(fact: Fact, direction: str) -> list[str]:
    if direction == FWD:
        return [fact.subject, fact.relation.forward_name, fact.obj]
    return [fact.obj, fact.relation.reverse_name, fact.subject]


def _fact_meta(fact: Fact, split: str, doc_id: str, direction: str) -> dict[str, str]:
    provides = (
        f"fact:{fact.fact_id}"
        f";sr:{fact.subject}|{fact.relation.forward_name}"
        f";sr:{fact.obj}|{fact.relation.reverse_name}"
    )
    if direction in (FWD, ICL_PAIR):
        provides += f";factfwd:{fact.fact_id}"
    return {
        "benchmark": "reversals",
        "split": split,
        "doc_id": doc_id,
        "fact": fact.fact_id,
        "direction": direction,
        "provides": provides,
        "needs": f"factfwd:{fact.fact_id}",
    }


def render_document(
    fact: Fact,
    direction: str,
    rng: SeededRng,
    config: ReversalsDatasetConfig,
    vocab: Vocab,
    meta: dict[str, str],
    training: bool = True,
) -> Document:
    """`P subj rel obj S` (fwd), the reverse, or both sentences (icl_pair)."""
    if training and fact.reversal_held_out and direction in (REV, ICL_PAIR):
        raise ReversalsError(
            f"held-out reversal {fact.fact_id} cannot be rendered for training "
            f"as {direction}"
        )
    gen = rng.generator()
    prefixes, suffixes = prefix_symbols(config), suffix_symbols(config)

    def wrap(sentence: list[str]) -> list[str]:
        p = prefixes[int(gen.integers(0, len(prefixes)))]
        s = suffixes[int(gen.integers(0, len(suffixes)))]
        return [p, *sentence, s]

    if direction in (FWD, REV):
        symbols = wrap(_sentence(fact, direction))
        segments = [
            Segment(0, 1, CONTEXT),
            Segment(1, 3, CUE),
            Segment(3, 4, TARGET),
            Segment(4, 5, CONTEXT),
        ]
    elif direction == ICL_PAIR:
        symbols = wrap(_sentence(fact, FWD)) + wrap(_sentence(fact, REV))
        segments = [
            Segment(0, 6, CONTEXT),
            Segment(6, 8, CUE),
            Segment(8, 9, TARGET),
            Segment(9, 10, CONTEXT),
        ]
    else:
        raise ReversalsError(f"unknown direction {direction!r}")
    meta = dict(meta)
    meta["prefix"], meta["suffix"] = symbols[0], symbols[-1]
    return Document(tokens=vocab.encode(symbols), segments=segments, meta=meta)


def build_splits(
    facts: list[Fact], config: ReversalsDatasetConfig, rng: SeededRng, vocab: Vocab
) -> dict[str, list[Document]]:
    """Train/validation/test documents.

    ICL-pair documents replace ordinary repetitions (never supplement them),
    so the total document count does not depend on icl_enabled.
    """
    train: list[Document] = []
    used_pairs: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for fi, fact in enumerate(facts):
        directions = [FWD] if fact.reversal_held_out else [FWD, REV]
        for direction in directions:
            for rep in range(config.repetitions_per_fact):
                stream = rng.child("train", fi, direction, rep)
                as_icl = (
                    config.icl_enabled
                    and not fact.reversal_held_out
                    and stream.child("icl").generator().random() < config.icl_fraction
                )
                rendered = ICL_PAIR if as_icl else direction
                doc_id = f"{fact.fact_id}-{direction}{rep}"
                doc = render_document(
                    fact, rendered, stream, config, vocab,
                    _fact_meta(fact, "train", doc_id, rendered),
                )
                used_pairs.setdefault((fact.fact_id, direction), set()).add(
                    (doc.meta["prefix"], doc.meta["suffix"])
                )
                train.append(doc)

    held = [f for f in facts if f.reversal_held_out]
    validation: list[Document] = []
    test: list[Document] = []
    for j in range(config.suite_size):
        fact = held[j % len(held)]
        stream = rng.child("val", j)
        for _ in range(64):
            doc = render_document(
                fact, FWD, stream, config, vocab,
                _fact_meta(fact, SUITE_FORWARD_VALIDATION, f"val{j}", FWD),
                training=False,
            )
            pair = (doc.meta["prefix"], doc.meta["suffix"])
            if pair not in used_pairs.get((fact.fact_id, FWD), set()):
                break
            stream = stream.child("retry")
        else:
            raise ReversalsError(f"no unused prefix/suffix pair left for {fact.fact_id}")
        validation.append(doc)
        test.append(
            render_document(
                fact, REV, rng.child("test", j), config, vocab,
                _fact_meta(fact, SUITE_REVERSAL_TEST, f"test{j}", REV),
                training=False,
            )
        )
    return {"train": train, SUITE_FORWARD_VALIDATION: validation, SUITE_REVERSAL_TEST: test}


@dataclass
class ReversalsDataset:
    config: ReversalsDatasetConfig
    vocab: Vocab
    facts: list[Fact] = field(repr=False, default_factory=list)
    train_docs: list[Document] = field(repr=False, default_factory=list)
    suites: dict[str, list[Document]] = field(repr=False, default_factory=dict)


def generate_dataset(config: ReversalsDatasetConfig, rng: SeededRng) -> ReversalsDataset:
    vocab = build_reversals_vocab(config)
    facts = generate_facts(config, rng)
    splits = build_splits(facts, config, rng, vocab)
    return ReversalsDataset(
        config=config,
        vocab=vocab,
        facts=facts,
        train_docs=splits["train"],
        suites={k: v for k, v in splits.items() if k != "train"},
    )


def suite_chance_levels(config: ReversalsDatasetConfig) -> dict[str, float]:
    return {name: 1.0 / config.n_entities for name in EVAL_SUITES}
