"""Codebooks benchmark generator.

Each codebook maps the shared 40 input symbols injectively into 128 output
symbols. Training mixes three document types per codebook — a definition
listing, plain encoding tasks, and definition-plus-encoding tasks. For a
subset of "latent" codebooks some input/output pairs appear only inside
definitions and are never exercised by a training encoding; the evaluation
suites probe exactly that withheld use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import CONTEXT, CUE, TARGET, Document, Segment
from .rng import SeededRng
from .vocab import Vocab, build_vocab

N_INPUTS = 40
N_OUTPUTS = 128

DEF_DELIM = "<definition>"
PLAIN_DELIM = "<plaintext>"
ENC_DELIM = "<encoded>"

SUITE_LATENT_ENCODING = "latent_encoding"
SUITE_DEFINITION_RECALL = "definition_recall"
SUITE_INCONTEXT_ENCODING = "incontext_encoding"
SUITE_TRAINED_ENCODING = "trained_encoding"
SUITE_ICL_ENCODING = "icl_encoding"
EVAL_SUITES = (
    SUITE_LATENT_ENCODING,
    SUITE_DEFINITION_RECALL,
    SUITE_INCONTEXT_ENCODING,
    SUITE_TRAINED_ENCODING,
    SUITE_ICL_ENCODING,
)


class CodebooksConfigError(ValueError):
    pass


def input_symbols() -> list[str]:
    return [f"I_{i:02d}" for i in range(N_INPUTS)]


def output_symbols() -> list[str]:
    return [f"O_{i:03d}" for i in range(N_OUTPUTS)]


def codebook_symbol(index: int) -> str:
    return f"CB_{index:04d}"


@dataclass(frozen=True)
class Codebook:
    index: int
    mapping: dict[str, str]
    latent_mask: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        inputs = set(input_symbols())
        if set(self.mapping) != inputs:
            raise CodebooksConfigError(
                f"codebook {self.index} mapping must be total over the {N_INPUTS} inputs"
            )
        if len(set(self.mapping.values())) != N_INPUTS:
            raise CodebooksConfigError(f"codebook {self.index} mapping is not injective")
        if not self.latent_mask <= inputs:
            raise CodebooksConfigError(
                f"codebook {self.index} latent mask contains non-input symbols"
            )

    @property
    def symbol(self) -> str:
        return codebook_symbol(self.index)

    def trained_inputs(self) -> list[str]:
        return [s for s in input_symbols() if s not in self.latent_mask]


@dataclass(frozen=True)
class CodebooksDatasetConfig:
    n_codebooks: int = 4096
    n_definition_docs: int = 1
    n_encoding_docs: int = 64
    n_defenc_docs: int = 64
    n_latent_codebooks: int = 512
    latent_pairs_per_codebook: int = 8
    plaintext_len_range: tuple[int, int] = (8, 24)
    n_icl_codebooks: int = 64
    suite_size: int = 512

    def __post_init__(self) -> None:
        if self.latent_pairs_per_codebook >= N_INPUTS:
            raise CodebooksConfigError(
                "latent_pairs_per_codebook must be < 40 (would leave no trainable pairs)"
            )
        if self.n_latent_codebooks > self.n_codebooks:
            raise CodebooksConfigError("n_latent_codebooks exceeds n_codebooks")
        lo, hi = self.plaintext_len_range
        if not (1 <= lo <= hi):
            raise CodebooksConfigError(f"bad plaintext length range: {self.plaintext_len_range}")

    @property
    def docs_per_codebook(self) -> int:
        return self.n_definition_docs + self.n_encoding_docs + self.n_defenc_docs


def build_codebooks_vocab(config: CodebooksDatasetConfig) -> Vocab:
    inventory = (
        input_symbols()
        + output_symbols()
        + [codebook_symbol(i) for i in range(config.n_codebooks + config.n_icl_codebooks)]
        + [DEF_DELIM, PLAIN_DELIM, ENC_DELIM]
    )
    return build_vocab(inventory)


def _sample_mapping(gen) -> dict[str, str]:
    outs = output_symbols()
    picks = gen.choice(N_OUTPUTS, size=N_INPUTS, replace=False)
    return {inp: outs[int(o)] for inp, o in zip(input_symbols(), picks)}


def generate_codebooks(config: CodebooksDatasetConfig, rng: SeededRng) -> list[Codebook]:
    """The training codebooks; exactly n_latent_codebooks carry latent masks."""
    latent_ids = set(
        int(i)
        for i in rng.child("latent-choice")
        .generator()
        .choice(config.n_codebooks, size=config.n_latent_codebooks, replace=False)
    )
    books = []
    inputs = input_symbols()
    for idx in range(config.n_codebooks):
        gen = rng.child("map", idx).generator()
        mapping = _sample_mapping(gen)
        mask: frozenset[str] = frozenset()
        if idx in latent_ids:
            picks = gen.choice(N_INPUTS, size=config.latent_pairs_per_codebook, replace=False)
            mask = frozenset(inputs[int(i)] for i in picks)
        books.append(Codebook(index=idx, mapping=mapping, latent_mask=mask))
    return books


def generate_icl_codebooks(config: CodebooksDatasetConfig, rng: SeededRng) -> list[Codebook]:
    """Extra codebooks that never enter training; used by the ICL suite."""
    return [
        Codebook(
            index=config.n_codebooks + j,
            mapping=_sample_mapping(rng.child("icl-map", j).generator()),
        )
        for j in range(config.n_icl_codebooks)
    ]


def apply_codebook(cb: Codebook, plaintext: Sequence[str]) -> list[str]:
    out = []
    for pos, sym in enumerate(plaintext):
        enc = cb.mapping.get(sym)
        if enc is None:
            raise CodebooksConfigError(
                f"symbol {sym!r} at position {pos} is not a codebook input"
            )
        out.append(enc)
    return out


def invert_codebook(cb: Codebook) -> dict[str, str]:
    """Output-to-input map; exact because mappings are injective."""
    return {v: k for k, v in cb.mapping.items()}


def _definition_body(cb: Codebook, order: Sequence[str]) -> list[str]:
    body = []
    for key in order:
        body.extend((key, cb.mapping[key]))
    return body


def _doc(vocab: Vocab, symbols: list[str], segments: list[Segment], meta: dict[str, str]) -> Document:
    return Document(tokens=vocab.encode(symbols), segments=segments, meta=meta)


def render_definition_doc(
    cb: Codebook, vocab: Vocab, order: Sequence[str], meta: dict[str, str]
) -> Document:
    """`CB_i <definition> key value ...`; values are the scorable targets."""
    symbols = [cb.symbol, DEF_DELIM] + _definition_body(cb, order)
    segments = [Segment(0, 2, CUE)]
    for j in range(N_INPUTS):
        segments.append(Segment(2 + 2 * j, 3 + 2 * j, CUE))
        segments.append(Segment(3 + 2 * j, 4 + 2 * j, TARGET))
    return _doc(vocab, symbols, segments, meta)


def render_encoding_doc(
    cb: Codebook, vocab: Vocab, plaintext: Sequence[str], meta: dict[str, str]
) -> Document:
    symbols = [cb.symbol, PLAIN_DELIM, *plaintext, ENC_DELIM, *apply_codebook(cb, plaintext)]
    n = len(plaintext)
    segments = [
        Segment(0, 1, CUE),
        Segment(1, 2 + n, CONTEXT),
        Segment(2 + n, 3 + n, CUE),
        Segment(3 + n, 3 + 2 * n, TARGET),
    ]
    return _doc(vocab, symbols, segments, meta)


def render_defenc_doc(
    cb: Codebook,
    vocab: Vocab,
    order: Sequence[str],
    plaintext: Sequence[str],
    meta: dict[str, str],
) -> Document:
    symbols = (
        [cb.symbol, DEF_DELIM]
        + _definition_body(cb, order)
        + [PLAIN_DELIM, *plaintext, ENC_DELIM, *apply_codebook(cb, plaintext)]
    )
    n = len(plaintext)
    d = 2 + 2 * N_INPUTS
    segments = [
        Segment(0, 1, CUE),
        Segment(1, d + 1 + n, CONTEXT),
        Segment(d + 1 + n, d + 2 + n, CUE),
        Segment(d + 2 + n, d + 2 + 2 * n, TARGET),
    ]
    return _doc(vocab, symbols, segments, meta)


def _sample_plaintext(gen, pool: Sequence[str], len_range: tuple[int, int]) -> tuple[str, ...]:
    lo, hi = len_range
    n = int(gen.integers(lo, hi + 1))
    return tuple(pool[int(i)] for i in gen.integers(0, len(pool), size=n))


def _base_meta(cb: Codebook, split: str, doc_id: str, doc_type: str) -> dict[str, str]:
    provides = f"cb:{cb.symbol}"
    if doc_type in ("definition", "definition_encoding"):
        provides += f";cbdef:{cb.symbol}"
    return {
        "benchmark": "codebooks",
        "split": split,
        "doc_id": doc_id,
        "cb": cb.symbol,
        "doc_type": doc_type,
        "provides": provides,
        "needs": f"cbdef:{cb.symbol}",
    }


def build_training_set(
    codebooks: Sequence[Codebook], config: CodebooksDatasetConfig, rng: SeededRng, vocab: Vocab
) -> tuple[list[Document], dict[str, set[tuple[str, ...]]]]:
    """Training corpus plus, per codebook, the set of plaintexts it used.

    Encoding portions of latent codebooks draw only from trained inputs;
    definition portions always list all 40 pairs, latent ones included.
    """
    docs: list[Document] = []
    used: dict[str, set[tuple[str, ...]]] = {}
    for cb in codebooks:
        gen = rng.child("train", cb.index).generator()
        pool = cb.trained_inputs()
        used_cb: set[tuple[str, ...]] = set()
        for j in range(config.n_definition_docs):
            order = [input_symbols()[int(i)] for i in gen.permutation(N_INPUTS)]
            meta = _base_meta(cb, "train", f"{cb.symbol}-def{j}", "definition")
            docs.append(render_definition_doc(cb, vocab, order, meta))
        for j in range(config.n_encoding_docs):
            pt = _sample_plaintext(gen, pool, config.plaintext_len_range)
            used_cb.add(pt)
            meta = _base_meta(cb, "train", f"{cb.symbol}-enc{j}", "encoding")
            docs.append(render_encoding_doc(cb, vocab, pt, meta))
        for j in range(config.n_defenc_docs):
            order = [input_symbols()[int(i)] for i in gen.permutation(N_INPUTS)]
            pt = _sample_plaintext(gen, pool, config.plaintext_len_range)
            used_cb.add(pt)
            meta = _base_meta(cb, "train", f"{cb.symbol}-defenc{j}", "definition_encoding")
            docs.append(render_defenc_doc(cb, vocab, order, pt, meta))
        used[cb.symbol] = used_cb
    return docs, used


def build_eval_suites(
    codebooks: Sequence[Codebook],
    icl_codebooks: Sequence[Codebook],
    config: CodebooksDatasetConfig,
    rng: SeededRng,
    vocab: Vocab,
    training_plaintexts: dict[str, set[tuple[str, ...]]],
) -> dict[str, list[Document]]:
    """The five evaluation suites, with plaintexts disjoint from training."""
    latent_books = [cb for cb in codebooks if cb.latent_mask]
    if not latent_books:
        raise CodebooksConfigError("no latent codebooks; evaluation suites are undefined")
    suites: dict[str, list[Document]] = {name: [] for name in EVAL_SUITES}
    canonical = input_symbols()

    def pick_fresh(gen, cb: Codebook, pool: Sequence[str]) -> tuple[str, ...]:
        for _ in range(64):
            pt = _sample_plaintext(gen, pool, config.plaintext_len_range)
            if pt not in training_plaintexts.get(cb.symbol, set()):
                return pt
        raise CodebooksConfigError(f"could not sample a novel plaintext for {cb.symbol}")

    for j in range(config.suite_size):
        cb = latent_books[j % len(latent_books)]
        latent_pool = sorted(cb.latent_mask)
        gen = rng.child("eval", j).generator()

        pt = pick_fresh(gen, cb, latent_pool)
        meta = _base_meta(cb, SUITE_LATENT_ENCODING, f"lat{j}", "encoding")
        suites[SUITE_LATENT_ENCODING].append(render_encoding_doc(cb, vocab, pt, meta))

        pt = pick_fresh(gen, cb, latent_pool)
        meta = _base_meta(cb, SUITE_INCONTEXT_ENCODING, f"icx{j}", "definition_encoding")
        order = [canonical[int(i)] for i in gen.permutation(N_INPUTS)]
        suites[SUITE_INCONTEXT_ENCODING].append(
            render_defenc_doc(cb, vocab, order, pt, meta)
        )

        pt = pick_fresh(gen, cb, cb.trained_inputs())
        meta = _base_meta(cb, SUITE_TRAINED_ENCODING, f"trn{j}", "encoding")
        suites[SUITE_TRAINED_ENCODING].append(render_encoding_doc(cb, vocab, pt, meta))

        icl_cb = icl_codebooks[j % len(icl_codebooks)]
        order = [canonical[int(i)] for i in gen.permutation(N_INPUTS)]
        pt = _sample_plaintext(gen, canonical, config.plaintext_len_range)
        meta = _base_meta(icl_cb, SUITE_ICL_ENCODING, f"icl{j}", "definition_encoding")
        suites[SUITE_ICL_ENCODING].append(render_defenc_doc(icl_cb, vocab, order, pt, meta))

    for k, cb in enumerate(latent_books[: config.suite_size]):
        meta = _base_meta(cb, SUITE_DEFINITION_RECALL, f"rec{k}", "definition")
        suites[SUITE_DEFINITION_RECALL].append(
            render_definition_doc(cb, vocab, canonical, meta)
        )
    return suites


@dataclass
class CodebooksDataset:
    config: CodebooksDatasetConfig
    vocab: Vocab
    codebooks: list[Codebook]
    icl_codebooks: list[Codebook]
    train_docs: list[Document] = field(repr=False, default_factory=list)
    suites: dict[str, list[Document]] = field(repr=False, default_factory=dict)


def generate_dataset(config: CodebooksDatasetConfig, rng: SeededRng) -> CodebooksDataset:
    vocab = build_codebooks_vocab(config)
    books = generate_codebooks(config, rng)
    icl_books = generate_icl_codebooks(config, rng)
    train_docs, used = build_training_set(books, config, rng, vocab)
    suites = build_eval_suites(books, icl_books, config, rng, vocab, used)
    return CodebooksDataset(
        config=config,
        vocab=vocab,
        codebooks=books,
        icl_codebooks=icl_books,
        train_docs=train_docs,
        suites=suites,
    )


def suite_chance_levels(config: CodebooksDatasetConfig) -> dict[str, float]:
    per_token = 1.0 / N_OUTPUTS
    return {name: per_token for name in EVAL_SUITES}
