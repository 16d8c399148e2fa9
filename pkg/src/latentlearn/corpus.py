"""Document model and on-disk corpus format.

A corpus is a JSON Lines file: a header object, then one object per document
with the token symbols space-joined (human-readable and diff-friendly),
segment spans as integer triples, and a string-valued metadata map. The
symbol-to-id table lives in an adjacent ``<name>.vocab.json`` sidecar.

Common metadata keys:

=============  =====================================================
``benchmark``  generator name (``codebooks``, ``reversals``, ...)
``split``      ``train`` or an evaluation-suite name
``doc_id``     unique id within the corpus
``provides``   ``;``-joined relevance keys this document can serve
``needs``      relevance-key groups a retrieval query must satisfy:
               groups joined by ``;``, alternatives within a group
               joined by ``,``
=============  =====================================================
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .vocab import Vocab

CONTEXT = "context"
CUE = "cue"
TARGET = "target"
RETRIEVED = "retrieved"
SEGMENT_KINDS = (CONTEXT, CUE, TARGET, RETRIEVED)

FORMAT_NAME = "latentlearn.corpus"
FORMAT_VERSION = 1


class CorpusError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Segment:
    start: int
    end: int
    kind: str


@dataclass(slots=True)
class Document:
    """A token sequence with segment annotations and provenance metadata."""

    tokens: list[int]
    segments: list[Segment]
    meta: dict[str, str] = field(default_factory=dict)

    def validate(self, vocab_size: int) -> None:
        if any(not 0 <= t < vocab_size for t in self.tokens):
            bad = next(t for t in self.tokens if not 0 <= t < vocab_size)
            raise CorpusError(f"token id {bad} outside vocabulary of size {vocab_size}")
        pos = 0
        for seg in self.segments:
            if seg.kind not in SEGMENT_KINDS:
                raise CorpusError(f"unknown segment kind {seg.kind!r}")
            if seg.start != pos or seg.end <= seg.start:
                raise CorpusError(
                    f"segments must be sorted, non-overlapping, non-empty; got "
                    f"({seg.start}, {seg.end}) after position {pos}"
                )
            pos = seg.end
        if pos != len(self.tokens):
            raise CorpusError(
                f"segments cover [0, {pos}) but document has {len(self.tokens)} tokens"
            )

    def positions_of(self, kind: str) -> list[int]:
        return [p for seg in self.segments if seg.kind == kind for p in range(seg.start, seg.end)]

    def needs_groups(self) -> list[list[str]]:
        raw = self.meta.get("needs", "")
        if not raw:
            return []
        return [group.split(",") for group in raw.split(";") if group]

    def provides_keys(self) -> list[str]:
        raw = self.meta.get("provides", "")
        return [k for k in raw.split(";") if k]


def segments_from_kinds(kinds: Sequence[str]) -> list[Segment]:
    """Collapse a per-token kind list into maximal segment spans."""
    segments: list[Segment] = []
    start = 0
    for i in range(1, len(kinds) + 1):
        if i == len(kinds) or kinds[i] != kinds[start]:
            segments.append(Segment(start, i, kinds[start]))
            start = i
    return segments


def _header_checksum(header: dict) -> str:
    body = {k: v for k, v in header.items() if k != "checksum"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).hexdigest()


def vocab_sidecar_path(corpus_path: Path | str) -> Path:
    p = Path(corpus_path)
    return p.with_name(p.stem + ".vocab.json")


def write_corpus(path: Path | str, docs: Sequence[Document], vocab: Vocab) -> Path:
    """Write documents and the vocabulary sidecar; returns the corpus path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        doc.validate(len(vocab))
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "docs": len(docs),
    }
    header["checksum"] = _header_checksum(header)
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for doc in docs:
        record = {
            "meta": dict(sorted(doc.meta.items())),
            "segments": [[s.start, s.end, s.kind] for s in doc.segments],
            "text": " ".join(vocab.decode(doc.tokens)),
        }
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    vocab.save(vocab_sidecar_path(path))
    return path


def read_corpus(path: Path | str) -> tuple[list[Document], Vocab]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}: malformed header: {exc}") from None
        if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
            raise CorpusError(f"{path}: not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise CorpusError(f"{path}: unsupported version {header.get('version')!r}")
        if header.get("checksum") != _header_checksum(header):
            raise CorpusError(f"{path}: header checksum mismatch (corrupt header)")
        vocab = Vocab.load(vocab_sidecar_path(path))
        docs: list[Document] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                text = record["text"]
                tokens = vocab.encode(text.split(" ") if text else [])
                segments = [Segment(int(s), int(e), str(k)) for s, e, k in record["segments"]]
                doc = Document(tokens=tokens, segments=segments, meta=dict(record["meta"]))
                doc.validate(len(vocab))
            except (CorpusError, KeyError, ValueError, TypeError) as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None
            docs.append(doc)
    if len(docs) != header["docs"]:
        raise CorpusError(
            f"{path}: header says {header['docs']} documents, found {len(docs)}"
        )
    return docs, vocab


def corpus_fingerprint(path: Path | str) -> str:
    """Content hash over the corpus file and its vocabulary sidecar."""
    h = hashlib.blake2b(digest_size=16)
    h.update(Path(path).read_bytes())
    h.update(vocab_sidecar_path(path).read_bytes())
    return h.hexdigest()


def check_documents(docs: Iterable[Document], vocab: Vocab) -> None:
    for doc in docs:
        doc.validate(len(vocab))
