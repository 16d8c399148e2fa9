"""Vocabulary, document model, corpus format, and seeded randomness."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentlearn.corpus import (
    CONTEXT,
    CUE,
    TARGET,
    CorpusError,
    Document,
    Segment,
    corpus_fingerprint,
    read_corpus,
    segments_from_kinds,
    write_corpus,
)
from latentlearn.rng import SeededRng
from latentlearn.vocab import EOD, PAD, Vocab, VocabError, build_vocab


class TestSeededRng:
    def test_same_seed_and_stream_reproduce(self):
        a = SeededRng(5, "x").generator().integers(0, 1000, size=20)
        b = SeededRng(5, "x").generator().integers(0, 1000, size=20)
        assert list(a) == list(b)

    def test_streams_are_independent_of_draw_order(self):
        r = SeededRng(5)
        first = r.child("a").generator().random()
        _ = r.child("b").generator().random(size=100)
        again = r.child("a").generator().random()
        assert first == again

    def test_different_streams_differ(self):
        a = SeededRng(5, "a").generator().random(size=4)
        b = SeededRng(5, "b").generator().random(size=4)
        assert list(a) != list(b)

    def test_child_path(self):
        assert SeededRng(1).child("gen", 3).stream == "root/gen/3"


class TestVocab:
    def test_build_has_reserved_and_dense_ids(self):
        v = build_vocab(["b", "a"])
        assert set([PAD, EOD]) < set(v.symbols)
        assert sorted(v.encode(["a", "b"])) == v.encode(["a", "b"])
        assert [v.id_of(s) for s in v.symbols] == list(range(len(v)))

    def test_inventory_sizes_match_symbol_budget(self):
        inputs = [f"I_{i:02d}" for i in range(40)]
        outputs = [f"O_{i:03d}" for i in range(128)]
        v = build_vocab(inputs + outputs + ["<definition>"])
        assert len(v) == 40 + 128 + 1 + 2

    def test_empty_inventory(self):
        v = build_vocab([])
        assert set(v.symbols) == {PAD, EOD}

    def test_duplicate_symbol_named(self):
        with pytest.raises(VocabError, match="I_03"):
            build_vocab(["I_03", "I_04", "I_03"])

    def test_reserved_collision(self):
        with pytest.raises(VocabError, match="<pad>"):
            build_vocab(["<pad>"])

    def test_encode_decode_roundtrip(self):
        v = build_vocab(["x", "y", "z"])
        seq = ["z", "x", "x", "y"]
        assert v.decode(v.encode(seq)) == seq

    def test_empty_sequence(self):
        v = build_vocab(["x"])
        assert v.encode([]) == []
        assert v.decode([]) == []

    def test_unknown_symbol_cites_position(self):
        v = build_vocab(["x", "y"])
        with pytest.raises(VocabError, match="position 3"):
            v.encode(["x", "y", "x", "nope"])

    def test_json_roundtrip(self, tmp_path):
        v = build_vocab(["q", "r"])
        v.save(tmp_path / "v.json")
        assert Vocab.load(tmp_path / "v.json") == v


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "dd", "<sep>"]), max_size=40))
def test_encode_decode_property(seq):
    v = build_vocab(["a", "b", "c", "dd", "<sep>"])
    assert v.decode(v.encode(seq)) == seq


class TestDocument:
    def test_segments_must_partition(self):
        doc = Document(tokens=[0, 1, 2], segments=[Segment(0, 2, CONTEXT)], meta={})
        with pytest.raises(CorpusError):
            doc.validate(10)

    def test_segments_must_be_sorted_nonoverlapping(self):
        doc = Document(
            tokens=[0, 1, 2],
            segments=[Segment(0, 2, CONTEXT), Segment(1, 3, CUE)],
            meta={},
        )
        with pytest.raises(CorpusError):
            doc.validate(10)

    def test_token_ids_below_vocab(self):
        doc = Document(tokens=[0, 99], segments=[Segment(0, 2, CONTEXT)], meta={})
        with pytest.raises(CorpusError, match="99"):
            doc.validate(10)

    def test_segments_from_kinds(self):
        kinds = [CONTEXT, CONTEXT, CUE, TARGET, TARGET]
        assert segments_from_kinds(kinds) == [
            Segment(0, 2, CONTEXT), Segment(2, 3, CUE), Segment(3, 5, TARGET)
        ]


def _docs_and_vocab():
    v = build_vocab(["a", "b", "c"])
    docs = [
        Document(
            tokens=v.encode(["a", "b", "c"]),
            segments=[Segment(0, 2, CONTEXT), Segment(2, 3, TARGET)],
            meta={"doc_id": "d0", "benchmark": "t", "split": "train"},
        ),
        Document(
            tokens=v.encode(["c"]),
            segments=[Segment(0, 1, CUE)],
            meta={"doc_id": "d1"},
        ),
    ]
    return docs, v


class TestCorpusFormat:
    def test_roundtrip_structural_equality(self, tmp_path):
        docs, v = _docs_and_vocab()
        path = write_corpus(tmp_path / "c.jsonl", docs, v)
        loaded, v2 = read_corpus(path)
        assert v2 == v
        assert [d.tokens for d in loaded] == [d.tokens for d in docs]
        assert [d.segments for d in loaded] == [d.segments for d in docs]
        assert [d.meta for d in loaded] == [d.meta for d in docs]

    def test_empty_corpus_has_header(self, tmp_path):
        path = write_corpus(tmp_path / "e.jsonl", [], build_vocab(["a"]))
        header = json.loads(path.read_text().splitlines()[0])
        assert header["docs"] == 0
        assert read_corpus(path) == ([], build_vocab(["a"]))

    def test_header_corruption_detected(self, tmp_path):
        docs, v = _docs_and_vocab()
        path = write_corpus(tmp_path / "c.jsonl", docs, v)
        raw = bytearray(path.read_bytes())
        flip = raw.index(b'"docs":2'[0:1], 10)
        raw[flip + 7] = ord("3")  # header still parses, checksum must catch it
        path.write_bytes(bytes(raw))
        with pytest.raises(CorpusError, match="checksum|documents"):
            read_corpus(path)

    def test_malformed_line_cites_line_number(self, tmp_path):
        docs, v = _docs_and_vocab()
        path = write_corpus(tmp_path / "c.jsonl", docs, v)
        lines = path.read_text().splitlines()
        lines[2] = '{"meta": {}, "segments": [[0, 1, "context"]]}'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusError, match="line 3"):
            read_corpus(path)

    def test_rewrite_is_byte_identical(self, tmp_path):
        docs, v = _docs_and_vocab()
        p1 = write_corpus(tmp_path / "one.jsonl", docs, v)
        loaded, _ = read_corpus(p1)
        p2 = write_corpus(tmp_path / "two.jsonl", loaded, v)
        assert p1.read_bytes() == p2.read_bytes()
        assert corpus_fingerprint(p1) == corpus_fingerprint(p2)

    def test_generated_corpora_roundtrip(self, tmp_path, tiny_codebooks, tiny_gridworld):
        for name, data in (("cb", tiny_codebooks), ("gw", tiny_gridworld)):
            path = write_corpus(tmp_path / f"{name}.jsonl", data.train_docs, data.vocab)
            loaded, _ = read_corpus(path)
            assert [d.tokens for d in loaded] == [d.tokens for d in data.train_docs]
            rewrite = write_corpus(tmp_path / f"{name}2.jsonl", loaded, data.vocab)
            assert rewrite.read_bytes() == path.read_bytes()

    def test_same_seed_same_bytes(self, tmp_path):
        from latentlearn import reversals as rv

        cfg = rv.ReversalsDatasetConfig(
            n_entities=16, n_relations=2, n_holdout=4, repetitions_per_fact=2, suite_size=8
        )
        paths = []
        for name in ("a", "b"):
            ds = rv.generate_dataset(cfg, SeededRng(7, "determinism"))
            paths.append(write_corpus(tmp_path / f"{name}.jsonl", ds.train_docs, ds.vocab))
        assert paths[0].read_bytes() == paths[1].read_bytes()
