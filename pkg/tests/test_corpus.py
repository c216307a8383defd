import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylo.corpus import (
    CorpusError,
    Document,
    Segment,
    class_counts,
    document_from_json,
    document_to_json,
    downsample_balance,
    ingest_directory,
    load_manifest,
    normalize_document,
    segment_blocks,
    segment_document,
    segment_from_json,
    segment_to_json,
    split_train_val,
    tokenize,
)
from stylo.labels import ClassLabel, TRAIN_CLASSES


def _make_segments(label, count, doc_id=None):
    doc_id = doc_id or f"{label.value}/w"
    return [
        Segment(doc_id=doc_id, seq=i, tokens=(f"t{i}a", f"t{i}b"), label=label)
        for i in range(count)
    ]


class TestIngest:
    def test_two_files_mapped(self, tmp_path):
        (tmp_path / "a.txt").write_text("alpha text\n", encoding="utf-8")
        (tmp_path / "b.txt").write_text("beta text\n", encoding="utf-8")
        manifest = {"a": ClassLabel.MISHNAH, "b": ClassLabel.TANHUMA}
        result = ingest_directory(tmp_path, manifest)
        assert [d.label for d in result.documents] == [ClassLabel.MISHNAH, ClassLabel.TANHUMA]
        assert result.warnings == []

    def test_empty_directory(self, tmp_path):
        result = ingest_directory(tmp_path, {})
        assert result.documents == []

    def test_unmapped_work_gets_unknown_plus_warning(self, tmp_path):
        for name in ("a", "b", "c"):
            (tmp_path / f"{name}.txt").write_text(f"{name} text\n", encoding="utf-8")
        manifest = {"a": ClassLabel.MISHNAH, "c": ClassLabel.TANHUMA}
        result = ingest_directory(tmp_path, manifest)
        labels = {d.work: d.label for d in result.documents}
        assert labels["b"] is ClassLabel.UNKNOWN
        assert len(result.warnings) == 1 and "'b'" in result.warnings[0]

    def test_missing_root_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest_directory(tmp_path / "nope", {})

    def test_class_subdirectories_and_sorted_order(self, tmp_path):
        (tmp_path / "Mishnah").mkdir()
        (tmp_path / "Tanhuma").mkdir()
        (tmp_path / "Tanhuma" / "z.txt").write_text("z\n", encoding="utf-8")
        (tmp_path / "Mishnah" / "a.txt").write_text("a\n", encoding="utf-8")
        result = ingest_directory(
            tmp_path, {"a": ClassLabel.MISHNAH, "z": ClassLabel.TANHUMA}
        )
        assert [d.id for d in result.documents] == ["Mishnah/a", "Tanhuma/z"]

    def test_manifest_loading(self, tmp_path):
        path = tmp_path / "manifest.tsv"
        path.write_text("Sifra\tMidrashHalakhah\nTosefta\tMishnah\n", encoding="utf-8")
        manifest = load_manifest(path)
        assert manifest == {
            "Sifra": ClassLabel.MIDRASH_HALAKHAH,
            "Tosefta": ClassLabel.MISHNAH,
        }


class TestTokenize:
    def test_whitespace_split(self):
        assert tokenize("a b  c") == ["a", "b", "c"]

    def test_empty(self):
        assert tokenize("") == []

    def test_120_word_paragraph(self):
        paragraph = " ".join(f"w{i}" for i in range(120))
        # Independent count: regex over non-space runs.
        assert len(re.findall(r"\S+", paragraph)) == 120
        assert len(tokenize(paragraph)) == 120


class TestSegmentBlocks:
    def test_120_tokens(self):
        segs = segment_blocks([f"w{i}" for i in range(120)])
        assert [len(s.tokens) for s in segs] == [50, 50, 20]
        assert [s.seq for s in segs] == [0, 1, 2]

    def test_exact_fit(self):
        segs = segment_blocks([f"w{i}" for i in range(50)])
        assert [len(s.tokens) for s in segs] == [50]

    def test_short_remainder_kept(self):
        segs = segment_blocks([f"w{i}" for i in range(49)])
        assert [len(s.tokens) for s in segs] == [49]

    def test_empty_tokens(self):
        assert segment_blocks([]) == []

    def test_bad_block_size(self):
        with pytest.raises(CorpusError):
            segment_blocks(["a"], block_size=0)

    @given(st.integers(min_value=0, max_value=333), st.integers(min_value=1, max_value=60))
    @settings(max_examples=60, deadline=None)
    def test_reconstruction(self, n_tokens, block_size):
        tokens = [f"w{i}" for i in range(n_tokens)]
        segs = segment_blocks(tokens, block_size)
        flattened = [t for s in segs for t in s.tokens]
        assert flattened == tokens
        assert all(len(s.tokens) <= block_size for s in segs)
        assert [s.seq for s in segs] == list(range(len(segs)))


class TestSegmentDocument:
    def test_paragraph_boundaries_respected(self):
        doc = Document(
            id="x",
            work="x",
            label=ClassLabel.MISHNAH,
            raw_text=" ".join(f"a{i}" for i in range(30))
            + "\n\n"
            + " ".join(f"b{i}" for i in range(30)),
        )
        segs = segment_document(doc, block_size=50)
        assert [len(s.tokens) for s in segs] == [30, 30]
        assert [s.seq for s in segs] == [0, 1]

    def test_reconstructs_normalized_tokens(self):
        doc = Document(
            id="x",
            work="x",
            label=ClassLabel.MISHNAH,
            raw_text=" ".join(f"w{i}" for i in range(130)),
        )
        segs = segment_document(doc, block_size=50)
        assert [t for s in segs for t in s.tokens] == [f"w{i}" for i in range(130)]

    def test_drop_short(self):
        doc = Document(
            id="x",
            work="x",
            label=ClassLabel.MISHNAH,
            raw_text=" ".join(f"w{i}" for i in range(55)),
        )
        assert [len(s.tokens) for s in segment_document(doc, block_size=50)] == [50, 5]
        assert [
            len(s.tokens) for s in segment_document(doc, block_size=50, drop_short=10)
        ] == [50]

    def test_normalize_document_keeps_paragraphs(self):
        doc = Document(id="x", work="x", label=ClassLabel.MISHNAH, raw_text="שָׁלוֹם\n\nעוֹלָם,")
        norm = normalize_document(doc)
        assert norm.raw_text == "שלום\n\nעולם"

    def test_normalize_document_empty_returns_none(self):
        doc = Document(id="x", work="x", label=ClassLabel.MISHNAH, raw_text="<tag/> [gloss]")
        assert normalize_document(doc) is None


class TestSplit:
    def test_80_20_per_class(self):
        segments = []
        for label in TRAIN_CLASSES:
            segments.extend(_make_segments(label, 100))
        split = split_train_val(segments, 0.8, seed=7)
        assert len(split.train) == 480 and len(split.validation) == 120
        for label, count in class_counts(split.train).items():
            assert count == 80
        for label, count in class_counts(split.validation).items():
            assert count == 20

    def test_determinism(self):
        segments = []
        for label in TRAIN_CLASSES:
            segments.extend(_make_segments(label, 37))
        a = split_train_val(segments, 0.8, seed=7)
        b = split_train_val(segments, 0.8, seed=7)
        assert a.train == b.train and a.validation == b.validation
        c = split_train_val(segments, 0.8, seed=8)
        assert c.train != a.train

    def test_partition(self):
        segments = []
        for i, label in enumerate(TRAIN_CLASSES):
            segments.extend(_make_segments(label, 5 + 7 * i))
        split = split_train_val(segments, 0.8, seed=3)
        keys = {s.key for s in segments}
        train_keys = {s.key for s in split.train}
        val_keys = {s.key for s in split.validation}
        assert train_keys | val_keys == keys
        assert train_keys & val_keys == set()

    def test_small_class_error_names_class(self):
        segments = _make_segments(ClassLabel.MISHNAH, 10) + _make_segments(
            ClassLabel.TANHUMA, 3
        )
        with pytest.raises(CorpusError, match="Tanhuma"):
            split_train_val(segments, 0.8, seed=0)

    def test_unknown_label_rejected(self):
        with pytest.raises(CorpusError):
            split_train_val(_make_segments(ClassLabel.UNKNOWN, 10), 0.8, seed=0)


class TestDownsample:
    def test_majority_reduced_to_minority(self):
        counts = [10, 4, 4, 4, 4, 4]
        segments = []
        for label, count in zip(TRAIN_CLASSES, counts):
            segments.extend(_make_segments(label, count))
        balanced = downsample_balance(segments, seed=0)
        assert all(c == 4 for c in class_counts(balanced).values())

    def test_already_balanced_is_identity(self):
        segments = []
        for label in TRAIN_CLASSES:
            segments.extend(_make_segments(label, 6))
        balanced = downsample_balance(segments, seed=5)
        assert sorted(balanced, key=lambda s: s.key) == sorted(segments, key=lambda s: s.key)

    def test_determinism(self):
        segments = _make_segments(ClassLabel.MISHNAH, 1000) + _make_segments(
            ClassLabel.TANHUMA, 7
        )
        assert downsample_balance(segments, seed=3) == downsample_balance(segments, seed=3)


class TestSerialization:
    def test_document_round_trip(self):
        doc = Document(id="Mishnah/a", work="a", label=ClassLabel.MISHNAH, raw_text="שלום עולם")
        assert document_from_json(document_to_json(doc)) == doc

    def test_segment_round_trip(self):
        seg = Segment(doc_id="x", seq=3, tokens=("א", "ב"), label=ClassLabel.TANHUMA)
        assert segment_from_json(segment_to_json(seg)) == seg

    def test_json_fields_match_type_definitions(self):
        import json

        doc = Document(id="i", work="w", label=ClassLabel.MISHNAH, raw_text="t")
        assert set(json.loads(document_to_json(doc))) == {"id", "work", "label", "raw_text"}
        seg = Segment(doc_id="d", seq=0, tokens=("t",), label=ClassLabel.MISHNAH)
        assert set(json.loads(segment_to_json(seg))) == {"doc_id", "seq", "tokens", "label"}
