from collections import Counter

import pytest

from stylo.corpus import Segment
from stylo.features import (
    FeatureError,
    MorphTaggedSegment,
    aggregate_morph,
    build_tag_vocab,
    build_vocab,
    iter_ngrams,
    load_vocab,
    read_tagged_tsv,
    save_vocab,
    vectorize,
)
from stylo.labels import ClassLabel


def _seg(tokens, doc_id="d", seq=0):
    return Segment(doc_id=doc_id, seq=seq, tokens=tuple(tokens), label=ClassLabel.MISHNAH)


class TestBuildVocab:
    def test_single_segment_enumeration(self):
        vocab = build_vocab([_seg(["a", "b", "c"])], min_df=1)
        assert set(vocab.entries) == {
            ("a",),
            ("b",),
            ("c",),
            ("a", "b"),
            ("b", "c"),
            ("a", "b", "c"),
        }
        assert sorted(vocab.entries.values()) == list(range(6))

    def test_ids_in_lexicographic_order(self):
        vocab = build_vocab([_seg(["b", "a"])], min_df=1)
        ordered = sorted(vocab.entries, key=vocab.entries.get)
        assert ordered == sorted(vocab.entries)

    def test_min_df_floor_empties_vocab(self):
        vocab = build_vocab([_seg(["a", "b", "c"])], min_df=2)
        assert len(vocab) == 0

    def test_df_counts_segments_not_occurrences(self):
        # "a" twice within one segment is still document frequency 1.
        vocab = build_vocab([_seg(["a", "a", "b"])], min_df=2)
        assert ("a",) not in vocab.entries

    def test_empty_input_rejected(self):
        with pytest.raises(FeatureError):
            build_vocab([], min_df=1)

    def test_oracle_recount_on_large_fixture(self, detection_fixture):
        segments = detection_fixture.train_segments[:1000]
        vocab = build_vocab(segments, min_df=2)
        # Independent recount with a plain Counter over per-segment sets.
        df = Counter()
        for seg in segments:
            seen = set()
            for n in (1, 2, 3):
                for i in range(len(seg.tokens) - n + 1):
                    seen.add(tuple(seg.tokens[i : i + n]))
            df.update(seen)
        expected = sum(1 for count in df.values() if count >= 2)
        assert len(vocab) == expected

    def test_byte_identical_vocab_files(self, tmp_path, detection_fixture):
        segments = detection_fixture.train_segments[:200]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_vocab(build_vocab(segments, min_df=2), a)
        save_vocab(build_vocab(segments, min_df=2), b)
        assert a.read_bytes() == b.read_bytes()

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocab([_seg(["a", "b", "c"]), _seg(["a", "b"], seq=1)], min_df=1)
        path = tmp_path / "vocab.json"
        save_vocab(vocab, path)
        loaded = load_vocab(path)
        assert loaded.entries == vocab.entries
        assert loaded.min_df == vocab.min_df
        assert loaded.content_hash() == vocab.content_hash()


class TestVectorize:
    def test_all_six_features(self):
        vocab = build_vocab([_seg(["a", "b", "c"])], min_df=1)
        vec = vectorize(_seg(["a", "b", "c"]), vocab)
        assert vec.dimension == 6
        assert sorted(vec.counts) == list(range(6))
        assert all(count == 1 for count in vec.counts.values())

    def test_repeated_token_counts(self):
        vocab = build_vocab([_seg(["a", "a"])], min_df=1)
        vec = vectorize(_seg(["a", "a"]), vocab)
        assert vec.counts[vocab.entries[("a",)]] == 2
        assert vec.counts[vocab.entries[("a", "a")]] == 1

    def test_oov_ignored_dimension_preserved(self):
        vocab = build_vocab([_seg(["a", "b", "c"])], min_df=1)
        vec = vectorize(_seg(["x", "y"]), vocab)
        assert vec.counts == {} and vec.dimension == 6

    def test_50_token_event_count(self):
        tokens = [f"w{i}" for i in range(50)]
        vocab = build_vocab([_seg(tokens)], min_df=1)
        vec = vectorize(_seg(tokens), vocab)
        assert sum(vec.counts.values()) == 50 + 49 + 48

    def test_unigram_counts_sum_to_in_vocab_tokens(self, detection_fixture):
        segments = detection_fixture.train_segments[:50]
        vocab = build_vocab(segments, min_df=2)
        unigram_ids = {idx for ngram, idx in vocab.entries.items() if len(ngram) == 1}
        for seg in segments[:10]:
            vec = vectorize(seg, vocab)
            unigram_total = sum(c for idx, c in vec.counts.items() if idx in unigram_ids)
            in_vocab = sum(1 for t in seg.tokens if (t,) in vocab.entries)
            assert unigram_total == in_vocab

    def test_ngram_iteration_orders(self):
        assert set(iter_ngrams(["a", "b"])) == {("a",), ("b",), ("a", "b")}

    def test_linear_over_concatenation_at_multiset_level(self):
        left = ["a", "b", "c"]
        right = ["c", "a"]
        vocab = build_vocab([_seg(left + right)], min_df=1)
        combined = vectorize(_seg(left + right), vocab)
        part_sum = {}
        for part, seq in ((left, 0), (right, 1)):
            for idx, count in vectorize(_seg(part, seq=seq), vocab).counts.items():
                part_sum[idx] = part_sum.get(idx, 0) + count
        # Concatenation only adds junction-spanning n-grams, never removes.
        for idx, count in part_sum.items():
            assert combined.counts.get(idx, 0) >= count
        # Unigrams are exactly additive.
        for ngram, idx in vocab.entries.items():
            if len(ngram) == 1:
                assert combined.counts.get(idx, 0) == part_sum.get(idx, 0)


MORPH_TSV = """\
אמר\tVERB|PAST|SG
רבי\tNOUN|SG

הלכה\tNOUN|FEM
גדולה\tADJ|FEM
"""


class TestMorph:
    def test_basic_aggregation(self):
        tagged = MorphTaggedSegment(
            tokens=[("x", frozenset({"NOUN", "SG"})), ("y", frozenset({"VERB"}))]
        )
        tag_vocab = {"NOUN": 0, "SG": 1, "VERB": 2}
        vec = aggregate_morph(tagged, tag_vocab)
        assert vec.counts == {0: 1, 1: 1, 2: 1}

    def test_empty_tag_sets(self):
        tagged = MorphTaggedSegment(tokens=[("x", frozenset()), ("y", frozenset())])
        assert aggregate_morph(tagged, {"NOUN": 0}).counts == {}

    def test_unknown_tag_tallied(self):
        tagged = MorphTaggedSegment(tokens=[("x", frozenset({"WEIRD"}))])
        tally = Counter()
        vec = aggregate_morph(tagged, {"NOUN": 0}, unknown_tally=tally)
        assert vec.counts == {} and tally == {"WEIRD": 1}

    def test_tsv_adapter_and_oracle_recount(self, tmp_path):
        path = tmp_path / "tagged.tsv"
        path.write_text(MORPH_TSV, encoding="utf-8")
        segments = read_tagged_tsv(path)
        assert [len(s.tokens) for s in segments] == [2, 2]
        tag_vocab = build_tag_vocab(segments)
        # Independent tally straight off the text.
        expected = Counter()
        for line in MORPH_TSV.splitlines():
            if line.strip():
                expected.update(line.split("\t")[1].split("|"))
        merged = Counter()
        for seg in segments:
            vec = aggregate_morph(seg, tag_vocab)
            for tag, idx in tag_vocab.items():
                if idx in vec.counts:
                    merged[tag] += vec.counts[idx]
        assert merged == expected

    def test_twenty_token_fixture_oracle(self, tmp_path):
        lines = []
        tags = ["NOUN", "VERB", "ADJ", "PREP"]
        for i in range(20):
            lines.append(f"w{i}\t{tags[i % 4]}|COMMON")
        path = tmp_path / "tagged.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        (segment,) = read_tagged_tsv(path)
        tag_vocab = build_tag_vocab([segment])
        vec = aggregate_morph(segment, tag_vocab)
        by_tag = {tag: vec.counts.get(idx, 0) for tag, idx in tag_vocab.items()}
        assert by_tag == {"NOUN": 5, "VERB": 5, "ADJ": 5, "PREP": 5, "COMMON": 20}
