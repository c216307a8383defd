"""Seeded synthetic corpora with known ground truth.

Each class gets a planted vocabulary; two classes deliberately share part
of theirs so a trained classifier shows the expected confusion between
them. Everything is a pure function of the seed, so fixtures are
reproducible across runs and machines.

Used by the test suite as an oracle (planted structure is recoverable) and
by the demo scripts as stand-in data when no real corpus checkout is
available.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass
from pathlib import Path

from .corpus import Document, Segment, downsample_balance, split_train_val
from .labels import ClassLabel, TRAIN_CLASSES

#: The pair of classes whose planted vocabularies overlap.
OVERLAP_PAIR = (ClassLabel.MIDRASH_AGGADAH, ClassLabel.TANHUMA)


@dataclass
class SyntheticCorpus:
    documents: list[Document]
    segments: list[Segment]
    planted_vocab: dict[ClassLabel, list[str]]
    shared_vocab: list[str]
    seed: int


@dataclass
class DetectionFixture:
    """An end-to-end detection scenario with known answers.

    The anthology holds ``n_quotes`` verbatim 50-token quotes of indexed
    corpus documents plus ``n_planted`` target-style passages that appear
    nowhere in the corpus; the planted segment keys are the expected
    detector output.
    """

    corpus: SyntheticCorpus
    train_segments: list[Segment]
    balanced_validation: list[Segment]
    anthology: list[Document]
    planted_keys: set[tuple[str, int]]
    quoted_from: dict[tuple[str, int], ClassLabel]
    target: ClassLabel


def _fresh_words(rng: random.Random, count: int, taken: set[str]) -> list[str]:
    words = []
    while len(words) < count:
        length = rng.randint(4, 7)
        word = "".join(rng.choice(string.ascii_lowercase) for _ in range(length))
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


def make_corpus(
    seed: int = 0,
    docs_per_class: int = 10,
    segments_per_doc: int = 50,
    segment_length: int = 50,
    planted_vocab_size: int = 60,
    shared_vocab_size: int = 150,
    planted_rate: float = 0.5,
    overlap_fraction: float = 0.3,
) -> SyntheticCorpus:
    """Generate a labeled corpus with class-specific token distributions."""
    rng = random.Random(seed)
    taken: set[str] = set()
    shared = _fresh_words(rng, shared_vocab_size, taken)
    overlap_count = int(round(overlap_fraction * planted_vocab_size))
    overlap_words = _fresh_words(rng, overlap_count, taken)
    planted: dict[ClassLabel, list[str]] = {}
    for label in TRAIN_CLASSES:
        if label in OVERLAP_PAIR:
            planted[label] = overlap_words + _fresh_words(
                rng, planted_vocab_size - overlap_count, taken
            )
        else:
            planted[label] = _fresh_words(rng, planted_vocab_size, taken)

    documents: list[Document] = []
    segments: list[Segment] = []
    for label in TRAIN_CLASSES:
        for d in range(docs_per_class):
            work = f"{label.value}_doc{d:02d}"
            doc_id = f"{label.value}/{work}"
            paragraphs = []
            for s in range(segments_per_doc):
                tokens = tuple(
                    _draw_token(rng, planted[label], shared, planted_rate)
                    for _ in range(segment_length)
                )
                segments.append(Segment(doc_id=doc_id, seq=s, tokens=tokens, label=label))
                paragraphs.append(" ".join(tokens))
            documents.append(
                Document(id=doc_id, work=work, label=label, raw_text="\n\n".join(paragraphs) + "\n")
            )
    return SyntheticCorpus(
        documents=documents,
        segments=segments,
        planted_vocab=planted,
        shared_vocab=shared,
        seed=seed,
    )


def _draw_token(
    rng: random.Random, planted: list[str], shared: list[str], planted_rate: float
) -> str:
    pool = planted if rng.random() < planted_rate else shared
    return rng.choice(pool)


def make_detection_fixture(
    seed: int = 0,
    n_quotes: int = 95,
    n_planted: int = 5,
    target: ClassLabel = ClassLabel.TANHUMA,
    **corpus_kwargs,
) -> DetectionFixture:
    corpus = make_corpus(seed=seed, **corpus_kwargs)
    split = split_train_val(corpus.segments, train_fraction=0.8, seed=seed)
    balanced = downsample_balance(split.validation, seed=seed)

    rng = random.Random(seed + 1)
    anthology: list[Document] = []
    quoted_from: dict[tuple[str, int], ClassLabel] = {}
    planted_keys: set[tuple[str, int]] = set()
    passage_length = 50

    for i in range(n_quotes):
        source = rng.choice(corpus.documents)
        tokens = source.raw_text.split()
        offset = rng.randrange(0, len(tokens) - passage_length + 1)
        doc_id = f"anthology/p{i:03d}"
        anthology.append(
            Document(
                id=doc_id,
                work=f"passage {i}",
                label=ClassLabel.UNKNOWN,
                raw_text=" ".join(tokens[offset : offset + passage_length]),
            )
        )
        quoted_from[(doc_id, 0)] = source.label

    for i in range(n_quotes, n_quotes + n_planted):
        tokens = [
            _draw_token(rng, corpus.planted_vocab[target], corpus.shared_vocab, 0.5)
            for _ in range(passage_length)
        ]
        doc_id = f"anthology/p{i:03d}"
        anthology.append(
            Document(
                id=doc_id,
                work=f"passage {i}",
                label=ClassLabel.UNKNOWN,
                raw_text=" ".join(tokens),
            )
        )
        planted_keys.add((doc_id, 0))

    return DetectionFixture(
        corpus=corpus,
        train_segments=split.train,
        balanced_validation=balanced,
        anthology=anthology,
        planted_keys=planted_keys,
        quoted_from=quoted_from,
        target=target,
    )


def write_corpus_tree(corpus: SyntheticCorpus, root: str | Path) -> Path:
    """Materialize the corpus as ``<root>/<class>/<work>.txt`` plus manifest.tsv."""
    root = Path(root)
    manifest_lines = []
    for doc in corpus.documents:
        path = root / (doc.id + ".txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc.raw_text, encoding="utf-8")
        work = path.stem
        manifest_lines.append(f"{work}\t{doc.label.value}")
    manifest = root / "manifest.tsv"
    manifest.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    return manifest
