"""Shared fixtures: one seeded synthetic world, trained once per session."""

from types import SimpleNamespace

import pytest

from stylo import classifier, corpus, features, pipeline, reuse, synthetic
from stylo.normalize import default_rules


@pytest.fixture(scope="session")
def detection_fixture():
    return synthetic.make_detection_fixture(seed=0)


@pytest.fixture(scope="session")
def trained_bundle(detection_fixture):
    fx = detection_fixture
    rules_hash = default_rules().content_hash()
    vocab = features.build_vocab(
        fx.train_segments,
        min_df=2,
        corpus_hash=corpus.segments_hash(fx.train_segments),
        rules_hash=rules_hash,
    )
    weights = classifier.class_weights_balanced(corpus.class_counts(fx.train_segments))
    model = classifier.train_logreg(
        [features.vectorize(s, vocab) for s in fx.train_segments],
        [s.label for s in fx.train_segments],
        weights,
        classifier.TrainConfig(),
        vocab=vocab,
        rules_hash=rules_hash,
    )
    index = reuse.build_index(fx.corpus.documents)
    index.rules_hash = rules_hash
    return SimpleNamespace(
        fixture=fx, vocab=vocab, model=model, index=index, rules_hash=rules_hash
    )


@pytest.fixture(scope="session")
def detection_records(trained_bundle):
    return pipeline.detect_candidates(
        trained_bundle.fixture.anthology,
        trained_bundle.model,
        trained_bundle.index,
        target=trained_bundle.fixture.target,
    )
