#!/usr/bin/env python3
"""Materialize a synthetic corpus tree, anthology, and pipeline config.

The result is a self-contained working directory for exercising the full
CLI without any real corpus checkout:

    python scripts/make_synthetic_corpus.py --dest /tmp/demo --seed 7
    stylo pipeline --config /tmp/demo/run.toml
"""

import argparse
from pathlib import Path

from stylo import synthetic
from stylo.corpus import document_to_json

RUN_TOML = """\
seed = {seed}

[paths]
root = "tree"
manifest = "tree/manifest.tsv"
anthology = "anthology.jsonl"
labels = "labels.tsv"
out_dir = "out"

[segment]
block_size = 50
drop_short = 10

[vocab]
min_df = 2

[detect]
target = "Tanhuma"
filter_ratio = "0.2"
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quotes", type=int, default=95)
    parser.add_argument("--planted", type=int, default=5)
    args = parser.parse_args()

    fx = synthetic.make_detection_fixture(
        seed=args.seed, n_quotes=args.quotes, n_planted=args.planted
    )
    args.dest.mkdir(parents=True, exist_ok=True)
    synthetic.write_corpus_tree(fx.corpus, args.dest / "tree")
    (args.dest / "anthology.jsonl").write_text(
        "".join(document_to_json(d) + "\n" for d in fx.anthology), encoding="utf-8"
    )
    # Ground-truth annotation file in the expert-labeling exchange format:
    # planted passages are the positives.
    lines = []
    for doc in fx.anthology:
        verdict = "positive" if (doc.id, 0) in fx.planted_keys else "negative"
        lines.append(f"{doc.id}\t0\t{verdict}")
    (args.dest / "labels.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (args.dest / "run.toml").write_text(RUN_TOML.format(seed=args.seed), encoding="utf-8")
    print(f"wrote corpus tree, anthology ({len(fx.anthology)} passages), labels, run.toml")
    print(f"planted lost passages: {sorted(k[0] for k in fx.planted_keys)}")
    print(f"next: stylo pipeline --config {args.dest / 'run.toml'}")


if __name__ == "__main__":
    main()
