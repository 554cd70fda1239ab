"""Clustered toy corpora with matching word vectors, for benchmarks and demos.

Each class gets its own pseudo-word vocabulary whose vectors cluster around
a class centre, plus a few shared function words near the origin. Sentences
sample mostly in-class words, so averaged sentence vectors cluster tightly
per class while bag-of-words rows stay spread out: good geometry for
exercising the detector spectrum end to end.

Run as a module to write a demo corpus and vector file::

    python -m textsieve.synthetic OUTDIR --classes 10 --per-class 100
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

import numpy as np

from .corpus import LabeledCorpus, Utterance, corpus_from_utterances, save_corpus
from .embedding import WordVectorTable
from .rng import stable_rng, stable_seed

_SHARED_WORDS = (
    "the", "a", "my", "to", "do", "i", "can", "you", "how", "what", "is", "me",
)

_SYLLABLES = (
    "al", "bo", "cu", "di", "en", "fa", "gi", "ho", "ir", "ja",
    "ke", "lu", "ma", "no", "op", "pe", "qui", "ro", "sa", "tu",
)


def _pseudo_word(rng: random.Random, used: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in used and word not in _SHARED_WORDS:
            used.add(word)
            return word


def make_clustered_dataset(
    n_classes: int = 10,
    per_class: int = 100,
    dim: int = 16,
    class_vocab: int = 12,
    seed: int = 29,
    center_scale: float = 6.0,
    spread: float = 0.5,
) -> tuple[LabeledCorpus, WordVectorTable]:
    """Corpus plus word vectors with per-class clusters.

    Sentences are 5 to 9 tokens long: two shared function words plus
    in-class words. Class vocabularies are disjoint; their vectors sit at
    ``center + N(0, spread**2)`` around a class centre of norm roughly
    ``center_scale``, while shared words sit near the origin. The small
    per-class vocabulary keeps same-class sentences overlapping in token
    counts, so bag-of-words distance carries some but not all of the
    cluster signal the vectors carry.
    """
    rng = stable_rng("clustered", seed)
    used: set[str] = set(_SHARED_WORDS)
    vectors: dict[str, np.ndarray] = {}
    for word in _SHARED_WORDS:
        wrng = np.random.default_rng(stable_seed("sharedvec", seed, word))
        vectors[word] = spread * wrng.standard_normal(dim)
    utterances: list[Utterance] = []
    for c in range(n_classes):
        class_key = f"intent{c:02d}"
        crng = np.random.default_rng(stable_seed("center", seed, c))
        center = crng.standard_normal(dim)
        center = center_scale * center / np.linalg.norm(center)
        words = []
        for w in range(class_vocab):
            word = _pseudo_word(rng, used)
            wrng = np.random.default_rng(stable_seed("classvec", seed, c, w))
            vectors[word] = center + spread * wrng.standard_normal(dim)
            words.append(word)
        for i in range(per_class):
            length = rng.randint(5, 9)
            toks = list(rng.sample(_SHARED_WORDS, 2))
            toks += rng.choices(words, k=length - 2)
            rng.shuffle(toks)
            utterances.append(
                Utterance(
                    id=f"{class_key}-{i:03d}",
                    text=" ".join(toks),
                    class_key=class_key,
                    tokens=tuple(toks),
                )
            )
    table = WordVectorTable(dim=dim, vectors=vectors, source="clustered-toy")
    return corpus_from_utterances(utterances), table


def save_word_vectors(table: WordVectorTable, path: str) -> None:
    """Write a table in the plain ``word v1 .. vd`` text format."""
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(table.vectors):
            comps = " ".join(f"{x:.8f}" for x in table.vectors[word])
            fh.write(f"{word} {comps}\n")


def write_demo(outdir: str, n_classes: int = 10, per_class: int = 100, seed: int = 29) -> tuple[Path, Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, table = make_clustered_dataset(n_classes=n_classes, per_class=per_class, seed=seed)
    corpus_path = out / "corpus.jsonl"
    vectors_path = out / "vectors.txt"
    save_corpus(corpus, str(corpus_path))
    save_word_vectors(table, str(vectors_path))
    return corpus_path, vectors_path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write a clustered demo corpus and vector file.")
    parser.add_argument("outdir")
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--per-class", type=int, default=100)
    parser.add_argument("--seed", type=int, default=29)
    args = parser.parse_args(argv)
    corpus_path, vectors_path = write_demo(args.outdir, args.classes, args.per_class, args.seed)
    print(f"wrote {corpus_path} and {vectors_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
