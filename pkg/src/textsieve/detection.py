"""Distance-from-mean outlier ranking, simple baselines, and rank fusion.

Detection runs independently inside each class: embed the class, take its
mean vector, and order utterances by Euclidean distance from that mean with
the most distant first, so "review the top k%" is always a prefix of the
list. Ties break on ascending id so results are reproducible. Several
per-class rankings can be fused positionally (Borda count).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import LabeledCorpus, Utterance
from .embedding import (
    EmbeddingMatrix,
    FrequencyTable,
    SifConfig,
    WordVectorTable,
    count_frequencies,
    embed_average_matrix,
    embed_bow,
    embed_sif,
)
from .errors import DetectionError, EmbedError
from .rng import stable_rng, stable_seed

BASE_METHODS = ("average", "sif", "precomputed", "bow", "random", "short", "long")


@dataclass(frozen=True)
class RankedEntry:
    id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    """Per-class ranking, most outlying first, ties on ascending id."""

    class_key: str
    entries: tuple[RankedEntry, ...]
    method: str

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]


@dataclass(frozen=True)
class DetectionConfig:
    """Which ranking to run and how much of it to flag.

    ``method`` is one of the base methods or a fusion spec such as
    ``"borda:average+sif"``. ``k_percent`` is the review-budget cutoff.
    """

    method: str = "average"
    k_percent: float = 10.0
    seed: int = 0


@dataclass
class EmbeddingResources:
    """Everything detection may need to build matrices."""

    word_vectors: WordVectorTable | None = None
    frequencies: FrequencyTable | None = None
    precomputed: EmbeddingMatrix | None = None
    sif: SifConfig = field(default_factory=SifConfig)


def build_ranked_list(class_key: str, scores: Mapping[str, float], method: str) -> RankedList:
    """Order ``scores`` descending (ties ascending by id) and assign ranks."""
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = tuple(
        RankedEntry(id=id_, score=float(score), rank=rank)
        for rank, (id_, score) in enumerate(order, start=1)
    )
    return RankedList(class_key=class_key, entries=entries, method=method)


def class_mean(matrix: EmbeddingMatrix) -> np.ndarray:
    if matrix.rows.shape[0] == 0:
        raise DetectionError("cannot take the mean of an empty class")
    return matrix.rows.mean(axis=0)


def rank_by_distance(matrix: EmbeddingMatrix, class_key: str, method: str = "distance") -> RankedList:
    """Rank rows by Euclidean distance from the class mean, farthest first."""
    mean = class_mean(matrix)
    dists = np.linalg.norm(matrix.rows - mean, axis=1)
    return build_ranked_list(class_key, dict(zip(matrix.ids, dists)), method)


def rank_baseline(utterances: Sequence[Utterance], method: str, seed: int = 0) -> RankedList:
    """Reference orderings that ignore content geometry.

    ``random`` is a seeded shuffle; ``short`` puts fewer-token utterances
    first; ``long`` the reverse. Scores are synthetic ranks, kept only so the
    list obeys the usual non-increasing-score shape.
    """
    if not utterances:
        raise DetectionError("cannot rank an empty class")
    class_key = utterances[0].class_key
    utts = sorted(utterances, key=lambda u: u.id)  # canonical order first
    if method == "random":
        rng = stable_rng("baseline", seed)
        order = list(utts)
        rng.shuffle(order)
        scores = {u.id: float(len(order) - i) for i, u in enumerate(order)}
    elif method == "short":
        longest = max(len(u.tokens) for u in utts)
        scores = {u.id: float(longest - len(u.tokens)) for u in utts}
    elif method == "long":
        scores = {u.id: float(len(u.tokens)) for u in utts}
    else:
        raise DetectionError(f"unknown baseline {method!r}")
    return build_ranked_list(class_key, scores, method)


def borda_merge(lists: Sequence[RankedList]) -> RankedList:
    """Positional fusion of rankings over one shared id set.

    An entry at 1-based position ``i`` in a list of length ``N`` earns
    ``N - i`` points; entries are reordered by total points, ties on
    ascending id. All input lists must cover identical ids for the same
    class.
    """
    if not lists:
        raise DetectionError("need at least one ranked list to merge")
    base = lists[0]
    base_ids = set(base.ids())
    for other in lists[1:]:
        if other.class_key != base.class_key:
            raise DetectionError(
                f"cannot merge rankings for {base.class_key!r} and {other.class_key!r}"
            )
        if set(other.ids()) != base_ids:
            raise DetectionError("ranked lists cover different id sets")
    points = {id_: 0 for id_ in base_ids}
    for rl in lists:
        n = len(rl.entries)
        for e in rl.entries:
            points[e.id] += n - e.rank
    methods = "+".join(dict.fromkeys(rl.method for rl in lists))
    return build_ranked_list(
        base.class_key, {i: float(p) for i, p in points.items()}, f"borda:{methods}"
    )


def flag_top_k(ranked: RankedList, k_percent: float) -> list[str]:
    """Ids of the most-outlying ``ceil(n * k / 100)`` entries, in rank order."""
    if not 0 <= k_percent <= 100:
        raise DetectionError(f"k_percent must be within [0, 100], got {k_percent}")
    n = len(ranked.entries)
    cutoff = math.ceil(n * k_percent / 100)
    return [e.id for e in ranked.entries[:cutoff]]


def parse_method_spec(spec: str) -> list[str]:
    """Split a method string into base methods; validates names."""
    if spec.startswith("borda:"):
        parts = spec[len("borda:"):].split("+")
        if len(parts) < 2:
            raise DetectionError(f"fusion spec {spec!r} needs at least two methods")
    else:
        parts = [spec]
    for p in parts:
        if p not in BASE_METHODS:
            raise DetectionError(f"unknown method {p!r} (expected one of {BASE_METHODS})")
    return parts


def detect_all_classes(
    corpus: LabeledCorpus,
    resources: EmbeddingResources | None = None,
    cfg: DetectionConfig = DetectionConfig(),
) -> dict[str, RankedList]:
    """Run the configured ranking independently over every class.

    Returns one :class:`RankedList` per class key. Failures carry the class
    key they happened in.
    """
    resources = resources or EmbeddingResources()
    components = parse_method_spec(cfg.method)
    freq = resources.frequencies
    if "sif" in components and freq is None:
        freq = count_frequencies(corpus)
    out: dict[str, RankedList] = {}
    for class_key, utts in corpus.classes.items():
        try:
            ranked = [_rank_one(class_key, utts, m, resources, freq, cfg) for m in components]
            out[class_key] = ranked[0] if len(ranked) == 1 else borda_merge(ranked)
        except (DetectionError, EmbedError) as exc:
            raise DetectionError(f"class {class_key!r}: {exc}") from exc
    return out


def _rank_one(
    class_key: str,
    utts: Sequence[Utterance],
    method: str,
    resources: EmbeddingResources,
    freq: FrequencyTable | None,
    cfg: DetectionConfig,
) -> RankedList:
    if method in ("random", "short", "long"):
        return rank_baseline(utts, method, seed=stable_seed("detect", cfg.seed, class_key))
    if method == "bow":
        return rank_by_distance(embed_bow(utts), class_key, method="bow")
    if method == "average":
        if resources.word_vectors is None:
            raise DetectionError("method 'average' needs word vectors")
        return rank_by_distance(
            embed_average_matrix(utts, resources.word_vectors), class_key, method="average"
        )
    if method == "sif":
        if resources.word_vectors is None:
            raise DetectionError("method 'sif' needs word vectors")
        assert freq is not None
        matrix = embed_sif(utts, resources.word_vectors, freq, resources.sif)
        return rank_by_distance(matrix, class_key, method="sif")
    if method == "precomputed":
        if resources.precomputed is None:
            raise DetectionError("method 'precomputed' needs a loaded vector file")
        matrix = resources.precomputed.submatrix([u.id for u in utts])
        return rank_by_distance(matrix, class_key, method="precomputed")
    raise DetectionError(f"unknown method {method!r}")


def write_ranked_lists(lists: Mapping[str, RankedList], path: str) -> None:
    """Export rankings as JSON lines: class_key, rank, id, score, method."""
    with open(path, "w", encoding="utf-8") as fh:
        for class_key in lists:
            rl = lists[class_key]
            for e in rl.entries:
                fh.write(
                    json.dumps(
                        {
                            "class_key": rl.class_key,
                            "rank": e.rank,
                            "id": e.id,
                            "score": e.score,
                            "method": rl.method,
                        }
                    )
                    + "\n"
                )


def load_ranked_lists(path: str) -> dict[str, RankedList]:
    """Read rankings written by :func:`write_ranked_lists`."""
    grouped: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                grouped.setdefault(rec["class_key"], []).append(rec)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DetectionError(f"{path}:{lineno}: bad ranked entry: {exc}") from exc
    out: dict[str, RankedList] = {}
    for class_key, recs in grouped.items():
        recs.sort(key=lambda r: r["rank"])
        entries = tuple(RankedEntry(id=r["id"], score=float(r["score"]), rank=r["rank"]) for r in recs)
        if [e.rank for e in entries] != list(range(1, len(entries) + 1)):
            raise DetectionError(f"{path}: ranks for class {class_key!r} are not 1..n")
        out[class_key] = RankedList(class_key=class_key, entries=entries, method=recs[0]["method"])
    return out
