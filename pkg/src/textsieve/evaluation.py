"""Detection quality and corpus variety measurement.

Two families of metrics live here. Ranking quality treats planted errors as
the relevant items of an information-retrieval run: average precision per
class, its mean over classes, and recall at a top-k% cutoff. Corpus variety
scores a collection by n-gram overlap: the distance between two utterances
is one minus their mean Jaccard similarity over n-gram orders, diversity
averages that distance over all within-class pairs, and coverage asks how
close each held-out utterance is to its nearest training neighbour.

Planted errors come from :func:`inject_errors`, which clones utterances from
other classes into each class under fresh ids so ground truth is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .corpus import LabeledCorpus, Utterance, corpus_from_utterances
from .detection import (
    DetectionConfig,
    EmbeddingResources,
    RankedList,
    detect_all_classes,
)
from .errors import EvalError
from .rng import stable_rng


@dataclass(frozen=True)
class InjectionConfig:
    """Error-planting rate and seed. ``p`` is a fraction, not a percent."""

    p: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise EvalError(f"injection rate must sit strictly inside (0, 1), got {self.p}")


def inject_errors(
    corpus: LabeledCorpus, cfg: InjectionConfig
) -> tuple[LabeledCorpus, dict[str, set[str]]]:
    """Plant cross-class clones into every class and return ground truth.

    Each class of size ``n`` receives ``max(1, round(p * n))`` utterances
    drawn without replacement from the union of the *other* classes. Clones
    get fresh ids and the destination class key; source classes are left
    untouched. Draws use one stream per class derived from ``(seed,
    class_key)``, so adding a class does not reshuffle the others.

    Returns the enlarged corpus and a map from class key to the set of
    injected (ground-truth error) ids.
    """
    keys = list(corpus.classes)
    if len(keys) < 2:
        raise EvalError("cross-class injection needs at least two classes")
    existing = corpus.ids()
    truth: dict[str, set[str]] = {}
    new_classes: dict[str, list[Utterance]] = {k: list(v) for k, v in corpus.classes.items()}
    for class_key in keys:
        pool = [
            u
            for other in sorted(keys)
            if other != class_key
            for u in corpus.classes[other]
        ]
        count = max(1, round(cfg.p * len(corpus.classes[class_key])))
        if count > len(pool):
            raise EvalError(
                f"class {class_key!r} needs {count} injected samples "
                f"but other classes only hold {len(pool)}"
            )
        rng = stable_rng("inject", cfg.seed, class_key)
        picks = rng.sample(pool, count)
        injected: set[str] = set()
        for j, src in enumerate(picks):
            new_id = f"inj-{class_key}-{j}"
            if new_id in existing:
                raise EvalError(f"injected id {new_id!r} collides with the corpus")
            clone = Utterance(
                id=new_id,
                text=src.text,
                class_key=class_key,
                tokens=src.tokens,
                slots=src.slots,
            )
            new_classes[class_key].append(clone)
            injected.add(new_id)
        truth[class_key] = injected
    enlarged = corpus_from_utterances(
        u for key in new_classes for u in new_classes[key]
    )
    return enlarged, truth


def average_precision(ranked: RankedList, errors: set[str]) -> float:
    """Average precision of a ranked list against known error ids.

    Walking the list from most outlying down, every position holding an
    error contributes the precision of the prefix ending there; the mean of
    those contributions over all errors is returned. 1.0 means every error
    sits at the very top.
    """
    if not errors:
        raise EvalError(f"class {ranked.class_key!r} has no errors to score")
    ids = ranked.ids()
    missing = errors - set(ids)
    if missing:
        raise EvalError(
            f"class {ranked.class_key!r}: error ids {sorted(missing)[:5]} not in the ranking"
        )
    hits = 0
    total = 0.0
    for position, id_ in enumerate(ids, start=1):
        if id_ in errors:
            hits += 1
            total += hits / position
    return total / len(errors)


def recall_at_k(ranked: RankedList, errors: set[str], k_percent: float) -> float:
    """Fraction of errors inside the top ``ceil(n * k / 100)`` entries."""
    if not errors:
        raise EvalError(f"class {ranked.class_key!r} has no errors to score")
    if not 0 <= k_percent <= 100:
        raise EvalError(f"k_percent must be within [0, 100], got {k_percent}")
    n = len(ranked.entries)
    cutoff = math.ceil(n * k_percent / 100)
    found = sum(1 for e in ranked.entries[:cutoff] if e.id in errors)
    return found / len(errors)


def recall_curve(
    ranked: RankedList, errors: set[str], step: int = 10
) -> list[tuple[float, float]]:
    """Recall sampled at k = 0, step, ..., 100. ``step`` must divide 100."""
    if step < 1 or 100 % step != 0:
        raise EvalError(f"curve step must divide 100, got {step}")
    return [(float(k), recall_at_k(ranked, errors, k)) for k in range(0, 101, step)]


@dataclass(frozen=True)
class EvalReport:
    """Per-class and aggregate ranking quality for one method."""

    method: str
    per_class_ap: Mapping[str, float]
    mean_ap: float
    recall_curve: tuple[tuple[float, float], ...]
    excluded_classes: tuple[str, ...]


def mean_average_precision(
    lists: Mapping[str, RankedList],
    truth: Mapping[str, set[str]],
    method: str | None = None,
    curve_step: int = 10,
) -> EvalReport:
    """Aggregate average precision over every class holding errors.

    Classes without a single labeled error cannot be scored and are recorded
    in ``excluded_classes`` instead of diluting the mean. The recall curve is
    the per-k mean over the included classes.
    """
    per_class: dict[str, float] = {}
    excluded: list[str] = []
    for class_key, ranked in lists.items():
        errors = set(truth.get(class_key, set()))
        if errors:
            per_class[class_key] = average_precision(ranked, errors)
        else:
            excluded.append(class_key)
    if not per_class:
        raise EvalError("no class has labeled errors; nothing to average")
    mean_ap = sum(per_class.values()) / len(per_class)
    ks = range(0, 101, _checked_step(curve_step))
    curve = []
    for k in ks:
        recalls = [
            recall_at_k(lists[c], set(truth[c]), k) for c in per_class
        ]
        curve.append((float(k), sum(recalls) / len(recalls)))
    if method is None:
        method = next(iter(lists.values())).method if lists else ""
    return EvalReport(
        method=method,
        per_class_ap=per_class,
        mean_ap=mean_ap,
        recall_curve=tuple(curve),
        excluded_classes=tuple(excluded),
    )


def _checked_step(step: int) -> int:
    if step < 1 or 100 % step != 0:
        raise EvalError(f"curve step must divide 100, got {step}")
    return step


# ---------------------------------------------------------------------------
# n-gram variety


@dataclass(frozen=True)
class MetricConfig:
    """Variety-metric settings: compare n-grams up to ``max_ngram``."""

    max_ngram: int = 3

    def __post_init__(self) -> None:
        if self.max_ngram < 1:
            raise EvalError("max_ngram must be at least 1")


def ngram_sets(tokens: Sequence[str], max_ngram: int) -> tuple[frozenset, ...]:
    """The token n-gram set for each order 1..max_ngram."""
    toks = tuple(tokens)
    return tuple(
        frozenset(toks[i : i + n] for i in range(len(toks) - n + 1))
        for n in range(1, max_ngram + 1)
    )


def _profile_distance(
    pa: tuple[frozenset, ...], pb: tuple[frozenset, ...], len_a: int, len_b: int, max_ngram: int
) -> float:
    # Orders beyond the longer utterance are skipped; degenerate inputs
    # still average over one order. Two empty sets count as identical so the
    # distance of an utterance to itself is 0 at every order.
    n_eff = max(1, min(max_ngram, max(len_a, len_b)))
    total = 0.0
    for n in range(1, n_eff + 1):
        sa, sb = pa[n - 1], pb[n - 1]
        if not sa and not sb:
            total += 1.0
        else:
            total += len(sa & sb) / len(sa | sb)
    return 1.0 - total / n_eff


def pair_distance(
    a: Utterance | Sequence[str], b: Utterance | Sequence[str], cfg: MetricConfig = MetricConfig()
) -> float:
    """n-gram distance between two utterances (or bare token lists), in [0, 1].

    One minus the mean Jaccard similarity of their n-gram sets over orders
    up to ``cfg.max_ngram`` (capped at the longer utterance's length). 0
    means identical token sequences; 1 means no shared n-grams at any
    compared order.
    """
    ta = a.tokens if isinstance(a, Utterance) else tuple(a)
    tb = b.tokens if isinstance(b, Utterance) else tuple(b)
    pa = ngram_sets(ta, cfg.max_ngram)
    pb = ngram_sets(tb, cfg.max_ngram)
    return _profile_distance(pa, pb, len(ta), len(tb), cfg.max_ngram)


def diversity(corpus: LabeledCorpus, cfg: MetricConfig = MetricConfig()) -> float:
    """Mean within-class pairwise distance, self-pairs included.

    For each class the distance is averaged over all ordered pairs
    (``n**2`` of them, the n self-pairs contributing 0), then class scores
    are averaged. Higher means paraphrases repeat each other less.
    """
    if not corpus.classes:
        raise EvalError("cannot score an empty corpus")
    class_scores: list[float] = []
    for class_key, utts in corpus.classes.items():
        if not utts:
            raise EvalError(f"class {class_key!r} is empty")
        profiles = [ngram_sets(u.tokens, cfg.max_ngram) for u in utts]
        lens = [len(u.tokens) for u in utts]
        n = len(utts)
        total = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                total += 2.0 * _profile_distance(
                    profiles[i], profiles[j], lens[i], lens[j], cfg.max_ngram
                )
        class_scores.append(total / (n * n))
    return sum(class_scores) / len(class_scores)


def coverage(
    train: LabeledCorpus, test: LabeledCorpus, cfg: MetricConfig = MetricConfig()
) -> float:
    """How well ``train`` explains ``test``, class by class.

    Every test utterance scores the similarity (one minus distance) of its
    nearest training utterance in the same class; scores are averaged within
    and then across classes. A corpus covers itself with 1.0.
    """
    if set(train.classes) != set(test.classes):
        raise EvalError("train and test corpora must hold the same class keys")
    class_scores: list[float] = []
    for class_key in test.classes:
        train_utts = train.classes[class_key]
        test_utts = test.classes[class_key]
        if not train_utts or not test_utts:
            raise EvalError(f"class {class_key!r} is empty on one side")
        train_profiles = [(ngram_sets(u.tokens, cfg.max_ngram), len(u.tokens)) for u in train_utts]
        best_sum = 0.0
        for b in test_utts:
            pb = ngram_sets(b.tokens, cfg.max_ngram)
            lb = len(b.tokens)
            best = max(
                1.0 - _profile_distance(pa, pb, la, lb, cfg.max_ngram)
                for pa, la in train_profiles
            )
            best_sum += best
        class_scores.append(best_sum / len(test_utts))
    return sum(class_scores) / len(class_scores)


# ---------------------------------------------------------------------------
# benchmark orchestration


@dataclass(frozen=True)
class BenchRow:
    method: str
    mean_ap: float
    recall_at_k: float
    per_class_ap: Mapping[str, float]


@dataclass(frozen=True)
class BenchmarkResult:
    """Method comparison over one injected corpus."""

    rows: tuple[BenchRow, ...]
    curves: Mapping[str, tuple[tuple[float, float], ...]]
    k_percent: float
    excluded_classes: tuple[str, ...]
    truth: Mapping[str, frozenset[str]]


def run_benchmark(
    corpus: LabeledCorpus,
    methods: Sequence[str],
    injection: InjectionConfig | Mapping[str, set[str]],
    resources: EmbeddingResources | None = None,
    cfg: DetectionConfig = DetectionConfig(),
    curve_step: int = 10,
) -> BenchmarkResult:
    """Score every requested method against planted or labeled errors.

    ``injection`` is either an :class:`InjectionConfig` (errors get planted
    here) or a ready ground-truth map for an already-labeled corpus. Each
    method contributes one table row (mean AP, mean recall at
    ``cfg.k_percent``) plus its recall curve. Fixed seeds make the whole run
    reproducible.
    """
    if not methods:
        raise EvalError("no methods requested")
    if isinstance(injection, InjectionConfig):
        seeded, truth = inject_errors(corpus, injection)
    else:
        seeded, truth = corpus, {k: set(v) for k, v in injection.items()}
    rows: list[BenchRow] = []
    curves: dict[str, tuple[tuple[float, float], ...]] = {}
    excluded: tuple[str, ...] = ()
    for method in methods:
        lists = detect_all_classes(seeded, resources, replace(cfg, method=method))
        report = mean_average_precision(lists, truth, method=method, curve_step=curve_step)
        recalls = [
            recall_at_k(lists[c], set(truth[c]), cfg.k_percent)
            for c in report.per_class_ap
        ]
        rows.append(
            BenchRow(
                method=method,
                mean_ap=report.mean_ap,
                recall_at_k=sum(recalls) / len(recalls),
                per_class_ap=dict(report.per_class_ap),
            )
        )
        curves[method] = report.recall_curve
        excluded = report.excluded_classes
    return BenchmarkResult(
        rows=tuple(rows),
        curves=curves,
        k_percent=cfg.k_percent,
        excluded_classes=excluded,
        truth={k: frozenset(v) for k, v in truth.items()},
    )
