"""Command-line front end.

Subcommands cover the whole workflow: ``detect`` ranks one corpus and flags
the review queue, ``bench`` scores detection methods against injected
errors, ``metrics`` reports variety and coverage, ``simulate`` runs the
scripted multi-round collection comparison, ``split`` cuts train/test
files, and ``serve`` starts the HTTP review service. Report commands write
tab-separated tables plus rendered figures into the output directory.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from dataclasses import replace
from pathlib import Path

from .corpus import LabeledCorpus, load_corpus, save_corpus
from .detection import (
    BASE_METHODS,
    DetectionConfig,
    EmbeddingResources,
    detect_all_classes,
    flag_top_k,
    parse_method_spec,
    write_ranked_lists,
)
from .embedding import load_precomputed, load_word_vectors
from .errors import TextsieveError
from .evaluation import InjectionConfig, MetricConfig, coverage, diversity, run_benchmark
from .generator import default_generator_config, generator_config_from_dict
from .pipeline import (
    PipelineConfig,
    collect_paraphrases,
    initial_seeds,
    run_simulation,
    split_dataset,
    start_round,
)
from .store import ProjectStore

FLOAT_FMT = "%.6f"


def _fmt(value: float) -> str:
    return FLOAT_FMT % value


def _write_rows(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = ["\t".join(header)] + ["\t".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resources(args) -> EmbeddingResources:
    word_vectors = load_word_vectors(args.vectors) if getattr(args, "vectors", None) else None
    precomputed = (
        load_precomputed(args.precomputed) if getattr(args, "precomputed", None) else None
    )
    return EmbeddingResources(word_vectors=word_vectors, precomputed=precomputed)


def _safe_name(method: str) -> str:
    return method.replace(":", "-").replace("+", "-")


# -- detect -------------------------------------------------------------------


def cmd_detect(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = DetectionConfig(method=args.method, k_percent=args.k_percent, seed=args.seed)
    lists = detect_all_classes(corpus, _resources(args), cfg)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_ranked_lists(lists, outdir / "ranked.jsonl")
    by_id = corpus.by_id()
    rows = []
    for class_key in corpus.class_keys():
        ranked = lists[class_key]
        flagged = set(flag_top_k(ranked, cfg.k_percent))
        for entry in ranked.entries:
            if entry.id in flagged:
                rows.append(
                    [class_key, entry.id, str(entry.rank), _fmt(entry.score), by_id[entry.id].text]
                )
    _write_rows(outdir / "flagged.tsv", ["class_key", "id", "rank", "score", "text"], rows)
    print(f"ranked {len(corpus)} utterances in {len(lists)} classes with {args.method}")
    print(f"flagged {len(rows)} for review (top {cfg.k_percent:g}%)")
    print(f"wrote {outdir / 'ranked.jsonl'} and {outdir / 'flagged.tsv'}")
    return 0


# -- bench --------------------------------------------------------------------


def cmd_bench(args) -> int:
    from .plotting import save_recall_curves

    corpus = load_corpus(args.corpus)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for method in methods:
        parse_method_spec(method)
    cfg = DetectionConfig(method=methods[0], k_percent=args.k_percent, seed=args.seed)
    result = run_benchmark(
        corpus,
        methods,
        InjectionConfig(p=args.inject_p, seed=args.seed),
        _resources(args),
        cfg,
        curve_step=args.curve_step,
    )
    outdir = Path(args.outdir)
    (outdir / "curves").mkdir(parents=True, exist_ok=True)
    class_keys = sorted(
        {key for row in result.rows for key in row.per_class_ap}
    )
    header = ["method", "mean_ap", f"recall@{args.k_percent:g}"] + [
        f"ap:{key}" for key in class_keys
    ]
    rows = []
    for row in result.rows:
        cells = [row.method, _fmt(row.mean_ap), _fmt(row.recall_at_k)]
        cells += [_fmt(row.per_class_ap[key]) if key in row.per_class_ap else "" for key in class_keys]
        rows.append(cells)
    _write_rows(outdir / "bench.tsv", header, rows)
    for method, curve in result.curves.items():
        curve_rows = [[str(k), _fmt(r)] for k, r in curve]
        _write_rows(outdir / "curves" / f"{_safe_name(method)}.tsv", ["k_percent", "recall"], curve_rows)
    save_recall_curves(result.curves, outdir / "recall_curves.png")
    for row in result.rows:
        print(f"{row.method}\tmap={_fmt(row.mean_ap)}\trecall@{args.k_percent:g}={_fmt(row.recall_at_k)}")
    print(f"wrote {outdir / 'bench.tsv'}, curves/, and {outdir / 'recall_curves.png'}")
    return 0


# -- metrics ------------------------------------------------------------------


def cmd_metrics(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = MetricConfig(max_ngram=args.max_ngram)
    rows = []
    for class_key, utts in corpus.classes.items():
        single = LabeledCorpus(classes={class_key: list(utts)})
        rows.append(["diversity", class_key, _fmt(diversity(single, cfg))])
    rows.append(["diversity", "ALL", _fmt(diversity(corpus, cfg))])
    if args.test:
        test = load_corpus(args.test)
        rows.append(["coverage", "ALL", _fmt(coverage(corpus, test, cfg))])
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_rows(outdir / "metrics.tsv", ["metric", "scope", "value"], rows)
    for metric, scope, value in rows:
        print(f"{metric}\t{scope}\t{value}")
    print(f"wrote {outdir / 'metrics.tsv'}")
    return 0


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .plotting import save_diversity_trend

    gen_cfg = default_generator_config(n_classes=args.classes, seed=args.generator_seed)
    pipe_cfg = PipelineConfig(
        strategy="unique",
        rounds=args.rounds,
        detection=DetectionConfig(method=args.method, k_percent=args.k_percent),
        seed=args.seed,
    )
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    result = run_simulation(pipe_cfg, gen_cfg, strategies=strategies)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    trend: dict[str, list[tuple[int, float]]] = {}
    for strategy in strategies:
        sr = result.per_strategy[strategy]
        for report in sr.rounds:
            rows.append(
                [strategy, str(report.number), str(report.samples), _fmt(report.diversity)]
            )
        trend[strategy] = [(r.number, r.diversity) for r in sr.rounds]
        rows.append([strategy, "final", str(len(sr.final)), _fmt(sr.final_diversity)])
    _write_rows(outdir / "diversity.tsv", ["strategy", "round", "samples", "diversity"], rows)
    save_diversity_trend(trend, outdir / "diversity_trend.png")
    for strategy in strategies:
        sr = result.per_strategy[strategy]
        sdir = outdir / strategy
        sdir.mkdir(parents=True, exist_ok=True)
        save_corpus(sr.final, sdir / "final.jsonl")
        save_corpus(sr.train, sdir / "train.jsonl")
        save_corpus(sr.test, sdir / "test.jsonl")
        with open(sdir / "log.jsonl", "w", encoding="utf-8") as fh:
            for event in sr.log:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        print(
            f"{strategy}\tfinal={len(sr.final)}\tdiversity={_fmt(sr.final_diversity)}"
            f"\ttrain={len(sr.train)}\ttest={len(sr.test)}"
        )
    print(f"wrote {outdir / 'diversity.tsv'} and {outdir / 'diversity_trend.png'}")
    return 0


# -- split --------------------------------------------------------------------


def cmd_split(args) -> int:
    corpus = load_corpus(args.corpus)
    train, test = split_dataset(corpus, train_fraction=args.train_fraction, seed=args.seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_corpus(train, outdir / "train.jsonl")
    save_corpus(test, outdir / "test.jsonl")
    print(f"train={len(train)}\ttest={len(test)}")
    print(f"wrote {outdir / 'train.jsonl'} and {outdir / 'test.jsonl'}")
    return 0


# -- serve --------------------------------------------------------------------


def _load_generator(args):
    if args.generator is None:
        return None
    if args.generator == "default":
        return default_generator_config(n_classes=args.classes, seed=args.generator_seed)
    with open(args.generator, encoding="utf-8") as fh:
        return generator_config_from_dict(json.load(fh))


def cmd_serve(args) -> int:
    store = ProjectStore(args.store)
    if not store.exists():
        gen_cfg = _load_generator(args)
        # without a generator there is nothing to collect past round 1
        rounds = args.rounds if args.rounds is not None else (3 if gen_cfg else 1)
        pipe_cfg = PipelineConfig(
            strategy=args.strategy,
            rounds=rounds,
            detection=DetectionConfig(method=args.method, k_percent=args.k_percent),
            seed=args.seed,
        )
        if args.corpus:
            corpus = load_corpus(args.corpus)
        elif gen_cfg is not None:
            state = start_round(initial_seeds(gen_cfg, pipe_cfg.seeds_per_class), pipe_cfg)
            collect_paraphrases(state, gen_cfg, pipe_cfg)
            corpus = state.collected
        else:
            raise TextsieveError("a new project needs --corpus or --generator")
        store = ProjectStore.create(
            args.store, corpus, pipe_cfg, generator=gen_cfg, vectors_path=args.vectors,
            metric=MetricConfig(max_ngram=args.max_ngram),
        )
        created = True
        print(f"created project at {store.root}")
    else:
        created = False
    from .service import create_app

    import uvicorn

    try:
        app = create_app(store)
    except TextsieveError:
        # an unbootable config must not survive as a store nobody can reopen
        if created:
            shutil.rmtree(store.root)
        raise
    print(f"serving {store.root} on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textsieve",
        description="Rank intent data by outlierness, review it, and grow collections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_detection(p):
        p.add_argument("--method", default="average",
                       help=f"one of {', '.join(BASE_METHODS)} or borda:m1+m2")
        p.add_argument("--k-percent", type=float, default=10.0, help="review budget in percent")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--vectors", help="word vector text file")

    p = sub.add_parser("detect", help="rank a corpus and flag the review queue")
    p.add_argument("corpus")
    p.add_argument("--outdir", required=True)
    add_common_detection(p)
    p.add_argument("--precomputed", help="precomputed embedding JSONL")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="score methods against injected errors")
    p.add_argument("corpus")
    p.add_argument("--outdir", required=True)
    p.add_argument("--methods", default="random,bow,average",
                   help="comma-separated method specs")
    p.add_argument("--inject-p", type=float, default=0.05)
    p.add_argument("--curve-step", type=int, default=10)
    p.add_argument("--k-percent", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vectors", help="word vector text file")
    p.add_argument("--precomputed", help="precomputed embedding JSONL")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("metrics", help="n-gram variety and coverage tables")
    p.add_argument("corpus")
    p.add_argument("--outdir", required=True)
    p.add_argument("--test", help="second corpus scored for coverage against the first")
    p.add_argument("--max-ngram", type=int, default=3)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", help="scripted multi-round collection comparison")
    p.add_argument("--outdir", required=True)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--seed", type=int, default=0, help="pipeline seed")
    p.add_argument("--generator-seed", type=int, default=13)
    p.add_argument("--strategies", default="same,random,unique")
    p.add_argument("--method", default="borda:average+sif")
    p.add_argument("--k-percent", type=float, default=10.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("split", help="per-class train/test split")
    p.add_argument("corpus")
    p.add_argument("--outdir", required=True)
    p.add_argument("--train-fraction", type=float, default=0.85)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("serve", help="run the HTTP review service over a project store")
    p.add_argument("store", help="project directory (created when missing)")
    p.add_argument("--corpus", help="corpus JSONL for a new project")
    p.add_argument("--generator", help="'default' or a generator config JSON file")
    p.add_argument("--classes", type=int, default=6, help="classes for the default generator")
    p.add_argument("--generator-seed", type=int, default=13)
    p.add_argument("--strategy", default="unique", choices=["same", "random", "unique"])
    p.add_argument("--rounds", type=int, help="collection rounds (default 3 with a generator, else 1)")
    p.add_argument("--method", default="borda:average+sif")
    p.add_argument("--k-percent", type=float, default=10.0)
    p.add_argument("--max-ngram", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vectors", help="word vector text file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TextsieveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
