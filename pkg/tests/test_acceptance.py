"""End-to-end acceptance checks, one test per release criterion.

Each test states its thresholds inline and carries a wall-clock budget, so
a run of this file doubles as the release checklist. Heavier scenario
tests live at the bottom.
"""

from __future__ import annotations

import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from textsieve.corpus import corpus_to_lines, make_utterance
from textsieve.detection import (
    DetectionConfig,
    EmbeddingResources,
    borda_merge,
    build_ranked_list,
    flag_top_k,
    rank_by_distance,
)
from textsieve.embedding import (
    EmbeddingMatrix,
    FrequencyTable,
    dominant_direction,
    remove_common_component,
    sif_weight,
)
from textsieve.evaluation import (
    InjectionConfig,
    MetricConfig,
    average_precision,
    coverage,
    diversity,
    mean_average_precision,
    pair_distance,
    recall_at_k,
    run_benchmark,
)
from textsieve.generator import default_generator_config
from textsieve.pipeline import (
    PipelineConfig,
    collect_paraphrases,
    initial_seeds,
    run_simulation,
    start_round,
)
from textsieve.service import create_app
from textsieve.store import ProjectStore
from textsieve.synthetic import make_clustered_dataset

from conftest import make_corpus, random_token_list
from oracles import (
    oracle_average_precision,
    oracle_mean_ap,
    oracle_recall_at_k,
)


class Budget:
    """Asserts the enclosed work stayed under a wall-clock limit."""

    def __init__(self, seconds: float):
        self.limit = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *exc):
        elapsed = time.monotonic() - self.start
        if exc[0] is None:
            assert elapsed < self.limit, f"took {elapsed:.1f}s, budget {self.limit:.0f}s"
        return False


def ranked_from_ids(ids, class_key="c"):
    n = len(ids)
    return build_ranked_list(class_key, {id_: float(n - i) for i, id_ in enumerate(ids)}, "m")


def test_metric_oracle_equivalence():
    # AP, MAP and Recall@k must equal a brute-force prefix-enumeration
    # oracle exactly, over 1000 random instances.
    rng = random.Random(2024)
    with Budget(5.0):
        for case in range(900):
            n = rng.randint(1, 40)
            ids = [f"u{i}" for i in range(n)]
            rng.shuffle(ids)
            ranked = ranked_from_ids(ids)
            errors = set(rng.sample(ids, rng.randint(1, n)))
            k = float(rng.randint(0, 100))
            assert average_precision(ranked, errors) == oracle_average_precision(ids, errors)
            assert recall_at_k(ranked, errors, k) == oracle_recall_at_k(ids, errors, k)
        for case in range(100):
            lists, ranked_ids, truth = {}, {}, {}
            for c in range(rng.randint(1, 6)):
                key = f"class{c}"
                ids = [f"{key}-u{i}" for i in range(rng.randint(1, 25))]
                rng.shuffle(ids)
                lists[key] = ranked_from_ids(ids, key)
                ranked_ids[key] = ids
                truth[key] = set(rng.sample(ids, rng.randint(0, len(ids))))
            if not any(truth.values()):
                truth[key] = {ids[0]}
            report = mean_average_precision(lists, truth)
            assert report.mean_ap == oracle_mean_ap(ranked_ids, truth)


def test_variety_identities():
    cfg = MetricConfig()
    rng = random.Random(515)
    with Budget(5.0):
        singletons = make_corpus({f"c{i}": [f"only sentence number {i}"] for i in range(8)})
        assert diversity(singletons, cfg) == 0.0
        crossed = make_corpus(
            {
                "a": ["pay the bill now", "bill is due today", "settle my account"],
                "b": ["weather looks fine", "is it raining", "forecast for tomorrow"],
            }
        )
        assert coverage(crossed, crossed, cfg) == 1.0
        disjoint_pair = make_corpus({"c": ["aa bb cc", "dd ee ff"]})
        assert diversity(disjoint_pair, cfg) == 0.5
        for _ in range(1000):
            a = random_token_list(rng)
            b = random_token_list(rng)
            d = pair_distance(a, b, cfg)
            assert d == pair_distance(b, a, cfg)
            assert 0.0 <= d <= 1.0


def test_detection_geometry_invariances():
    rng = np.random.default_rng(99)
    with Budget(10.0):
        for trial in range(100):
            rows = rng.standard_normal((30, 16))
            ids = [f"u{i:02d}" for i in range(30)]
            base = rank_by_distance(EmbeddingMatrix(ids=ids, rows=rows), "c")
            order = [e.id for e in base.entries]

            shift = rng.standard_normal(16) * 10.0
            translated = rank_by_distance(EmbeddingMatrix(ids=ids, rows=rows + shift), "c")
            assert [e.id for e in translated.entries] == order

            q, _ = np.linalg.qr(rng.standard_normal((16, 16)))
            rotated = rank_by_distance(EmbeddingMatrix(ids=ids, rows=rows @ q), "c")
            assert [e.id for e in rotated.entries] == order

        scores = {f"u{i}": float(rng.random()) for i in range(50)}
        ranked = build_ranked_list("c", scores, "m")
        merged = borda_merge([ranked, ranked])
        assert [e.id for e in merged.entries] == [e.id for e in ranked.entries]

        prefix: list[str] = []
        for k in range(0, 101):
            flagged = flag_top_k(ranked, float(k))
            assert flagged[: len(prefix)] == prefix
            prefix = flagged


def test_synthetic_benchmark_ordering():
    # scaled-down artificial setting: planted errors in clustered classes
    with Budget(60.0):
        corpus, table = make_clustered_dataset(n_classes=10, per_class=100, seed=29)
        result = run_benchmark(
            corpus,
            ["random", "bow", "average"],
            InjectionConfig(p=0.04, seed=17),
            EmbeddingResources(word_vectors=table),
            DetectionConfig(method="average", k_percent=10.0, seed=17),
        )
        by_method = {row.method: row for row in result.rows}
        assert by_method["average"].mean_ap >= 0.85
        assert by_method["average"].recall_at_k >= 0.85
        assert by_method["random"].mean_ap <= 0.15
        assert by_method["random"].mean_ap < by_method["bow"].mean_ap < by_method["average"].mean_ap


def test_sif_correctness():
    rng = np.random.default_rng(7)
    with Budget(5.0):
        for trial in range(50):
            rows = rng.standard_normal((25, 12))
            matrix = EmbeddingMatrix(ids=[f"u{i}" for i in range(25)], rows=rows)
            u = dominant_direction(matrix.rows)
            cleaned = remove_common_component(matrix)
            assert np.max(np.abs(cleaned.rows @ u)) <= 1e-4

        coeffs = rng.standard_normal(25)
        direction = rng.standard_normal(12)
        rank_one = EmbeddingMatrix(
            ids=[f"u{i}" for i in range(25)], rows=np.outer(coeffs, direction)
        )
        collapsed = remove_common_component(rank_one)
        assert np.max(np.linalg.norm(collapsed.rows, axis=1)) <= 1e-8

        total = 1_000_000
        for trial in range(100):
            count = int(rng.integers(1, total))
            freq = FrequencyTable(counts={"w": count}, total=total)
            p = count / total
            assert abs(sif_weight("w", freq, a=1e-3) - 1e-3 / (1e-3 + p)) <= 1e-12


def test_pipeline_simulation_diversity_gap():
    with Budget(60.0):
        gen = default_generator_config()
        cfg = PipelineConfig()
        assert cfg.rounds == 3
        result = run_simulation(cfg, gen)

        first_rounds = {
            s: "\n".join(corpus_to_lines(result.per_strategy[s].states[0].collected))
            for s in result.per_strategy
        }
        assert len(set(first_rounds.values())) == 1

        unique = result.per_strategy["unique"].final_diversity
        same = result.per_strategy["same"].final_diversity
        assert unique > same

        for sr in result.per_strategy.values():
            rejected = {id_ for state in sr.states for id_ in state.error_ids()}
            assert not (rejected & sr.final.ids())


def test_cli_reproducibility(tmp_path):
    from textsieve.cli import main
    from textsieve.synthetic import write_demo

    corpus_path, vectors_path = write_demo(tmp_path / "demo", n_classes=5, per_class=40)

    def tree_bytes(root):
        return {
            p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    for i in (1, 2):
        assert main([
            "bench", str(corpus_path), "--outdir", str(tmp_path / f"bench{i}"),
            "--methods", "random,bow,average", "--inject-p", "0.05",
            "--vectors", str(vectors_path),
        ]) == 0
    assert tree_bytes(tmp_path / "bench1") == tree_bytes(tmp_path / "bench2")

    for i in (1, 2):
        assert main([
            "simulate", "--outdir", str(tmp_path / f"sim{i}"),
            "--rounds", "2", "--classes", "3",
        ]) == 0
    assert tree_bytes(tmp_path / "sim1") == tree_bytes(tmp_path / "sim2")


def test_service_recovery_after_random_mutations(tmp_path):
    gen = default_generator_config(n_classes=3, seed=13)
    cfg = PipelineConfig(
        rounds=3,
        detection=DetectionConfig(method="borda:average+sif", k_percent=10.0),
        seed=0,
    )
    state = start_round(initial_seeds(gen, cfg.seeds_per_class), cfg)
    collect_paraphrases(state, gen, cfg)
    store = ProjectStore.create(tmp_path / "proj", state.collected, cfg, generator=gen)
    client = TestClient(create_app(store))
    rng = random.Random(424242)

    def flagged_entries():
        out = []
        for row in client.get("/classes").json()["classes"]:
            page = client.get(
                f"/classes/{row['class_key']}/outliers", params={"page_size": 200}
            ).json()
            out.extend(page["entries"])
        return out

    mutations = 0
    while mutations < 50:
        roll = rng.random()
        entries = flagged_entries()
        if roll < 0.55:
            entry = rng.choice(entries)
            label = rng.choice(["error", "unique"])
            client.post("/verdicts", json={"id": entry["id"], "label": label})
        elif roll < 0.75:
            entry = rng.choice(entries)
            client.post("/disambiguation", json={"id": entry["id"], "keep": rng.random() < 0.5})
        elif roll < 0.9:
            client.post("/round/close")  # often a 409; those must not mutate
        else:
            client.post("/verdicts", json={"id": "no-such-id", "label": "error"})
        mutations += 1

    probes = ["/", "/round", "/classes", "/reports/diversity", "/reports/coverage"]
    for row in client.get("/classes").json()["classes"]:
        probes.append(f"/classes/{row['class_key']}/outliers?page_size=200")
    for entry in flagged_entries()[:10]:
        probes.append(f"/disambiguation/{entry['id']}")
    golden = {p: (client.get(p).status_code, client.get(p).content) for p in probes}

    reopened = TestClient(create_app(ProjectStore(store.root)))
    for p, (status, content) in golden.items():
        response = reopened.get(p)
        assert (response.status_code, response.content) == (status, content), p
