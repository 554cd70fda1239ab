"""File-backed review project: configuration plus an append-only event log.

A project directory holds three files. ``project.json`` freezes the
detection and pipeline settings, ``corpus.jsonl`` is the first round's
collected data in the usual corpus line format, and ``events.jsonl`` records
every state change (flagging, verdicts, judgments, round transitions) as one
JSON object per line. State is never edited in place: rebuilding a session
means re-reading the corpus and replaying the events, so a killed process
resumes exactly where it stopped.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .corpus import LabeledCorpus, load_corpus, save_corpus
from .detection import DetectionConfig
from .errors import StoreError
from .evaluation import MetricConfig
from .generator import GeneratorConfig, generator_config_from_dict, generator_config_to_dict
from .pipeline import PipelineConfig

PROJECT_FILE = "project.json"
CORPUS_FILE = "corpus.jsonl"
EVENTS_FILE = "events.jsonl"


class ProjectStore:
    """Handle on one project directory. Mutations only ever append."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- creation / loading -------------------------------------------------

    @classmethod
    def create(
        cls,
        root: str | Path,
        corpus: LabeledCorpus,
        pipeline: PipelineConfig,
        generator: GeneratorConfig | None = None,
        vectors_path: str | None = None,
        metric: MetricConfig = MetricConfig(),
    ) -> "ProjectStore":
        store = cls(root)
        store.root.mkdir(parents=True, exist_ok=True)
        if (store.root / PROJECT_FILE).exists():
            raise StoreError(f"{store.root} already holds a project")
        project = {
            "pipeline": _pipeline_to_dict(pipeline),
            "generator": generator_config_to_dict(generator) if generator else None,
            "vectors": vectors_path,
            "metric": {"max_ngram": metric.max_ngram},
        }
        (store.root / PROJECT_FILE).write_text(
            json.dumps(project, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        save_corpus(corpus, str(store.root / CORPUS_FILE))
        (store.root / EVENTS_FILE).touch()
        return store

    def exists(self) -> bool:
        return (self.root / PROJECT_FILE).exists()

    def _project(self) -> dict:
        path = self.root / PROJECT_FILE
        if not path.exists():
            raise StoreError(f"no project at {self.root}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreError(f"{path}: corrupt project file: {exc}") from exc

    # -- configuration ------------------------------------------------------

    def pipeline_config(self) -> PipelineConfig:
        return _pipeline_from_dict(self._project()["pipeline"])

    def generator_config(self) -> GeneratorConfig | None:
        raw = self._project().get("generator")
        return generator_config_from_dict(raw) if raw else None

    def vectors_path(self) -> str | None:
        return self._project().get("vectors")

    def metric_config(self) -> MetricConfig:
        raw = self._project().get("metric") or {}
        return MetricConfig(max_ngram=int(raw.get("max_ngram", 3)))

    def corpus(self) -> LabeledCorpus:
        path = self.root / CORPUS_FILE
        if not path.exists():
            raise StoreError(f"no corpus at {path}")
        return load_corpus(str(path))

    # -- event log ----------------------------------------------------------

    def append_event(self, event: dict) -> None:
        with open(self.root / EVENTS_FILE, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def events(self) -> list[dict]:
        path = self.root / EVENTS_FILE
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise StoreError(f"{path}:{lineno}: corrupt event: {exc}") from exc
        return out


def _pipeline_to_dict(cfg: PipelineConfig) -> dict:
    data = asdict(cfg)
    data["detection"] = asdict(cfg.detection)
    return data


def _pipeline_from_dict(data: dict) -> PipelineConfig:
    try:
        det = data.get("detection") or {}
        return PipelineConfig(
            strategy=data.get("strategy", "unique"),
            rounds=int(data.get("rounds", 3)),
            paraphrases_per_seed=int(data.get("paraphrases_per_seed", 5)),
            workers_per_seed=int(data.get("workers_per_seed", 15)),
            seeds_per_class=int(data.get("seeds_per_class", 3)),
            detection=DetectionConfig(
                method=det.get("method", "borda:average+sif"),
                k_percent=float(det.get("k_percent", 10.0)),
                seed=int(det.get("seed", 0)),
            ),
            seed=int(data.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise StoreError(f"bad pipeline configuration: {exc}") from exc
