"""Deterministic stand-in for a crowd of paraphrase writers.

Every class owns a handful of sentence templates over a core vocabulary,
plus a smaller fringe vocabulary of unusual phrasings. A simulated worker
shown a seed mostly rewrites it or a template with synonym churn, sometimes
reaches for fringe wording on their own, and adopts the seed's own tokens at
a configurable rate, so seeds that carry fringe phrasing measurably pull the
next round toward it. A noise rate mixes in cross-class and garbled
submissions so review queues contain genuine errors; which outputs were
noise is tracked for scripted (oracle) review.

All draws derive from string-keyed streams, so a given configuration yields
byte-identical output on every run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .embedding import WordVectorTable
from .errors import PipelineError
from .rng import stable_rng, stable_seed

_SYLLABLES = (
    "ba", "de", "fi", "go", "hu", "ka", "lo", "mi", "ne", "pa",
    "re", "su", "ta", "vo", "wi", "zu", "or", "an", "el", "ys",
)

_CONNECTIVES = (
    "the", "a", "my", "to", "do", "i", "can", "you",
    "how", "what", "is", "me", "for", "it", "please", "about",
)


@dataclass(frozen=True)
class ClassSpec:
    """Templates plus vocabulary pools for one class."""

    templates: tuple[tuple[str, ...], ...]
    core: tuple[str, ...]
    fringe: tuple[str, ...]


@dataclass(frozen=True)
class Paraphrase:
    tokens: tuple[str, ...]
    noise: bool


@dataclass(frozen=True)
class GeneratorConfig:
    """Worker-behaviour knobs for the synthetic paraphrase source.

    ``adoption_rate`` is the chance a paraphrase starts from the seed's own
    tokens instead of a fresh template; ``spontaneous_fringe_rate`` the
    chance a worker swaps in fringe wording unprompted; ``noise_rate`` the
    chance of an off-class or garbled submission; ``mutation_rate`` the
    per-token chance of a synonym swap.
    """

    classes: Mapping[str, ClassSpec]
    adoption_rate: float = 0.6
    noise_rate: float = 0.05
    spontaneous_fringe_rate: float = 0.05
    mutation_rate: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.classes:
            raise PipelineError("generator needs at least one class")
        for rate_name in ("adoption_rate", "noise_rate", "spontaneous_fringe_rate", "mutation_rate"):
            rate = getattr(self, rate_name)
            if not 0 <= rate <= 1:
                raise PipelineError(f"{rate_name} must be within [0, 1], got {rate}")
        for class_key, spec in self.classes.items():
            if not spec.templates or any(not t for t in spec.templates):
                raise PipelineError(f"class {class_key!r} needs non-empty templates")
            if not spec.core:
                raise PipelineError(f"class {class_key!r} needs a core vocabulary")


def _global_vocab(cfg: GeneratorConfig) -> list[str]:
    tokens = set()
    for spec in cfg.classes.values():
        tokens.update(spec.core)
        tokens.update(spec.fringe)
        for t in spec.templates:
            tokens.update(t)
    return sorted(tokens)


def _clean_tokens(cfg: GeneratorConfig, spec: ClassSpec, seed_tokens: Sequence[str], rng: random.Random) -> tuple[str, ...]:
    if rng.random() < cfg.adoption_rate:
        base = list(seed_tokens)
    else:
        base = list(rng.choice(spec.templates))
    toks = [rng.choice(spec.core) if rng.random() < cfg.mutation_rate else t for t in base]
    if len(toks) > 3 and rng.random() < 0.1:
        del toks[rng.randrange(len(toks))]
    if rng.random() < 0.1:
        toks.insert(rng.randrange(len(toks) + 1), rng.choice(spec.core))
    if spec.fringe and rng.random() < cfg.spontaneous_fringe_rate:
        toks[rng.randrange(len(toks))] = rng.choice(spec.fringe)
    return tuple(toks)


def _noise_tokens(cfg: GeneratorConfig, class_key: str, rng: random.Random) -> tuple[str, ...]:
    others = sorted(k for k in cfg.classes if k != class_key)
    if others and rng.random() < 0.5:
        other = rng.choice(others)
        ospec = cfg.classes[other]
        return _clean_tokens(cfg, ospec, rng.choice(ospec.templates), rng)
    vocab = _global_vocab(cfg)
    return tuple(rng.choice(vocab) for _ in range(rng.randint(3, 8)))


def generate_for_seed(
    cfg: GeneratorConfig,
    round_no: int,
    class_key: str,
    seed_tokens: Sequence[str],
    worker: int,
    count: int,
) -> list[Paraphrase]:
    """``count`` paraphrases one worker writes for one seed."""
    if class_key not in cfg.classes:
        raise PipelineError(f"generator knows no class {class_key!r}")
    spec = cfg.classes[class_key]
    rng = stable_rng("para", cfg.seed, round_no, class_key, " ".join(seed_tokens), worker)
    out: list[Paraphrase] = []
    for _ in range(count):
        if rng.random() < cfg.noise_rate:
            out.append(Paraphrase(tokens=_noise_tokens(cfg, class_key, rng), noise=True))
        else:
            out.append(Paraphrase(tokens=_clean_tokens(cfg, spec, seed_tokens, rng), noise=False))
    return out


def synthetic_word_table(cfg: GeneratorConfig, dim: int = 16) -> WordVectorTable:
    """A word-vector table covering the generator's whole vocabulary.

    Core words cluster tightly around a per-class centre; fringe words
    anchor to the same centre but sit several jitter lengths out, so a
    fringe-bearing sentence reads as an outlier of its own class rather
    than as a member of another one. Connectives and anything else sit
    near the origin.
    """
    core_home: dict[str, str] = {}
    fringe_home: dict[str, str] = {}
    for class_key, spec in cfg.classes.items():
        for token in spec.core:
            core_home.setdefault(token, class_key)
        for token in spec.fringe:
            fringe_home.setdefault(token, class_key)
    centers = {
        class_key: 4.0
        * np.random.default_rng(stable_seed("wvcenter", cfg.seed, class_key)).standard_normal(dim)
        / np.sqrt(dim)
        for class_key in cfg.classes
    }
    vectors: dict[str, np.ndarray] = {}
    for token in _global_vocab(cfg):
        token_rng = np.random.default_rng(stable_seed("wv", cfg.seed, token))
        jitter = token_rng.standard_normal(dim) / np.sqrt(dim)
        if token in core_home:
            vectors[token] = centers[core_home[token]] + jitter
        elif token in fringe_home:
            vectors[token] = centers[fringe_home[token]] + 6.0 * jitter
        else:
            vectors[token] = jitter
    return WordVectorTable(dim=dim, vectors=vectors, source="synthetic")


def _pseudo_word(rng: random.Random, used: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in used and word not in _CONNECTIVES:
            used.add(word)
            return word


def default_generator_config(
    n_classes: int = 6,
    seed: int = 13,
    core_size: int = 18,
    fringe_size: int = 8,
    templates_per_class: int = 5,
    **overrides,
) -> GeneratorConfig:
    """A ready-to-run configuration with invented vocabulary.

    Class vocabularies are disjoint pseudo-words; templates mix them with a
    shared pool of connectives. Extra keyword arguments override the rate
    fields of :class:`GeneratorConfig`.
    """
    if n_classes < 1:
        raise PipelineError("need at least one class")
    rng = stable_rng("gencfg", seed)
    used: set[str] = set()
    classes: dict[str, ClassSpec] = {}
    for c in range(n_classes):
        core = tuple(_pseudo_word(rng, used) for _ in range(core_size))
        fringe = tuple(_pseudo_word(rng, used) for _ in range(fringe_size))
        templates = []
        for _ in range(templates_per_class):
            length = rng.randint(5, 8)
            toks = [
                rng.choice(_CONNECTIVES) if rng.random() < 0.4 else rng.choice(core)
                for _ in range(length)
            ]
            templates.append(tuple(toks))
        classes[f"topic{c:02d}"] = ClassSpec(
            templates=tuple(templates), core=core, fringe=fringe
        )
    return GeneratorConfig(classes=classes, seed=seed, **overrides)


def generator_config_to_dict(cfg: GeneratorConfig) -> dict:
    return {
        "classes": {
            key: {
                "templates": [list(t) for t in spec.templates],
                "core": list(spec.core),
                "fringe": list(spec.fringe),
            }
            for key, spec in cfg.classes.items()
        },
        "adoption_rate": cfg.adoption_rate,
        "noise_rate": cfg.noise_rate,
        "spontaneous_fringe_rate": cfg.spontaneous_fringe_rate,
        "mutation_rate": cfg.mutation_rate,
        "seed": cfg.seed,
    }


def generator_config_from_dict(data: Mapping) -> GeneratorConfig:
    try:
        classes = {
            key: ClassSpec(
                templates=tuple(tuple(t) for t in spec["templates"]),
                core=tuple(spec["core"]),
                fringe=tuple(spec.get("fringe", ())),
            )
            for key, spec in data["classes"].items()
        }
        return GeneratorConfig(
            classes=classes,
            adoption_rate=float(data.get("adoption_rate", 0.6)),
            noise_rate=float(data.get("noise_rate", 0.05)),
            spontaneous_fringe_rate=float(data.get("spontaneous_fringe_rate", 0.05)),
            mutation_rate=float(data.get("mutation_rate", 0.3)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PipelineError(f"bad generator configuration: {exc}") from exc
