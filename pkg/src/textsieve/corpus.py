"""Corpus data model: utterances, class grouping, tokenization, and file I/O.

A corpus file holds UTF-8 JSON records, one per line:

    {"id": "u1", "text": "what's my balance?", "label": "balance"}
    {"id": "u7", "text": "ten usd to cad", "slots": [{"name": "amount", "start": 0, "end": 1}]}

``id`` and ``text`` are required. A record's class key is its ``label`` when
present, otherwise the combination of its slot names, otherwise ``"none"``.
Slot offsets are token indices into the tokenized text, end-exclusive.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import CorpusError

_TOKEN_RE = re.compile(r"[^\W_]+")  # alphanumerics only; underscore splits too


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into alphanumeric runs.

    Every non-alphanumeric character separates tokens and is dropped, so
    ``"What's my balance?"`` becomes ``["what", "s", "my", "balance"]``.
    Empty tokens never appear in the result.
    """
    return _TOKEN_RE.findall(text.lower())


def class_key_from_slots(slot_names: Iterable[str]) -> str:
    """Canonical class key for a slot combination.

    Names are deduplicated and sorted, then joined with ``"+"``; an empty
    combination maps to ``"none"``.
    """
    names = sorted(set(slot_names))
    return "+".join(names) if names else "none"


@dataclass(frozen=True)
class SlotSpan:
    """A named span over token indices, end-exclusive."""

    name: str
    start: int
    end: int


@dataclass(frozen=True)
class Utterance:
    """One text sample with its derived tokens and class assignment."""

    id: str
    text: str
    class_key: str
    tokens: tuple[str, ...]
    slots: tuple[SlotSpan, ...] = ()

    @property
    def normalized(self) -> str:
        return " ".join(self.tokens)


def make_utterance(
    id: str,
    text: str,
    label: str | None = None,
    slots: Sequence[SlotSpan] | None = None,
) -> Utterance:
    """Build a validated :class:`Utterance`.

    The class key is ``label`` when given, otherwise derived from the slot
    names. Raises :class:`CorpusError` on empty text or bad slot spans.
    """
    if not isinstance(id, str) or not id:
        raise CorpusError("utterance id must be a non-empty string")
    if not isinstance(text, str) or not text.strip():
        raise CorpusError(f"utterance {id!r} has empty text")
    tokens = tuple(tokenize(text))
    spans = tuple(slots or ())
    _check_slots(id, spans, len(tokens))
    if label is not None:
        if not isinstance(label, str) or not label:
            raise CorpusError(f"utterance {id!r} has a non-string or empty label")
        class_key = label
    else:
        class_key = class_key_from_slots(s.name for s in spans)
    return Utterance(id=id, text=text, class_key=class_key, tokens=tokens, slots=spans)


def _check_slots(utt_id: str, spans: Sequence[SlotSpan], n_tokens: int) -> None:
    for s in spans:
        if not s.name:
            raise CorpusError(f"utterance {utt_id!r}: slot with empty name")
        if not (0 <= s.start < s.end <= n_tokens):
            raise CorpusError(
                f"utterance {utt_id!r}: slot {s.name!r} span [{s.start}, {s.end}) "
                f"out of range for {n_tokens} tokens"
            )
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            raise CorpusError(
                f"utterance {utt_id!r}: slots {prev.name!r} and {cur.name!r} overlap"
            )


@dataclass
class LabeledCorpus:
    """Utterances grouped by class key, in insertion order."""

    classes: dict[str, list[Utterance]]

    def class_keys(self) -> list[str]:
        return list(self.classes)

    def utterances(self) -> list[Utterance]:
        return [u for utts in self.classes.values() for u in utts]

    def ids(self) -> set[str]:
        return {u.id for u in self.utterances()}

    def by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances()}

    def __len__(self) -> int:
        return sum(len(utts) for utts in self.classes.values())


def corpus_from_utterances(utterances: Iterable[Utterance]) -> LabeledCorpus:
    """Group utterances by class key, rejecting duplicate ids."""
    classes: dict[str, list[Utterance]] = {}
    seen: set[str] = set()
    for u in utterances:
        if u.id in seen:
            raise CorpusError(f"duplicate utterance id {u.id!r}")
        seen.add(u.id)
        classes.setdefault(u.class_key, []).append(u)
    return LabeledCorpus(classes=classes)


def _utterance_from_record(rec: object, where: str) -> Utterance:
    if not isinstance(rec, dict):
        raise CorpusError(f"{where}: record is not an object")
    unknown = set(rec) - {"id", "text", "label", "slots"}
    if unknown:
        raise CorpusError(f"{where}: unknown keys {sorted(unknown)}")
    if "id" not in rec or "text" not in rec:
        raise CorpusError(f"{where}: record needs 'id' and 'text'")
    slots = None
    if rec.get("slots") is not None:
        raw = rec["slots"]
        if not isinstance(raw, list):
            raise CorpusError(f"{where}: 'slots' must be a list")
        try:
            slots = [SlotSpan(name=s["name"], start=int(s["start"]), end=int(s["end"])) for s in raw]
        except (TypeError, KeyError) as exc:
            raise CorpusError(f"{where}: malformed slot entry: {exc}") from exc
    try:
        return make_utterance(rec["id"], rec["text"], rec.get("label"), slots)
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from exc


def load_corpus(path: str) -> LabeledCorpus:
    """Read a JSON-lines corpus file.

    Raises :class:`CorpusError` with the 1-based line number for malformed
    records, bad slot spans, or duplicate ids. Blank lines are skipped.
    """
    utterances: list[Utterance] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: invalid record: {exc}") from exc
            utterances.append(_utterance_from_record(rec, where))
    try:
        return corpus_from_utterances(utterances)
    except CorpusError as exc:
        raise CorpusError(f"{path}: {exc}") from exc


def utterance_to_record(u: Utterance) -> dict:
    rec: dict = {"id": u.id, "text": u.text, "label": u.class_key}
    if u.slots:
        rec["slots"] = [{"name": s.name, "start": s.start, "end": s.end} for s in u.slots]
    return rec


def corpus_to_lines(corpus: LabeledCorpus) -> list[str]:
    return [json.dumps(utterance_to_record(u), sort_keys=True) for u in corpus.utterances()]


def save_corpus(corpus: LabeledCorpus, path: str) -> None:
    """Write a corpus in the same line format :func:`load_corpus` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in corpus_to_lines(corpus):
            fh.write(line + "\n")


def dedupe(corpus: LabeledCorpus) -> tuple[LabeledCorpus, int]:
    """Drop repeated normalized texts within each class, keeping first seen.

    Returns the reduced corpus and the number of removed utterances. Two
    texts are duplicates when their token sequences match, so punctuation
    and case differences do not keep copies apart.
    """
    classes: dict[str, list[Utterance]] = {}
    removed = 0
    for class_key, utts in corpus.classes.items():
        seen: set[str] = set()
        kept: list[Utterance] = []
        for u in utts:
            key = u.normalized
            if key in seen:
                removed += 1
                continue
            seen.add(key)
            kept.append(u)
        classes[class_key] = kept
    return LabeledCorpus(classes=classes), removed


def concat_corpora(parts: Sequence[LabeledCorpus]) -> LabeledCorpus:
    """Union of several corpora; ids must not collide across parts."""
    return corpus_from_utterances(u for part in parts for u in part.utterances())


def drop_ids(corpus: LabeledCorpus, ids: set[str]) -> LabeledCorpus:
    """Corpus without the given utterance ids (classes keep their order)."""
    classes = {
        class_key: [u for u in utts if u.id not in ids]
        for class_key, utts in corpus.classes.items()
    }
    return LabeledCorpus(classes={k: v for k, v in classes.items() if v})
