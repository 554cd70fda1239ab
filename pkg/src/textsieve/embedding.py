"""Sentence vectors from word-vector tables.

Four ways to turn utterances into rows of a matrix: plain averaging of word
vectors, frequency-weighted averaging with removal of the dominant shared
direction, raw bag-of-words counts, and externally computed vectors loaded
from disk. Out-of-vocabulary tokens are skipped and counted; an utterance
with no known token embeds to the zero vector, which naturally surfaces as
far from any populated class mean.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import LabeledCorpus, Utterance
from .errors import EmbedError

logger = logging.getLogger(__name__)


@dataclass
class WordVectorTable:
    """Token to vector lookup with a fixed dimension."""

    dim: int
    vectors: dict[str, np.ndarray]
    source: str = ""
    duplicates_skipped: int = 0

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_word_vectors(path: str, expected_dim: int | None = None) -> WordVectorTable:
    """Read a text vector file with ``word v1 v2 ... vd`` lines.

    The dimension comes from the first line unless ``expected_dim`` pins it.
    Repeated words keep their first vector and are counted in
    ``duplicates_skipped``. Raises :class:`EmbedError` with the line number
    for dimension mismatches or unparseable numbers.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = expected_dim
    duplicates = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EmbedError(f"cannot read vector file: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise EmbedError(f"{path}:{lineno}: no vector components")
                dim = len(values)
            if len(values) != dim:
                raise EmbedError(
                    f"{path}:{lineno}: expected {dim} components, found {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values])
            except ValueError as exc:
                raise EmbedError(f"{path}:{lineno}: bad number: {exc}") from exc
            if word in vectors:
                duplicates += 1
                continue
            vectors[word] = vec
    if dim is None:
        raise EmbedError(f"{path}: empty vector file")
    if duplicates:
        logger.warning("%s: skipped %d duplicate words (first kept)", path, duplicates)
    return WordVectorTable(dim=dim, vectors=vectors, source=str(path), duplicates_skipped=duplicates)


@dataclass(frozen=True)
class FrequencyTable:
    """Relative token frequencies over a corpus."""

    counts: Mapping[str, int]
    total: int

    def probability(self, token: str) -> float:
        return self.counts.get(token, 0) / self.total


def count_frequencies(corpus: LabeledCorpus) -> FrequencyTable:
    """Token counts over every utterance of ``corpus``."""
    counts: dict[str, int] = {}
    total = 0
    for u in corpus.utterances():
        for tok in u.tokens:
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    if total == 0:
        raise EmbedError("cannot count frequencies of an empty corpus")
    return FrequencyTable(counts=counts, total=total)


@dataclass
class EmbeddingMatrix:
    """Utterance ids aligned with the rows of a 2-d float array."""

    ids: list[str]
    rows: np.ndarray

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise EmbedError("embedding rows must form a 2-d array")
        if len(self.ids) != self.rows.shape[0]:
            raise EmbedError(
                f"{len(self.ids)} ids for {self.rows.shape[0]} rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise EmbedError("duplicate ids in embedding matrix")
        self._index = {id_: i for i, id_ in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def row(self, id_: str) -> np.ndarray:
        try:
            return self.rows[self._index[id_]]
        except KeyError:
            raise EmbedError(f"no embedding for id {id_!r}") from None

    def submatrix(self, ids: Sequence[str]) -> "EmbeddingMatrix":
        missing = [i for i in ids if i not in self._index]
        if missing:
            raise EmbedError(f"no embedding for ids {missing[:5]!r}")
        sel = [self._index[i] for i in ids]
        return EmbeddingMatrix(ids=list(ids), rows=self.rows[sel])


def embed_average(tokens: Sequence[str], table: WordVectorTable) -> tuple[np.ndarray, int]:
    """Unweighted mean of the in-vocabulary token vectors.

    Returns the vector and the out-of-vocabulary token count. When every
    token is unknown the result is the zero vector.
    """
    vecs = [table.vectors[t] for t in tokens if t in table.vectors]
    oov = len(tokens) - len(vecs)
    if not vecs:
        return np.zeros(table.dim), oov
    return np.asarray(vecs).mean(axis=0), oov


def embed_average_matrix(utterances: Sequence[Utterance], table: WordVectorTable) -> EmbeddingMatrix:
    rows = np.zeros((len(utterances), table.dim))
    for i, u in enumerate(utterances):
        rows[i], _ = embed_average(u.tokens, table)
    return EmbeddingMatrix(ids=[u.id for u in utterances], rows=rows)


@dataclass(frozen=True)
class SifConfig:
    """Settings for frequency-weighted sentence averaging.

    ``a`` shapes the weight ``a / (a + p(token))``; rarer tokens weigh more.
    When ``remove_common_component`` is set, the dominant shared direction of
    the finished matrix is projected out.
    """

    a: float = 1e-3
    remove_common_component: bool = True
    power_iterations: int = 100
    power_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise EmbedError("weight parameter a must be positive")
        if self.power_iterations < 1:
            raise EmbedError("power_iterations must be at least 1")


def sif_weight(token: str, freq: FrequencyTable, a: float = 1e-3) -> float:
    """Frequency-derived token weight ``a / (a + p(token))``.

    A token the table never saw has probability zero and weight exactly 1.
    """
    if a <= 0:
        raise EmbedError("weight parameter a must be positive")
    return a / (a + freq.probability(token))


def embed_sif(
    utterances: Sequence[Utterance],
    table: WordVectorTable,
    freq: FrequencyTable,
    cfg: SifConfig = SifConfig(),
) -> EmbeddingMatrix:
    """Weighted-average sentence matrix.

    Each row sums ``sif_weight(token) * vector(token)`` over in-vocabulary
    tokens and divides by the in-vocabulary token count. Rows for fully
    out-of-vocabulary utterances are zero; if *every* utterance is fully out
    of vocabulary that is an error. With ``cfg.remove_common_component`` the
    dominant direction is removed afterwards.
    """
    if not utterances:
        raise EmbedError("no utterances to embed")
    rows = np.zeros((len(utterances), table.dim))
    any_known = False
    for i, u in enumerate(utterances):
        acc = np.zeros(table.dim)
        known = 0
        for tok in u.tokens:
            vec = table.vectors.get(tok)
            if vec is None:
                continue
            acc += sif_weight(tok, freq, cfg.a) * vec
            known += 1
        if known:
            rows[i] = acc / known
            any_known = True
    if not any_known:
        raise EmbedError("every utterance is fully out of vocabulary")
    matrix = EmbeddingMatrix(ids=[u.id for u in utterances], rows=rows)
    if cfg.remove_common_component:
        matrix = remove_common_component(matrix, cfg.power_iterations, cfg.power_tolerance)
    return matrix


def dominant_direction(
    rows: np.ndarray, iterations: int = 100, tolerance: float = 1e-6
) -> np.ndarray | None:
    """Unit vector along the largest right-singular direction of ``rows``.

    Power iteration on the Gram operator, started from the normalized
    all-ones vector (first basis vector when that start is degenerate) so
    repeated calls agree bit for bit. Returns ``None`` for an all-zero input.
    """
    a = np.asarray(rows, dtype=float)
    if a.ndim != 2:
        raise EmbedError("expected a 2-d array")
    if not np.any(a):
        return None
    d = a.shape[1]
    u = np.ones(d) / math.sqrt(d)
    if not np.any(a @ u):
        u = np.zeros(d)
        u[0] = 1.0
    for _ in range(iterations):
        v = a.T @ (a @ u)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            break  # u is orthogonal to the row space; projecting it out is a no-op
        v /= norm
        if np.linalg.norm(v - u) < tolerance:
            u = v
            break
        u = v
    return u


def remove_common_component(
    matrix: EmbeddingMatrix, iterations: int = 100, tolerance: float = 1e-6
) -> EmbeddingMatrix:
    """Project every row onto the complement of the dominant direction.

    A zero matrix is returned unchanged.
    """
    u = dominant_direction(matrix.rows, iterations, tolerance)
    if u is None:
        return EmbeddingMatrix(ids=list(matrix.ids), rows=matrix.rows.copy())
    rows = matrix.rows - np.outer(matrix.rows @ u, u)
    return EmbeddingMatrix(ids=list(matrix.ids), rows=rows)


def load_precomputed(path: str) -> EmbeddingMatrix:
    """Read externally computed sentence vectors.

    Line format: ``{"id": "u1", "vector": [..]}``. Ids absent from any later
    corpus are retained here; alignment happens when a class submatrix is
    taken. Raises :class:`EmbedError` for duplicate ids or ragged dimensions.
    """
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim: int | None = None
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EmbedError(f"cannot read precomputed vectors: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbedError(f"{where}: invalid record: {exc}") from exc
            if not isinstance(rec, dict) or "id" not in rec or "vector" not in rec:
                raise EmbedError(f"{where}: record needs 'id' and 'vector'")
            if rec["id"] in seen:
                raise EmbedError(f"{where}: duplicate id {rec['id']!r}")
            vec = rec["vector"]
            if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
                raise EmbedError(f"{where}: vector must be a list of numbers")
            if dim is None:
                dim = len(vec)
            if len(vec) != dim:
                raise EmbedError(f"{where}: expected {dim} components, found {len(vec)}")
            seen.add(rec["id"])
            ids.append(rec["id"])
            rows.append([float(x) for x in vec])
    if dim is None:
        raise EmbedError(f"{path}: empty vector file")
    return EmbeddingMatrix(ids=ids, rows=np.array(rows))


def save_precomputed(matrix: EmbeddingMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for id_, row in zip(matrix.ids, matrix.rows):
            fh.write(json.dumps({"id": id_, "vector": [float(x) for x in row]}) + "\n")


def embed_bow(utterances: Sequence[Utterance]) -> EmbeddingMatrix:
    """Raw token-count rows over the sorted vocabulary of ``utterances``."""
    if not utterances:
        raise EmbedError("no utterances to embed")
    vocab = sorted({tok for u in utterances for tok in u.tokens})
    index = {tok: i for i, tok in enumerate(vocab)}
    rows = np.zeros((len(utterances), max(len(vocab), 1)))
    for i, u in enumerate(utterances):
        for tok in u.tokens:
            rows[i, index[tok]] += 1.0
    return EmbeddingMatrix(ids=[u.id for u in utterances], rows=rows)
