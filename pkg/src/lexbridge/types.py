"""Shared domain types.

All types validate their invariants at construction time and are immutable
afterwards, so they can be shared read-only across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .numerics import check_finite

POP_SPAN_LENGTHS = (16, 32, 64, 128, 256)
TASKS = ("semantic", "keyword", "pop")


def _float_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{name} must have {ndim} dimension(s), got {arr.ndim}")
    return arr


@dataclass(frozen=True)
class Vocabulary:
    """Token id space of size ``size``; ``terms`` is diagnostic only."""

    size: int
    terms: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 2:
            raise ValidationError(f"vocabulary size must be >= 2, got {self.size}")
        if self.terms is not None:
            object.__setattr__(self, "terms", tuple(self.terms))
            if len(self.terms) != self.size:
                raise ValidationError(
                    f"terms length {len(self.terms)} != vocabulary size {self.size}")
            if len(set(self.terms)) != self.size:
                raise ValidationError("vocabulary terms must be unique")

    def index(self) -> dict[str, int]:
        if self.terms is None:
            raise ValidationError("vocabulary has no terms to index")
        return {t: i for i, t in enumerate(self.terms)}


@dataclass(frozen=True)
class TokenSequence:
    """A sequence of token ids; may be empty."""

    ids: tuple[int, ...]

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if any(i < 0 for i in ids):
            raise ValidationError("token ids must be non-negative")

    def __len__(self) -> int:
        return len(self.ids)

    def check_vocab(self, vocab_size: int) -> "TokenSequence":
        for i in self.ids:
            if i >= vocab_size:
                raise ValidationError(
                    f"token id {i} out of range for vocabulary of size {vocab_size}")
        return self


@dataclass(frozen=True)
class HiddenStateMatrix:
    """Per-position hidden states (L x d) plus the classifier state (d)."""

    rows: np.ndarray
    cls_state: np.ndarray

    def __post_init__(self):
        rows = _float_array(self.rows, "hidden rows", 2)
        cls_state = _float_array(self.cls_state, "cls state", 1)
        if rows.shape[0] > 0 and rows.shape[1] != cls_state.shape[0]:
            raise DimensionMismatchError(
                f"hidden rows dim {rows.shape[1]} != cls dim {cls_state.shape[0]}")
        if cls_state.shape[0] < 1:
            raise ValidationError("hidden dimension must be >= 1")
        check_finite(rows, "hidden rows")
        check_finite(cls_state, "cls state")
        rows.setflags(write=False)
        cls_state.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cls_state", cls_state)

    @property
    def length(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.cls_state.shape[0]


@dataclass(frozen=True)
class PooledEmbedding:
    """A dense d-dimensional query or passage vector."""

    values: np.ndarray

    def __post_init__(self):
        values = _float_array(self.values, "embedding", 1)
        check_finite(values, "embedding")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class ImportanceVector:
    """Non-negative per-vocabulary-entry (or per-patch) weights."""

    weights: np.ndarray

    def __post_init__(self):
        weights = _float_array(self.weights, "importance weights", 1)
        check_finite(weights, "importance weights")
        if np.any(weights < 0):
            raise ValidationError("importance weights must be non-negative")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class BridgeParameters:
    """Trainable state: projection W (d x m), optional U (d x |V|) and b (|V|)."""

    projection: np.ndarray
    llr_projection: Optional[np.ndarray] = None
    llr_bias: Optional[np.ndarray] = None

    def __post_init__(self):
        w = _float_array(self.projection, "projection", 2)
        check_finite(w, "projection")
        w.setflags(write=False)
        object.__setattr__(self, "projection", w)
        if (self.llr_projection is None) != (self.llr_bias is None):
            raise ValidationError("llr_projection and llr_bias must be given together")
        if self.llr_projection is not None:
            u = _float_array(self.llr_projection, "llr_projection", 2)
            b = _float_array(self.llr_bias, "llr_bias", 1)
            check_finite(u, "llr_projection")
            check_finite(b, "llr_bias")
            if u.shape[0] != w.shape[0]:
                raise DimensionMismatchError(
                    f"llr_projection rows {u.shape[0]} != embedding dim {w.shape[0]}")
            if u.shape[1] != b.shape[0]:
                raise DimensionMismatchError(
                    f"llr_projection cols {u.shape[1]} != llr_bias length {b.shape[0]}")
            u.setflags(write=False)
            b.setflags(write=False)
            object.__setattr__(self, "llr_projection", u)
            object.__setattr__(self, "llr_bias", b)

    @property
    def dim(self) -> int:
        return self.projection.shape[0]

    @property
    def importance_len(self) -> int:
        return self.projection.shape[1]

    @property
    def has_llr(self) -> bool:
        return self.llr_projection is not None


@dataclass(frozen=True)
class Passage:
    """One corpus entry; ``word_count`` counts whitespace tokens."""

    id: str
    text: str
    word_count: int = field(default=-1)

    def __post_init__(self):
        if not self.id:
            raise ValidationError("passage id must be non-empty")
        if self.word_count < 0:
            object.__setattr__(self, "word_count", len(self.text.split()))
        elif self.word_count != len(self.text.split()):
            raise ValidationError(
                f"passage {self.id}: word_count {self.word_count} != "
                f"{len(self.text.split())} whitespace tokens")


@dataclass(frozen=True)
class QueryRecord:
    """A task query with its ground-truth relevant passage ids."""

    id: str
    text: str
    task: str
    relevant_ids: tuple[str, ...]
    span_length: Optional[int] = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.task == "pop" and self.span_length not in POP_SPAN_LENGTHS:
            raise ValidationError(
                f"pop query {self.id}: span_length must be one of {POP_SPAN_LENGTHS}, "
                f"got {self.span_length}")
        object.__setattr__(self, "relevant_ids", tuple(self.relevant_ids))
        if not self.relevant_ids:
            raise ValidationError(f"query {self.id}: relevant_ids must be non-empty")


@dataclass(frozen=True)
class RetrievalRun:
    """Ranked (passage id, score) lists per query id, descending by score."""

    results: dict[str, tuple[tuple[str, float], ...]]

    def __post_init__(self):
        frozen: dict[str, tuple[tuple[str, float], ...]] = {}
        for qid, ranking in self.results.items():
            ranking = tuple((str(pid), float(score)) for pid, score in ranking)
            seen = set()
            prev = None
            for pid, score in ranking:
                if pid in seen:
                    raise ValidationError(f"query {qid}: duplicate passage id {pid}")
                seen.add(pid)
                if prev is not None and score > prev:
                    raise ValidationError(f"query {qid}: scores must be non-increasing")
                prev = score
            frozen[qid] = ranking
        object.__setattr__(self, "results", frozen)

    def query_ids(self) -> list[str]:
        return list(self.results.keys())

    def ranked_ids(self, qid: str) -> list[str]:
        return [pid for pid, _ in self.results[qid]]
