"""Exact cosine top-k search over a dense passage index.

The scan is exhaustive (no approximation) and scores accumulate in 64-bit
regardless of the stored dtype. Ties are broken by ascending passage id,
which makes every result list a total order and runs reproducible.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateIdError, ValidationError
from .numerics import check_finite
from .tensorfile import read_tensor, write_tensor
from .data import read_id_list, write_id_list


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity <a,b> / (|a||b|); zero-norm inputs are rejected."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"cosine: shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine: zero-norm input")
    return float(a @ b / (na * nb))


@dataclass(frozen=True)
class DenseIndex:
    """Immutable id-sorted embedding matrix with precomputed row norms.

    Rows are stored sorted by ascending passage id so that a stable sort on
    scores yields the id tie-break for free.
    """

    ids: tuple[str, ...]
    matrix: np.ndarray
    norms: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.norms.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def build_index(ids, embeddings) -> DenseIndex:
    """Precompute norms; rejects duplicate ids and zero-norm rows by id."""
    ids = [str(i) for i in ids]
    matrix = np.asarray(embeddings, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValidationError(f"embeddings must be 2-D, got {matrix.ndim}-D")
    if len(ids) != matrix.shape[0]:
        raise ValidationError(f"{len(ids)} ids for {matrix.shape[0]} embedding rows")
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                raise DuplicateIdError(f"duplicate passage id {i!r}")
            seen.add(i)
    check_finite(matrix, "embeddings")
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    matrix = np.ascontiguousarray(matrix[order])
    ids = [ids[i] for i in order]
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValidationError(f"zero-norm embedding for passage id {ids[int(zero[0])]!r}")
    return DenseIndex(ids=tuple(ids), matrix=matrix, norms=norms)


def search_topk(index: DenseIndex, query: np.ndarray, k: int) -> list[tuple[str, float]]:
    """The k highest cosine scores over the whole index, descending.

    Exhaustive and exact; ties broken by ascending passage id. k larger
    than the index size returns everything.
    """
    if len(index) == 0:
        raise ValidationError("cannot search an empty index")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ValidationError(f"query shape {q.shape} != ({index.dim},)")
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ValidationError("cosine: zero-norm query")
    scores = index.matrix @ q / (index.norms * qn)
    top = np.argsort(-scores, kind="stable")[: min(k, len(index))]
    return [(index.ids[i], float(scores[i])) for i in top]


def search_many(index: DenseIndex, queries: np.ndarray, k: int,
                threads: int = 1) -> list[list[tuple[str, float]]]:
    """Batched :func:`search_topk`; thread-parallel over query chunks.

    Results are independent per query, so the chunked merge is trivially
    deterministic and identical to the single-threaded order.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValidationError("queries must be 2-D (n x d)")
    if threads <= 1 or queries.shape[0] < 2:
        return [search_topk(index, q, k) for q in queries]
    chunks = np.array_split(np.arange(queries.shape[0]), threads)
    def work(idxs):
        return [search_topk(index, queries[i], k) for i in idxs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(work, chunks))
    return [row for part in parts for row in part]


def save_index(out_dir: str | Path, index: DenseIndex, dtype=np.float32) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(out / "matrix.lxsb", index.matrix, dtype=dtype)
    write_id_list(out / "ids.txt", index.ids)
    (out / "meta.json").write_text(json.dumps({"n": len(index), "d": index.dim}) + "\n")


def load_index(in_dir: str | Path) -> DenseIndex:
    in_dir = Path(in_dir)
    matrix = read_tensor(in_dir / "matrix.lxsb")
    ids = read_id_list(in_dir / "ids.txt")
    return build_index(ids, matrix)
