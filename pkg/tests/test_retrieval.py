import math

import numpy as np
import pytest

from lexbridge.errors import DuplicateIdError, ValidationError
from lexbridge.retrieval import (
    build_index,
    cosine,
    load_index,
    save_index,
    search_many,
    search_topk,
)


def brute_force_topk(ids, matrix, query, k):
    """Independent oracle: fsum dot products, full sort with the tie rule."""
    rows = []
    for pid, row in zip(ids, matrix):
        dot = math.fsum(float(a) * float(b) for a, b in zip(row, query))
        na = math.sqrt(math.fsum(float(a) * float(a) for a in row))
        nb = math.sqrt(math.fsum(float(b) * float(b) for b in query))
        rows.append((pid, dot / (na * nb)))
    rows.sort(key=lambda item: (-item[1], item[0]))
    return rows[:k]


class TestCosine:
    def test_identical_vectors(self, rng):
        v = rng.standard_normal(9)
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_straight_line_oracle(self, rng):
        a, b = rng.standard_normal(64), rng.standard_normal(64)
        expected = (math.fsum(x * y for x, y in zip(a, b))
                    / (math.sqrt(math.fsum(x * x for x in a))
                       * math.sqrt(math.fsum(y * y for y in b))))
        assert cosine(a, b) == pytest.approx(expected, abs=1e-12)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValidationError):
            cosine(np.zeros(3), np.ones(3))


class TestBuildIndex:
    def test_zero_row_names_id(self, rng):
        emb = rng.standard_normal((3, 4))
        emb[1] = 0.0
        with pytest.raises(ValidationError, match="pB"):
            build_index(["pA", "pB", "pC"], emb)

    def test_empty_index_valid(self):
        index = build_index([], np.empty((0, 8)))
        assert len(index) == 0

    def test_duplicate_id(self, rng):
        with pytest.raises(DuplicateIdError):
            build_index(["a", "a"], rng.standard_normal((2, 3)))

    def test_norms_match_per_row_oracle(self, rng):
        emb = rng.standard_normal((5000, 128))
        ids = [f"p{i:05d}" for i in range(5000)]
        index = build_index(ids, emb)
        by_id = dict(zip(index.ids, index.norms))
        for i in rng.choice(5000, size=50, replace=False):
            expected = math.sqrt(math.fsum(float(x) * float(x) for x in emb[i]))
            assert by_id[ids[i]] == pytest.approx(expected, rel=1e-12)


class TestSearch:
    def test_query_in_index_ranks_first(self, rng):
        emb = rng.standard_normal((20, 6))
        index = build_index([f"p{i:02d}" for i in range(20)], emb)
        top = search_topk(index, emb[7], 3)
        assert top[0][0] == "p07"
        assert top[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_k_larger_than_index(self, rng):
        index = build_index(["a", "b"], rng.standard_normal((2, 4)))
        assert len(search_topk(index, rng.standard_normal(4), 10)) == 2

    def test_empty_index_rejected(self):
        index = build_index([], np.empty((0, 4)))
        with pytest.raises(ValidationError):
            search_topk(index, np.ones(4), 1)

    def test_matches_brute_force_with_ties(self, rng):
        n, d = 400, 16
        emb = rng.standard_normal((n, d))
        # deliberate exact ties: duplicate one row under ids sorting both ways
        emb[50] = emb[10]
        emb[51] = emb[10]
        ids = [f"p{i:03d}" for i in range(n)]
        index = build_index(ids, emb)
        q = rng.standard_normal(d)
        got = search_topk(index, q, 25)
        expected = brute_force_topk(ids, emb, q, 25)
        assert [pid for pid, _ in got] == [pid for pid, _ in expected]
        for (_, s1), (_, s2) in zip(got, expected):
            assert s1 == pytest.approx(s2, abs=1e-12)

    def test_tied_scores_sorted_by_id(self, rng):
        row = rng.standard_normal(8)
        emb = np.stack([row, row * 2.0, row * 0.5, rng.standard_normal(8)])
        index = build_index(["z", "m", "a", "q"], emb)
        top = search_topk(index, row, 4)
        # three exact cosine-1.0 ties come first, ordered by id
        assert [pid for pid, _ in top[:3]] == ["a", "m", "z"]

    def test_scale_invariance(self, rng):
        emb = rng.standard_normal((50, 8))
        index = build_index([f"p{i:02d}" for i in range(50)], emb)
        q = rng.standard_normal(8)
        base = search_topk(index, q, 10)
        scaled = search_topk(index, 123.456 * q, 10)
        assert [p for p, _ in base] == [p for p, _ in scaled]
        for (_, s1), (_, s2) in zip(base, scaled):
            assert s2 == pytest.approx(s1, abs=1e-9)

    def test_full_k_is_permutation_of_all_cosines(self, rng):
        n, d = 60, 5
        emb = rng.standard_normal((n, d))
        ids = [f"p{i:02d}" for i in range(n)]
        index = build_index(ids, emb)
        q = rng.standard_normal(d)
        ranked = search_topk(index, q, n)
        assert len(ranked) == n
        all_scores = sorted(cosine(emb[i], q) for i in range(n))
        assert np.allclose(sorted(s for _, s in ranked), all_scores, atol=1e-12)

    def test_search_many_matches_single(self, rng):
        emb = rng.standard_normal((100, 8))
        index = build_index([f"p{i:03d}" for i in range(100)], emb)
        queries = rng.standard_normal((7, 8))
        single = [search_topk(index, q, 5) for q in queries]
        assert search_many(index, queries, 5, threads=1) == single
        assert search_many(index, queries, 5, threads=3) == single


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, rng):
        emb = rng.standard_normal((10, 4)).astype(np.float32)
        index = build_index([f"p{i}" for i in range(10)], emb)
        save_index(tmp_path / "idx", index)
        loaded = load_index(tmp_path / "idx")
        assert loaded.ids == index.ids
        assert np.allclose(loaded.matrix, index.matrix, atol=1e-7)
