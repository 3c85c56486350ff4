import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexbridge.errors import ValidationError
from lexbridge.evaluation import (
    evaluate_run,
    mrr_at_k,
    ndcg_at_k,
    recall_at_k,
    write_report,
)
from lexbridge.types import RetrievalRun


class TestNdcg:
    def test_relevant_at_rank_1(self):
        assert ndcg_at_k(["a", "b"], {"a"}, 1) == 1.0

    def test_relevant_at_rank_2_cutoff_1(self):
        assert ndcg_at_k(["b", "a"], {"a"}, 1) == 0.0

    def test_relevant_at_rank_3(self):
        # single relevant at rank 3: DCG = 1/log2(4) = 0.5, IDCG = 1
        assert ndcg_at_k(["x", "y", "a", "z"], {"a"}, 10) == pytest.approx(0.5, abs=1e-12)

    def test_multiple_relevants_idcg(self):
        # two relevants at ranks 1 and 3 with k=3
        dcg = 1.0 / math.log2(2) + 1.0 / math.log2(4)
        idcg = 1.0 / math.log2(2) + 1.0 / math.log2(3)
        got = ndcg_at_k(["a", "x", "b"], {"a", "b"}, 3)
        assert got == pytest.approx(dcg / idcg, abs=1e-12)

    def test_empty_relevant_rejected(self):
        with pytest.raises(ValidationError):
            ndcg_at_k(["a"], set(), 1)


class TestMrr:
    def test_first_relevant_rank_4(self):
        assert mrr_at_k(["x", "y", "z", "a"], {"a"}, 10) == 0.25

    def test_no_relevant_in_top_k(self):
        assert mrr_at_k(["x", "y"], {"a"}, 2) == 0.0

    def test_only_first_hit_counts(self):
        assert mrr_at_k(["x", "a", "y", "z", "b"], {"a", "b"}, 10) == 0.5


class TestRecall:
    def test_single_relevant_at_k(self):
        assert recall_at_k(["x", "y", "a"], {"a"}, 3) == 1.0

    def test_half_recovered(self):
        assert recall_at_k(["a", "x"], {"a", "b"}, 2) == 0.5


def independent_metrics(ranked, relevant, k):
    """Separate straight-line implementation used as the fixture oracle."""
    hits = [i + 1 for i, pid in enumerate(ranked[:k]) if pid in relevant]
    dcg = sum(1.0 / math.log2(r + 1) for r in hits)
    idcg = sum(1.0 / math.log2(r + 1) for r in range(1, min(len(relevant), k) + 1))
    ndcg = dcg / idcg
    mrr = 1.0 / hits[0] if hits else 0.0
    recall = len(hits) / len(relevant)
    return ndcg, mrr, recall


def fixture_run():
    """20 queries with the relevant doc placed at a known rank per query."""
    results = {}
    qrels = {}
    docs = [f"d{j}" for j in range(10)]
    for i in range(20):
        qid = f"q{i:02d}"
        rank = i % 10  # 0-based position of the relevant doc
        ranked = [f"other{i}_{j}" for j in range(10)]
        ranked[rank] = f"rel{i}"
        results[qid] = tuple((pid, 1.0 - 0.05 * j) for j, pid in enumerate(ranked))
        qrels[qid] = {f"rel{i}"}
    return RetrievalRun(results), qrels


class TestEvaluateRun:
    def test_all_rank_one_gives_ones(self):
        run = RetrievalRun({f"q{i}": ((f"p{i}", 1.0), ("x", 0.0)) for i in range(5)})
        qrels = {f"q{i}": {f"p{i}"} for i in range(5)}
        report = evaluate_run(run, qrels, ks=[1, 2])
        assert all(v == 1.0 for v in report.values.values())

    def test_reversed_two_doc_ranking(self):
        run = RetrievalRun({"q": (("bad", 0.9), ("good", 0.1))})
        report = evaluate_run(run, {"q": {"good"}}, ks=[1])
        assert report.values["ndcg@1"] == 0.0

    def test_fixture_against_independent_oracle(self):
        run, qrels = fixture_run()
        report = evaluate_run(run, qrels, ks=[1, 5, 10])
        for k in (1, 5, 10):
            expected = [independent_metrics(run.ranked_ids(q), qrels[q], k)
                        for q in run.results]
            for slot, name in ((0, "ndcg"), (1, "mrr"), (2, "recall")):
                mean = math.fsum(vals[slot] for vals in expected) / len(expected)
                assert report.values[f"{name}@{k}"] == pytest.approx(mean, abs=1e-9)

    def test_fixture_frozen_values(self):
        # hand-derived: ranks 1..10 twice each; at k=10
        # ndcg = mean over ranks r of 1/log2(r+1); mrr = mean of 1/r; recall = 1
        run, qrels = fixture_run()
        report = evaluate_run(run, qrels, ks=[10])
        ndcg = math.fsum(1.0 / math.log2(r + 1) for r in range(1, 11)) / 10.0
        mrr = math.fsum(1.0 / r for r in range(1, 11)) / 10.0
        assert report.values["ndcg@10"] == pytest.approx(ndcg, abs=1e-9)
        assert report.values["mrr@10"] == pytest.approx(mrr, abs=1e-9)
        assert report.values["recall@10"] == 1.0

    def test_ndcg1_equals_top1_accuracy(self):
        run, qrels = fixture_run()
        report = evaluate_run(run, qrels, ks=[1])
        accuracy = sum(1 for q in run.results
                       if run.ranked_ids(q)[0] in qrels[q]) / len(run.results)
        assert report.values["ndcg@1"] == pytest.approx(accuracy, abs=1e-12)

    def test_unmatched_and_skipped_bookkeeping(self):
        run = RetrievalRun({
            "known": (("p", 1.0),),
            "missing": (("p", 1.0),),
            "empty": (("p", 1.0),),
        })
        qrels = {"known": {"p"}, "empty": set()}
        report = evaluate_run(run, qrels, ks=[1])
        assert report.query_count == 1
        assert report.skipped_empty == 1
        assert report.unmatched_ids == ("missing",)

    def test_no_scorable_queries_rejected(self):
        run = RetrievalRun({"q": (("p", 1.0),)})
        with pytest.raises(ValidationError):
            evaluate_run(run, {"other": {"p"}}, ks=[1])

    def test_report_files(self, tmp_path):
        run, qrels = fixture_run()
        report = evaluate_run(run, qrels, ks=[1])
        write_report(tmp_path / "rep", report)
        payload = json.loads((tmp_path / "rep.json").read_text())
        assert payload["query_count"] == 20
        assert "ndcg@1" in payload["metrics"]
        assert "metric" in (tmp_path / "rep.txt").read_text()


class TestMetricProperties:
    @settings(max_examples=60, deadline=None)
    @given(rank=st.integers(min_value=2, max_value=9),
           k=st.integers(min_value=1, max_value=10))
    def test_promoting_relevant_never_hurts(self, rank, k):
        ranked = [f"d{j}" for j in range(10)]
        relevant = {f"d{rank}"}
        better = list(ranked)
        better[rank - 1], better[rank] = better[rank], better[rank - 1]
        for metric in (ndcg_at_k, mrr_at_k, recall_at_k):
            assert metric(better, relevant, k) >= metric(ranked, relevant, k)

    @settings(max_examples=40, deadline=None)
    @given(rank=st.integers(min_value=0, max_value=9))
    def test_nondecreasing_in_k(self, rank):
        ranked = [f"d{j}" for j in range(10)]
        relevant = {f"d{rank}"}
        for metric in (ndcg_at_k, mrr_at_k, recall_at_k):
            values = [metric(ranked, relevant, k) for k in range(1, 11)]
            assert all(b >= a for a, b in zip(values, values[1:]))

    def test_invariance_to_irrelevant_relabeling(self):
        relevant = {"rel"}
        a = ["x1", "rel", "x2"]
        b = ["y9", "rel", "zz"]
        for metric in (ndcg_at_k, mrr_at_k, recall_at_k):
            assert metric(a, relevant, 3) == metric(b, relevant, 3)
