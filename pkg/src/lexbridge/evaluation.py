"""Ranking metrics over retrieval runs, binary relevance.

nDCG uses gain 1 and discount 1/log2(rank+1) with 1-based ranks; the ideal
DCG places min(|relevant|, k) hits at the top. Queries whose relevant set
is empty are excluded from the means and counted separately. Per-query
values are aggregated with compensated summation so the macro average does
not depend on accumulation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .types import RetrievalRun


def _check_k(k: int) -> None:
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")


def ndcg_at_k(ranked_ids: Sequence[str], relevant: set[str], k: int) -> float:
    _check_k(k)
    if not relevant:
        raise ValidationError("ndcg_at_k: empty relevant set")
    dcg = 0.0
    for rank, pid in enumerate(ranked_ids[:k], start=1):
        if pid in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    ideal_hits = min(len(relevant), k)
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, ideal_hits + 1))
    return dcg / idcg


def mrr_at_k(ranked_ids: Sequence[str], relevant: set[str], k: int) -> float:
    _check_k(k)
    if not relevant:
        raise ValidationError("mrr_at_k: empty relevant set")
    for rank, pid in enumerate(ranked_ids[:k], start=1):
        if pid in relevant:
            return 1.0 / rank
    return 0.0


def recall_at_k(ranked_ids: Sequence[str], relevant: set[str], k: int) -> float:
    _check_k(k)
    if not relevant:
        raise ValidationError("recall_at_k: empty relevant set")
    hits = sum(1 for pid in ranked_ids[:k] if pid in relevant)
    return hits / len(relevant)


_METRICS = {"ndcg": ndcg_at_k, "mrr": mrr_at_k, "recall": recall_at_k}


@dataclass(frozen=True)
class MetricReport:
    """Macro-averaged metric values plus query bookkeeping."""

    values: dict[str, float]
    query_count: int
    skipped_empty: int = 0
    unmatched_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name, v in self.values.items():
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"metric {name} = {v} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps(
            {
                "metrics": self.values,
                "query_count": self.query_count,
                "skipped_empty": self.skipped_empty,
                "unmatched_ids": list(self.unmatched_ids),
            },
            indent=2,
        ) + "\n"

    def to_table(self) -> str:
        width = max(len(n) for n in self.values) if self.values else 6
        lines = [f"{'metric'.ljust(width)}  value"]
        lines += [f"{name.ljust(width)}  {v:.4f}" for name, v in self.values.items()]
        lines.append(f"queries: {self.query_count}  skipped(empty qrels): {self.skipped_empty}")
        return "\n".join(lines) + "\n"


def evaluate_run(run: RetrievalRun, qrels: dict[str, set[str]],
                 ks: Iterable[int]) -> MetricReport:
    """Macro-average ndcg/mrr/recall at each cutoff over the run's queries.

    Run queries missing from the qrels are reported as unmatched; queries
    with an empty relevant set are skipped and counted. It is an error for
    no query to remain.
    """
    ks = sorted(set(int(k) for k in ks))
    for k in ks:
        _check_k(k)
    unmatched = [qid for qid in run.results if qid not in qrels]
    scored_qids = [qid for qid in run.results if qid in qrels and qrels[qid]]
    skipped = len(run.results) - len(unmatched) - len(scored_qids)
    if not scored_qids:
        raise ValidationError("no run query id has a non-empty qrels entry")
    sums: dict[str, list[float]] = {f"{m}@{k}": [] for m in _METRICS for k in ks}
    for qid in scored_qids:
        ranked = run.ranked_ids(qid)
        relevant = qrels[qid]
        for k in ks:
            for m, fn in _METRICS.items():
                sums[f"{m}@{k}"].append(fn(ranked, relevant, k))
    values = {name: math.fsum(vals) / len(scored_qids) for name, vals in sums.items()}
    return MetricReport(values=values, query_count=len(scored_qids),
                        skipped_empty=skipped, unmatched_ids=tuple(unmatched))


def write_report(path_prefix: str | Path, report: MetricReport) -> None:
    """Write ``<prefix>.json`` and an aligned ``<prefix>.txt`` table."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(str(prefix) + ".json").write_text(report.to_json())
    Path(str(prefix) + ".txt").write_text(report.to_table())
