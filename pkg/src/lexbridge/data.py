"""Readers and writers for the plain-text exchange formats.

Formats:
  corpus   line-delimited JSON objects {"id": ..., "text": ...}
  queries  line-delimited JSON objects {"id", "text", "task", "span_length"?}
  qrels    tab-separated ``query_id<TAB>passage_id<TAB>1``
  runs     TREC-style ``query_id Q0 passage_id rank score run_tag``
  id list  one id per line
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

from .errors import CorpusFormatError, DuplicateIdError
from .types import Passage, QueryRecord, RetrievalRun


def load_corpus(path: str | Path) -> list[Passage]:
    """Load passages in file order; blank lines are skipped."""
    passages: list[Passage] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusFormatError(f"{path}:{lineno}: missing required field 'id' or 'text'")
            pid = str(obj["id"])
            if pid in seen:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate passage id {pid!r}")
            seen.add(pid)
            passages.append(Passage(id=pid, text=str(obj["text"])))
    return passages


def write_corpus(path: str | Path, passages: Iterable[Passage]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in passages:
            fh.write(json.dumps({"id": p.id, "text": p.text}) + "\n")


def write_queries(path: str | Path, queries: Iterable[QueryRecord],
                  extras: Optional[dict[str, dict]] = None) -> None:
    """Write query JSONL; ``extras`` maps query id -> extra fields (e.g. span start)."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            obj: dict = {"id": q.id, "text": q.text, "task": q.task}
            if q.span_length is not None:
                obj["span_length"] = q.span_length
            if extras and q.id in extras:
                obj.update(extras[q.id])
            fh.write(json.dumps(obj) + "\n")


def load_queries(path: str | Path, qrels: dict[str, set[str]]) -> list[QueryRecord]:
    """Load full query records, attaching relevant ids from ``qrels``."""
    records: list[QueryRecord] = []
    for obj in load_query_texts(path):
        qid = str(obj["id"])
        rel = sorted(qrels.get(qid, ()))
        if not rel:
            raise CorpusFormatError(f"{path}: query {qid!r} has no qrels entry")
        records.append(QueryRecord(
            id=qid, text=str(obj["text"]), task=str(obj["task"]),
            relevant_ids=tuple(rel), span_length=obj.get("span_length")))
    return records


def load_query_texts(path: str | Path) -> list[dict]:
    """Load raw query objects (id, text, task, optional extras) in file order."""
    out: list[dict] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            for key in ("id", "text", "task"):
                if key not in obj:
                    raise CorpusFormatError(f"{path}:{lineno}: missing required field {key!r}")
            if obj["id"] in seen:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate query id {obj['id']!r}")
            seen.add(obj["id"])
            out.append(obj)
    return out


def read_qrels(path: str | Path) -> dict[str, set[str]]:
    qrels: dict[str, set[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            qid, pid, rel = parts
            if rel != "1":
                raise CorpusFormatError(f"{path}:{lineno}: relevance must be '1', got {rel!r}")
            qrels.setdefault(qid, set()).add(pid)
    return qrels


def write_qrels(path: str | Path, qrels: dict[str, Iterable[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in qrels:
            for pid in sorted(set(qrels[qid])):
                fh.write(f"{qid}\t{pid}\t1\n")


def write_run(path: str | Path, run: RetrievalRun, tag: str = "lexbridge") -> None:
    """Write a TREC-style run file: ``query_id Q0 passage_id rank score tag``."""
    with open(path, "w", encoding="utf-8") as fh:
        for qid, ranking in run.results.items():
            for rank, (pid, score) in enumerate(ranking, start=1):
                fh.write(f"{qid} Q0 {pid} {rank} {score:.10g} {tag}\n")


def read_run(path: str | Path) -> RetrievalRun:
    results: dict[str, list[tuple[str, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 6 whitespace-separated fields, got {len(parts)}")
            qid, _, pid, rank, score, _ = parts
            try:
                results.setdefault(qid, []).append((pid, float(score)))
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad score {score!r}") from exc
            if int(rank) != len(results[qid]):
                raise CorpusFormatError(
                    f"{path}:{lineno}: rank {rank} out of order for query {qid}")
    return RetrievalRun({qid: tuple(rows) for qid, rows in results.items()})


def write_id_list(path: str | Path, ids: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in ids:
            fh.write(f"{i}\n")


def read_id_list(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]
