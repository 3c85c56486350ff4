"""Generation of the diagnostic retrieval tasks from a corpus.

Part-of-passage queries are contiguous windows of exactly s whitespace
words at a seeded random offset. Keyword queries select 3..8 words per
passage by tf-idf over the corpus (a deterministic surrogate for external
keyword extraction); an import mode accepts pre-extracted keywords instead.
Every generated query names its source passage as the single relevant id.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorpusFormatError, ValidationError
from .types import POP_SPAN_LENGTHS, Passage, QueryRecord

KEYWORD_MIN, KEYWORD_MAX = 3, 8


@dataclass
class TaskGenResult:
    queries: list[QueryRecord]
    qrels: dict[str, set[str]] = field(default_factory=dict)
    extras: dict[str, dict] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def add(self, query: QueryRecord, extra: dict | None = None) -> None:
        self.queries.append(query)
        self.qrels[query.id] = set(query.relevant_ids)
        if extra:
            self.extras[query.id] = extra


def extract_span(words: list[str], start: int, length: int) -> str:
    """Window of exactly ``length`` words joined by single spaces."""
    if start < 0 or start + length > len(words):
        raise ValidationError(
            f"span [{start}, {start + length}) out of range for {len(words)} words")
    return " ".join(words[start:start + length])


def gen_pop_queries(corpus: list[Passage], span_lengths, seed: int = 0) -> TaskGenResult:
    """One query per (eligible passage, requested length); shorter passages skip.

    The start offset is sampled uniformly over all valid positions. Output
    is ordered by (passage id, span length); the offset is recorded in the
    query extras.
    """
    span_lengths = sorted(set(int(s) for s in span_lengths))
    if not span_lengths:
        raise ValidationError("span_lengths must be non-empty")
    for s in span_lengths:
        if s not in POP_SPAN_LENGTHS:
            raise ValidationError(
                f"span length {s} not in supported set {POP_SPAN_LENGTHS}")
    rng = np.random.default_rng(seed)
    result = TaskGenResult(queries=[])
    for s in span_lengths:
        result.skipped[f"pop{s}"] = 0
    for passage in sorted(corpus, key=lambda p: p.id):
        words = passage.text.split()
        for s in span_lengths:
            if len(words) < s:
                result.skipped[f"pop{s}"] += 1
                continue
            start = int(rng.integers(0, len(words) - s + 1))
            result.add(
                QueryRecord(
                    id=f"{passage.id}-pop{s}",
                    text=extract_span(words, start, s),
                    task="pop",
                    relevant_ids=(passage.id,),
                    span_length=s,
                ),
                extra={"start": start},
            )
    return result


def _tfidf_keywords(words_lower: list[str], df: Counter, n_docs: int, k: int) -> list[str]:
    counts = Counter(words_lower)
    scored = sorted(
        counts.items(),
        key=lambda item: (-item[1] * math.log(n_docs / df[item[0]]), item[0]),
    )
    return [w for w, _ in scored[:k]]


def gen_keyword_queries(corpus: list[Passage], k_range=(KEYWORD_MIN, KEYWORD_MAX),
                        seed: int = 0, mode: str = "tfidf_surrogate",
                        import_path: str | Path | None = None) -> TaskGenResult:
    """Keyword queries per passage; tf-idf surrogate or imported keywords.

    Surrogate mode scores lowercased whitespace words by tf * ln(n/df),
    draws k uniformly in ``k_range`` per passage, and emits each keyword's
    first original-case surface form so it occurs verbatim in the source.
    Passages with fewer than 3 distinct words are skipped and counted.
    """
    if mode == "import":
        if import_path is None:
            raise ValidationError("import mode requires a keyword file")
        return _import_keywords(corpus, import_path)
    if mode != "tfidf_surrogate":
        raise ValidationError(f"unknown keyword mode {mode!r}")
    lo, hi = int(k_range[0]), int(k_range[1])
    if not (KEYWORD_MIN <= lo <= hi <= KEYWORD_MAX):
        raise ValidationError(
            f"k_range must lie within [{KEYWORD_MIN}, {KEYWORD_MAX}], got {k_range}")

    n_docs = len(corpus)
    df: Counter = Counter()
    lowered: dict[str, list[str]] = {}
    for passage in corpus:
        words = [w.lower() for w in passage.text.split()]
        lowered[passage.id] = words
        df.update(set(words))

    rng = np.random.default_rng(seed)
    result = TaskGenResult(queries=[], skipped={"keyword": 0})
    for passage in sorted(corpus, key=lambda p: p.id):
        words_lower = lowered[passage.id]
        if len(set(words_lower)) < KEYWORD_MIN:
            result.skipped["keyword"] += 1
            continue
        k = int(rng.integers(lo, hi + 1))
        k = min(k, len(set(words_lower)))
        keywords = _tfidf_keywords(words_lower, df, n_docs, k)
        surface: dict[str, str] = {}
        for original in passage.text.split():
            surface.setdefault(original.lower(), original)
        result.add(
            QueryRecord(
                id=f"{passage.id}-kw",
                text=" ".join(surface[w] for w in keywords),
                task="keyword",
                relevant_ids=(passage.id,),
            )
        )
    return result


def _import_keywords(corpus: list[Passage], path: str | Path) -> TaskGenResult:
    known = {p.id for p in corpus}
    result = TaskGenResult(queries=[], skipped={"keyword": 0})
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 'passage_id<TAB>keywords', "
                    f"got {len(parts)} fields")
            pid, keywords = parts
            if pid not in known:
                raise CorpusFormatError(f"{path}:{lineno}: unknown passage id {pid!r}")
            if not keywords.split():
                raise CorpusFormatError(f"{path}:{lineno}: empty keyword list")
            result.add(
                QueryRecord(
                    id=f"{pid}-kw",
                    text=" ".join(keywords.split()),
                    task="keyword",
                    relevant_ids=(pid,),
                )
            )
    return result
