"""Precomputed feature directories: the frozen-backbone handoff format.

A feature directory bundles everything the bridge needs about a corpus and
a query set: pooled embeddings, token ids, per-position hidden states and
masked-token probability vectors. The toy featurizer writes it; the
external exporter writes the same layout; training and search read it.

Layout (all tensors float32 on disk):

    manifest.json            encoder, dim, vocab_size, pooling, counts, files
    passage_ids.txt          one id per line, same order as the dense rows
    passages_dense.lxsb      n x d
    query_ids.txt
    queries_dense.lxsb       nq x d
    queries_tokens.jsonl     {"id", "ids"} per line, query order
    queries_cls_probs.lxsb   nq x |V|        (absent when no MLM head)
    queries_hidden.lxsb      sum(L) x d      (row blocks in query order)
    passages_tokens.jsonl    optional, passage-side modulation only
    passages_cls_probs.lxsb  optional
    passages_hidden.lxsb     optional
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bridge import EncoderFeatures
from .errors import CorpusFormatError, ValidationError
from .retrieval import build_index, search_topk
from .tensorfile import read_tensor, write_tensor
from .toyenc import ToyEncoder, ToyEncoderConfig
from .training import TrainingExample, mine_hard_negatives
from .types import HiddenStateMatrix, Passage, PooledEmbedding, TokenSequence, Vocabulary
from .data import read_id_list, write_id_list

MANIFEST = "manifest.json"


def _write_tokens_jsonl(path: Path, ids: Sequence[str], tokens: dict[str, TokenSequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in ids:
            fh.write(json.dumps({"id": i, "ids": list(tokens[i].ids)}) + "\n")


def _read_tokens_jsonl(path: Path, expect_ids: Sequence[str]) -> dict[str, TokenSequence]:
    out: dict[str, TokenSequence] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "ids" not in obj:
                raise CorpusFormatError(f"{path}:{lineno}: missing 'id' or 'ids'")
            out[obj["id"]] = TokenSequence(tuple(obj["ids"]))
            order.append(obj["id"])
    if list(expect_ids) != order:
        raise CorpusFormatError(f"{path}: token order does not match the id list")
    return out


def tokenize_with_vocab(text: str, vocab: Vocabulary, label: str = "input") -> TokenSequence:
    """Whitespace-split and look every word up in the vocabulary terms."""
    index = vocab.index()
    ids = []
    for word in text.split():
        if word not in index:
            raise ValidationError(f"{label}: word {word!r} not in the vocabulary")
        ids.append(index[word])
    return TokenSequence(tuple(ids))


def featurize_toy(
    passages: Sequence[Passage],
    queries: Sequence[dict],
    vocab: Vocabulary,
    config: ToyEncoderConfig,
    out_dir: str | Path,
    passage_side: bool = False,
) -> dict:
    """Run the toy encoder over a corpus and query set and write the directory.

    ``queries`` are raw objects with at least "id" and "text". With
    ``passage_side`` the passage token/cls/hidden files are written too,
    enabling passage-side modulation strategies downstream.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    encoder = ToyEncoder(config)

    pids = [p.id for p in passages]
    p_tokens: dict[str, TokenSequence] = {}
    p_dense = np.empty((len(passages), config.dim))
    p_cls = np.empty((len(passages), config.vocab_size)) if passage_side else None
    p_hidden_blocks: list[np.ndarray] = []
    for row, passage in enumerate(passages):
        seq = tokenize_with_vocab(passage.text, vocab, f"passage {passage.id}")
        p_tokens[passage.id] = seq
        hidden, pooled = encoder.encode(seq)
        p_dense[row] = pooled.values
        if passage_side:
            p_cls[row] = encoder.mlm_probs(hidden.cls_state)
            p_hidden_blocks.append(hidden.rows)

    qids = [str(q["id"]) for q in queries]
    q_tokens: dict[str, TokenSequence] = {}
    q_dense = np.empty((len(qids), config.dim))
    q_cls = np.empty((len(qids), config.vocab_size))
    q_hidden_blocks: list[np.ndarray] = []
    for row, q in enumerate(queries):
        seq = tokenize_with_vocab(str(q["text"]), vocab, f"query {q['id']}")
        q_tokens[str(q["id"])] = seq
        hidden, pooled = encoder.encode(seq)
        q_dense[row] = pooled.values
        q_cls[row] = encoder.mlm_probs(hidden.cls_state)
        q_hidden_blocks.append(hidden.rows)

    write_id_list(out / "passage_ids.txt", pids)
    write_tensor(out / "passages_dense.lxsb", p_dense, dtype=np.float32)
    write_id_list(out / "query_ids.txt", qids)
    write_tensor(out / "queries_dense.lxsb", q_dense, dtype=np.float32)
    _write_tokens_jsonl(out / "queries_tokens.jsonl", qids, q_tokens)
    write_tensor(out / "queries_cls_probs.lxsb", q_cls, dtype=np.float32)
    write_tensor(out / "queries_hidden.lxsb",
                 np.concatenate(q_hidden_blocks) if q_hidden_blocks
                 else np.empty((0, config.dim)), dtype=np.float32)
    files = {
        "passage_ids": "passage_ids.txt",
        "passages_dense": "passages_dense.lxsb",
        "query_ids": "query_ids.txt",
        "queries_dense": "queries_dense.lxsb",
        "queries_tokens": "queries_tokens.jsonl",
        "queries_cls_probs": "queries_cls_probs.lxsb",
        "queries_hidden": "queries_hidden.lxsb",
    }
    if passage_side:
        _write_tokens_jsonl(out / "passages_tokens.jsonl", pids, p_tokens)
        write_tensor(out / "passages_cls_probs.lxsb", p_cls, dtype=np.float32)
        write_tensor(out / "passages_hidden.lxsb",
                     np.concatenate(p_hidden_blocks), dtype=np.float32)
        files.update({
            "passages_tokens": "passages_tokens.jsonl",
            "passages_cls_probs": "passages_cls_probs.lxsb",
            "passages_hidden": "passages_hidden.lxsb",
        })
    manifest = {
        "encoder": "toy",
        "dim": config.dim,
        "vocab_size": config.vocab_size,
        "pooling": "mean",
        "seed": config.seed,
        "counts": {"passages": len(pids), "queries": len(qids)},
        "files": files,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


@dataclass
class FeatureSet:
    """In-memory view of a feature directory."""

    manifest: dict
    passage_ids: list[str]
    passages_dense: np.ndarray
    query_ids: list[str]
    queries_dense: np.ndarray
    queries_tokens: dict[str, TokenSequence]
    queries_cls_probs: Optional[np.ndarray]
    queries_hidden: dict[str, np.ndarray]
    passages_tokens: Optional[dict[str, TokenSequence]] = None
    passages_cls_probs: Optional[np.ndarray] = None
    passages_hidden: Optional[dict[str, np.ndarray]] = None

    @property
    def dim(self) -> int:
        return int(self.manifest["dim"])

    @property
    def vocab_size(self) -> int:
        return int(self.manifest["vocab_size"])

    def _row(self, ids: list[str], target: str) -> int:
        try:
            return ids.index(target)
        except ValueError:
            raise ValidationError(f"unknown id {target!r} in feature set") from None

    def query_features(self, qid: str) -> EncoderFeatures:
        row = self._row(self.query_ids, qid)
        return EncoderFeatures(
            dense=PooledEmbedding(self.queries_dense[row]),
            tokens=self.queries_tokens.get(qid),
            hidden=_hidden_matrix(self.queries_hidden.get(qid), self.queries_dense[row]),
            cls_probs=None if self.queries_cls_probs is None else self.queries_cls_probs[row],
        )

    def passage_features(self, pid: str) -> EncoderFeatures:
        row = self._row(self.passage_ids, pid)
        hidden = None
        if self.passages_hidden is not None:
            hidden = _hidden_matrix(self.passages_hidden.get(pid), self.passages_dense[row])
        return EncoderFeatures(
            dense=PooledEmbedding(self.passages_dense[row]),
            tokens=None if self.passages_tokens is None else self.passages_tokens.get(pid),
            hidden=hidden,
            cls_probs=None if self.passages_cls_probs is None else self.passages_cls_probs[row],
        )


def _hidden_matrix(rows: Optional[np.ndarray], pooled: np.ndarray) -> Optional[HiddenStateMatrix]:
    if rows is None:
        return None
    return HiddenStateMatrix(rows=rows, cls_state=pooled)


def _split_hidden(concat: np.ndarray, ids: Sequence[str],
                  tokens: dict[str, TokenSequence], path: Path) -> dict[str, np.ndarray]:
    lengths = [len(tokens[i]) for i in ids]
    if sum(lengths) != concat.shape[0]:
        raise CorpusFormatError(
            f"{path}: hidden rows {concat.shape[0]} != total token count {sum(lengths)}")
    out: dict[str, np.ndarray] = {}
    offset = 0
    for i, length in zip(ids, lengths):
        out[i] = concat[offset:offset + length]
        offset += length
    return out


def load_features(in_dir: str | Path) -> FeatureSet:
    """Load and cross-validate a feature directory."""
    root = Path(in_dir)
    manifest_path = root / MANIFEST
    if not manifest_path.exists():
        raise CorpusFormatError(f"{root}: missing {MANIFEST}")
    manifest = json.loads(manifest_path.read_text())
    files = manifest.get("files", {})

    def fpath(key: str) -> Path:
        if key not in files:
            raise CorpusFormatError(f"{root}: manifest lacks file entry {key!r}")
        return root / files[key]

    passage_ids = read_id_list(fpath("passage_ids"))
    passages_dense = read_tensor(fpath("passages_dense")).astype(np.float64)
    query_ids = read_id_list(fpath("query_ids"))
    queries_dense = read_tensor(fpath("queries_dense")).astype(np.float64)
    _expect_rows(passages_dense, len(passage_ids), fpath("passages_dense"))
    _expect_rows(queries_dense, len(query_ids), fpath("queries_dense"))
    queries_tokens = _read_tokens_jsonl(fpath("queries_tokens"), query_ids)

    queries_cls = None
    if "queries_cls_probs" in files:
        queries_cls = read_tensor(fpath("queries_cls_probs")).astype(np.float64)
        _expect_rows(queries_cls, len(query_ids), fpath("queries_cls_probs"))

    q_hidden_concat = read_tensor(fpath("queries_hidden")).astype(np.float64)
    queries_hidden = _split_hidden(q_hidden_concat, query_ids, queries_tokens,
                                   fpath("queries_hidden"))

    passages_tokens = passages_cls = passages_hidden = None
    if "passages_tokens" in files:
        passages_tokens = _read_tokens_jsonl(fpath("passages_tokens"), passage_ids)
    if "passages_cls_probs" in files:
        passages_cls = read_tensor(fpath("passages_cls_probs")).astype(np.float64)
        _expect_rows(passages_cls, len(passage_ids), fpath("passages_cls_probs"))
    if "passages_hidden" in files:
        if passages_tokens is None:
            raise CorpusFormatError(f"{root}: passages_hidden requires passages_tokens")
        p_hidden_concat = read_tensor(fpath("passages_hidden")).astype(np.float64)
        passages_hidden = _split_hidden(p_hidden_concat, passage_ids, passages_tokens,
                                        fpath("passages_hidden"))

    dim = int(manifest["dim"])
    for name, arr in (("passages_dense", passages_dense), ("queries_dense", queries_dense)):
        if arr.shape[1] != dim:
            raise CorpusFormatError(f"{root}: {name} dim {arr.shape[1]} != manifest dim {dim}")
    return FeatureSet(
        manifest=manifest,
        passage_ids=passage_ids,
        passages_dense=passages_dense,
        query_ids=query_ids,
        queries_dense=queries_dense,
        queries_tokens=queries_tokens,
        queries_cls_probs=queries_cls,
        queries_hidden=queries_hidden,
        passages_tokens=passages_tokens,
        passages_cls_probs=passages_cls,
        passages_hidden=passages_hidden,
    )


def _expect_rows(arr: np.ndarray, n: int, path: Path) -> None:
    if arr.ndim != 2 or arr.shape[0] != n:
        raise CorpusFormatError(f"{path}: expected {n} rows, got shape {arr.shape}")


def assemble_training_examples(
    features: FeatureSet,
    qrels: dict[str, set[str]],
    group_size: int = 16,
    seed: int = 0,
    candidates: int = 250,
    passage_side: bool = False,
) -> list[TrainingExample]:
    """Build contrastive examples: positives from qrels, negatives mined.

    Negatives come from a baseline (unmodulated dense) ranking of the
    corpus, sampled from the documented rank window with a per-query seed
    derived as seed + query index.
    """
    if group_size < 2:
        raise ValidationError("group_size must be >= 2")
    index = build_index(features.passage_ids, features.passages_dense)
    row_of = {pid: i for i, pid in enumerate(features.passage_ids)}
    examples: list[TrainingExample] = []
    k = min(candidates, len(index))
    for qi, qid in enumerate(features.query_ids):
        if qid not in qrels or not qrels[qid]:
            raise ValidationError(f"query {qid!r} has no qrels entry")
        positive = sorted(qrels[qid])[0]
        if positive not in row_of:
            raise ValidationError(f"relevant passage {positive!r} not in the feature set")
        ranked = [pid for pid, _ in search_topk(index, features.queries_dense[qi], k)]
        negatives = mine_hard_negatives(positive, ranked, k=group_size - 1, seed=seed + qi)
        group_ids = [positive] + negatives
        rows = [row_of[pid] for pid in group_ids]
        passage_tokens = passage_hidden = passage_cls = None
        if passage_side:
            if features.passages_tokens is not None:
                passage_tokens = tuple(features.passages_tokens[pid] for pid in group_ids)
            if features.passages_hidden is not None:
                passage_hidden = tuple(features.passages_hidden[pid] for pid in group_ids)
            if features.passages_cls_probs is not None:
                passage_cls = features.passages_cls_probs[rows]
        examples.append(TrainingExample(
            query_dense=features.queries_dense[qi],
            passages=features.passages_dense[rows],
            query_tokens=features.queries_tokens.get(qid),
            query_hidden=features.queries_hidden.get(qid),
            query_cls_probs=None if features.queries_cls_probs is None
            else features.queries_cls_probs[qi],
            passage_tokens=passage_tokens,
            passage_hidden=passage_hidden,
            passage_cls_probs=passage_cls,
        ))
    return examples
