"""Deterministic surrogate encoder for running the pipeline end to end.

The encoder is bag-of-tokens plus sinusoidal position offsets: each token id
maps to a fixed seeded embedding row, the pooled vector is the mean over
positions, and the classifier state equals the pooled vector. This exercises
every downstream shape and training signal at desk scale; it makes no claim
of transformer fidelity.

The synthetic corpus groups passages into small topic clusters that share a
word pool but differ in per-passage word frequencies, adds one low-frequency
word unique to each passage, and mixes in corpus-wide common words. That
makes keyword and span retrieval discriminative but not saturated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import softmax
from .types import HiddenStateMatrix, Passage, PooledEmbedding, TokenSequence, Vocabulary


@dataclass(frozen=True)
class ToyEncoderConfig:
    vocab_size: int
    dim: int
    seed: int = 0
    position_offsets: bool = True
    offset_scale: float = 0.1
    embed_scale: float = 0.0  # 0 means the default 1/sqrt(dim)

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValidationError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.embed_scale == 0.0:
            object.__setattr__(self, "embed_scale", 1.0 / math.sqrt(self.dim))
        if self.embed_scale < 0:
            raise ValidationError("embed_scale must be positive")


def _position_offsets(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length, dtype=np.float64)[:, None]
    idx = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(idx / 2.0) / dim)
    out = np.empty((length, dim), dtype=np.float64)
    out[:, 0::2] = np.sin(angle[:, 0::2])
    out[:, 1::2] = np.cos(angle[:, 1::2])
    return out


class ToyEncoder:
    """Seeded fixed embedding table; hidden state = row + position offset."""

    def __init__(self, config: ToyEncoderConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.table = config.embed_scale * rng.standard_normal(
            (config.vocab_size, config.dim))

    def encode(self, tokens: TokenSequence) -> tuple[HiddenStateMatrix, PooledEmbedding]:
        if len(tokens) == 0:
            raise ValidationError("cannot encode an empty token sequence (no pooled mean)")
        tokens.check_vocab(self.config.vocab_size)
        rows = self.table[np.asarray(tokens.ids, dtype=np.intp)]
        if self.config.position_offsets:
            rows = rows + self.config.offset_scale * _position_offsets(
                len(tokens), self.config.dim)
        pooled = rows.mean(axis=0)
        hidden = HiddenStateMatrix(rows=rows, cls_state=pooled)
        return hidden, PooledEmbedding(pooled)

    def mlm_probs(self, cls_state: np.ndarray) -> np.ndarray:
        cls = np.asarray(cls_state, dtype=np.float64)
        if cls.shape != (self.config.dim,):
            raise ValidationError(
                f"cls_state shape {cls.shape} != ({self.config.dim},)")
        return softmax(self.table @ cls)


def toy_encode(tokens: TokenSequence,
               config: ToyEncoderConfig) -> tuple[HiddenStateMatrix, PooledEmbedding]:
    return ToyEncoder(config).encode(tokens)


def toy_mlm_probs(cls_state: np.ndarray, config: ToyEncoderConfig) -> np.ndarray:
    return ToyEncoder(config).mlm_probs(cls_state)


@dataclass(frozen=True)
class CorpusShape:
    """Vocabulary layout knobs for the synthetic corpus."""

    n_common: int = 96
    group_size: int = 5
    topic_size: int = 6
    common_fraction: float = 0.5
    unique_words: int = 1
    unique_repeats: int = 3


def synthetic_vocab_size(n_passages: int, shape: CorpusShape = CorpusShape()) -> int:
    n_topics = -(-n_passages // shape.group_size)
    return shape.n_common + n_topics * shape.topic_size + n_passages * shape.unique_words


def make_synthetic_corpus(
    n_passages: int,
    words_per_passage: int,
    config: ToyEncoderConfig,
    shape: CorpusShape = CorpusShape(),
) -> tuple[list[Passage], dict[str, TokenSequence], Vocabulary]:
    """Seeded synthetic passages whose words are vocabulary terms.

    Whitespace-splitting a passage and looking each word up in the returned
    vocabulary reproduces its token sequence exactly, so tokenization of
    derived queries is trivial.
    """
    if n_passages < 1:
        raise ValidationError("n_passages must be >= 1")
    needed = synthetic_vocab_size(n_passages, shape)
    if config.vocab_size < needed:
        raise ValidationError(
            f"vocab_size {config.vocab_size} < {needed} required for "
            f"{n_passages} passages with this corpus shape")
    min_words = shape.unique_words * shape.unique_repeats + 2
    if words_per_passage < min_words:
        raise ValidationError(f"words_per_passage must be >= {min_words}")

    n_topics = -(-n_passages // shape.group_size)
    terms = [f"c{i:04d}" for i in range(shape.n_common)]
    terms += [f"t{t:04d}w{i}" for t in range(n_topics) for i in range(shape.topic_size)]
    terms += [f"u{p:05d}w{i}" for p in range(n_passages) for i in range(shape.unique_words)]
    terms += [f"z{i:05d}" for i in range(config.vocab_size - len(terms))]
    vocab = Vocabulary(size=config.vocab_size, terms=tuple(terms))

    common_base = 0
    topic_base = shape.n_common
    unique_base = topic_base + n_topics * shape.topic_size

    rng = np.random.default_rng(config.seed)
    passages: list[Passage] = []
    tokens_by_id: dict[str, TokenSequence] = {}
    for p in range(n_passages):
        topic = p // shape.group_size
        topic_ids = topic_base + topic * shape.topic_size + np.arange(shape.topic_size)
        unique_ids = unique_base + p * shape.unique_words + np.arange(shape.unique_words)

        n_unique = shape.unique_words * shape.unique_repeats
        remaining = words_per_passage - n_unique
        n_topical = int(round(remaining * (1.0 - shape.common_fraction)))
        n_common_tokens = remaining - n_topical

        prefs = rng.dirichlet(np.full(shape.topic_size, 0.8))
        topical = rng.choice(topic_ids, size=n_topical, replace=True, p=prefs)
        common = rng.choice(
            common_base + np.arange(shape.n_common), size=n_common_tokens, replace=True)
        uniques = np.repeat(unique_ids, shape.unique_repeats)
        ids = np.concatenate([topical, common, uniques])
        rng.shuffle(ids)

        seq = TokenSequence(tuple(int(i) for i in ids))
        pid = f"p{p:05d}"
        passages.append(Passage(id=pid, text=" ".join(terms[i] for i in seq.ids)))
        tokens_by_id[pid] = seq
    return passages, tokens_by_id, vocab
