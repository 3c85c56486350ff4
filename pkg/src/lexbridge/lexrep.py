"""Construction of vocabulary-level importance vectors.

Three constructions produce a non-negative weight per vocabulary entry:

  statistical (SLR)  log1p of a binary token-presence indicator,
  learned     (LLR)  log1p of ReLU-projected hidden states, aggregated
                     over positions (element-wise max by default),
  contextual  (CLR)  log1p of the masked-token probability distribution
                     computed from the classifier state.

log1p of a non-negative input keeps every weight non-negative and finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .numerics import check_finite, layer_norm, softmax
from .types import BridgeParameters, HiddenStateMatrix, ImportanceVector, TokenSequence, Vocabulary

LN2 = math.log(2.0)

AGGREGATIONS = ("max", "sum")


def slr_weights(tokens: TokenSequence, vocab: Vocabulary) -> ImportanceVector:
    """Binary token presence, log1p-scaled: ln 2 for present ids, 0 otherwise."""
    tokens.check_vocab(vocab.size)
    weights = np.zeros(vocab.size, dtype=np.float64)
    if tokens.ids:
        weights[np.unique(np.asarray(tokens.ids, dtype=np.intp))] = LN2
    return ImportanceVector(weights)


def llr_weights(hidden: HiddenStateMatrix, params: BridgeParameters,
                aggregation: str = "max") -> ImportanceVector:
    """Learned contextual relevance: log1p(agg_j ReLU(h_j U + b)) per entry."""
    if not params.has_llr:
        raise ValidationError("llr_weights requires llr_projection and llr_bias")
    if aggregation not in AGGREGATIONS:
        raise ValidationError(f"unknown aggregation {aggregation!r}; expected {AGGREGATIONS}")
    if hidden.length < 1:
        raise ValidationError("llr_weights requires at least one hidden state row")
    if hidden.dim != params.llr_projection.shape[0]:
        raise DimensionMismatchError(
            f"hidden dim {hidden.dim} != llr_projection rows {params.llr_projection.shape[0]}")
    scores = np.maximum(hidden.rows @ params.llr_projection + params.llr_bias, 0.0)
    agg = scores.max(axis=0) if aggregation == "max" else scores.sum(axis=0)
    return ImportanceVector(np.log1p(agg))


def clr_weights(cls_probs: np.ndarray, tol: float = 1e-5) -> ImportanceVector:
    """log1p of a masked-token probability distribution over the vocabulary."""
    probs = np.asarray(cls_probs, dtype=np.float64)
    if probs.ndim != 1:
        raise DimensionMismatchError(f"cls_probs must be 1-D, got {probs.ndim}-D")
    check_finite(probs, "cls_probs")
    if np.any(probs < 0):
        raise ValidationError("cls_probs entries must be non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > tol:
        raise ValidationError(
            f"cls_probs must sum to 1 within {tol}, got {total}")
    return ImportanceVector(np.log1p(probs))


@dataclass(frozen=True)
class MlmHeadParameters:
    """Prediction head: softmax(v_i . LayerNorm(W h + b)) over the vocabulary."""

    transform: np.ndarray        # d x d
    bias: np.ndarray             # d
    ln_gain: np.ndarray          # d
    ln_bias: np.ndarray          # d
    output_embeddings: np.ndarray  # |V| x d
    eps: float = 1e-12

    def __post_init__(self):
        t = np.asarray(self.transform, dtype=np.float64)
        d = t.shape[0] if t.ndim == 2 else -1
        if t.ndim != 2 or t.shape[1] != d:
            raise DimensionMismatchError("transform must be a square d x d matrix")
        for name in ("bias", "ln_gain", "ln_bias"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (d,):
                raise DimensionMismatchError(f"{name} must have shape ({d},), got {v.shape}")
            object.__setattr__(self, name, v)
        emb = np.asarray(self.output_embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[1] != d:
            raise DimensionMismatchError(
                f"output_embeddings must be |V| x {d}, got {emb.shape}")
        object.__setattr__(self, "transform", t)
        object.__setattr__(self, "output_embeddings", emb)

    @property
    def dim(self) -> int:
        return self.transform.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.output_embeddings.shape[0]


def mlm_head(cls_state: np.ndarray, head: MlmHeadParameters) -> np.ndarray:
    """Masked-token distribution from the classifier state; sums to 1."""
    h = np.asarray(cls_state, dtype=np.float64)
    if h.shape != (head.dim,):
        raise DimensionMismatchError(
            f"cls_state must have shape ({head.dim},), got {h.shape}")
    g = layer_norm(head.transform @ h + head.bias, head.ln_gain, head.ln_bias, head.eps)
    return softmax(head.output_embeddings @ g)
