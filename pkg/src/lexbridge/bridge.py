"""Projection of importance vectors into embedding space and query modulation.

The enhancement vector is softmax(W . w): strictly positive, sums to 1.
Modulation multiplies it element-wise into the dense embedding, leaving
cosine rankings unchanged whenever the enhancement is uniform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .lexrep import clr_weights, llr_weights, slr_weights
from .numerics import softmax
from .tensorfile import read_tensor, write_tensor
from .types import (
    BridgeParameters,
    HiddenStateMatrix,
    ImportanceVector,
    PooledEmbedding,
    TokenSequence,
    Vocabulary,
)

STRATEGIES = ("baseline", "slr", "llr", "clr")
HEAD_MODES = ("query_only", "passage_only", "both", "lexical_only")


def project_and_normalize(w: ImportanceVector, params: BridgeParameters) -> np.ndarray:
    """Enhancement vector softmax(W . w); positive entries summing to 1."""
    weights = w.weights
    if weights.shape[0] != params.importance_len:
        raise DimensionMismatchError(
            f"importance length {weights.shape[0]} != projection cols {params.importance_len}")
    return softmax(params.projection @ weights)


def modulate(q_dense: PooledEmbedding, q_lex: np.ndarray) -> np.ndarray:
    """Element-wise product of the dense embedding and the enhancement vector."""
    dense = q_dense.values if isinstance(q_dense, PooledEmbedding) else np.asarray(q_dense, dtype=np.float64)
    lex = np.asarray(q_lex, dtype=np.float64)
    if dense.shape != lex.shape:
        raise DimensionMismatchError(
            f"dense shape {dense.shape} != enhancement shape {lex.shape}")
    return dense * lex


def patch_modulate(r_patch: ImportanceVector, params: BridgeParameters,
                   q_image_dense: PooledEmbedding) -> np.ndarray:
    """Patch-level analogue: identical math with m = number of patches."""
    return modulate(q_image_dense, project_and_normalize(r_patch, params))


@dataclass(frozen=True)
class EncoderFeatures:
    """Frozen per-input features from which all strategies can be served."""

    dense: PooledEmbedding
    tokens: Optional[TokenSequence] = None
    hidden: Optional[HiddenStateMatrix] = None
    cls_probs: Optional[np.ndarray] = None


def importance_for(features: EncoderFeatures, strategy: str, params: BridgeParameters,
                   aggregation: str = "max") -> ImportanceVector:
    """Build the strategy's importance vector from the available features."""
    if strategy == "slr":
        if features.tokens is None:
            raise ValidationError("slr strategy requires token ids")
        return slr_weights(features.tokens, Vocabulary(size=params.importance_len))
    if strategy == "llr":
        if features.hidden is None:
            raise ValidationError("llr strategy requires hidden states")
        return llr_weights(features.hidden, params, aggregation)
    if strategy == "clr":
        if features.cls_probs is None:
            raise ValidationError("clr strategy requires masked-token probabilities")
        return clr_weights(features.cls_probs)
    raise ValidationError(f"no importance vector for strategy {strategy!r}")


def encode_query(features: EncoderFeatures, strategy: str, head_mode: str,
                 params: Optional[BridgeParameters] = None,
                 aggregation: str = "max") -> np.ndarray:
    """Final query vector for the chosen strategy and head mode.

    baseline keeps the dense vector; query_only/both modulate it;
    passage_only leaves the query untouched; lexical_only returns the
    enhancement vector itself as the representation.
    """
    _check_modes(strategy, head_mode)
    if strategy == "baseline":
        return features.dense.values.copy()
    if params is None:
        raise ValidationError(f"strategy {strategy!r} requires bridge parameters")
    if head_mode == "passage_only":
        return features.dense.values.copy()
    q_lex = project_and_normalize(importance_for(features, strategy, params, aggregation), params)
    if head_mode == "lexical_only":
        return q_lex
    return modulate(features.dense, q_lex)


def encode_passage(features: EncoderFeatures, strategy: str, head_mode: str,
                   params: Optional[BridgeParameters] = None,
                   aggregation: str = "max") -> np.ndarray:
    """Final passage vector; modulated only under passage_only/both."""
    _check_modes(strategy, head_mode)
    if strategy == "baseline" or head_mode in ("query_only", "lexical_only"):
        return features.dense.values.copy()
    if params is None:
        raise ValidationError(f"strategy {strategy!r} requires bridge parameters")
    p_lex = project_and_normalize(importance_for(features, strategy, params, aggregation), params)
    return modulate(features.dense, p_lex)


def _check_modes(strategy: str, head_mode: str) -> None:
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if head_mode not in HEAD_MODES:
        raise ValidationError(f"unknown head_mode {head_mode!r}; expected one of {HEAD_MODES}")


def save_bridge(out_dir: str | Path, params: BridgeParameters, strategy: str,
                head_mode: str, dtype=np.float32) -> None:
    """Persist parameters as tensor files plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(out / "W.lxsb", params.projection, dtype=dtype)
    manifest = {
        "strategy": strategy,
        "head_mode": head_mode,
        "d": params.dim,
        "m": params.importance_len,
        "has_llr": params.has_llr,
    }
    if params.has_llr:
        write_tensor(out / "U.lxsb", params.llr_projection, dtype=dtype)
        write_tensor(out / "b.lxsb", params.llr_bias, dtype=dtype)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_bridge(in_dir: str | Path) -> tuple[BridgeParameters, dict]:
    in_dir = Path(in_dir)
    manifest = json.loads((in_dir / "manifest.json").read_text())
    projection = read_tensor(in_dir / "W.lxsb")
    u = b = None
    if manifest.get("has_llr"):
        u = read_tensor(in_dir / "U.lxsb")
        b = read_tensor(in_dir / "b.lxsb")
    params = BridgeParameters(projection=projection, llr_projection=u, llr_bias=b)
    if params.dim != manifest["d"] or params.importance_len != manifest["m"]:
        raise ValidationError(
            f"{in_dir}: manifest dims ({manifest['d']}, {manifest['m']}) do not match "
            f"tensor dims ({params.dim}, {params.importance_len})")
    return params, manifest
