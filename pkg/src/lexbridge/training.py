"""Contrastive training of the bridge parameters over frozen features.

The loss is softmax cross-entropy over one positive and G-1 negatives with
temperature scaling, similarities measured by cosine. Gradients are exact
analytic derivatives back through cosine similarity, element-wise
modulation, softmax, the projection matvec and, for the learned lexical
construction, log1p of ReLU-projected hidden states (subgradient 0 at the
ReLU kink). Everything runs in 64-bit so central finite differences at
h = 1e-5 resolve the gradients to ~1e-10 absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .bridge import HEAD_MODES, STRATEGIES
from .errors import (
    DimensionMismatchError,
    InsufficientCandidatesError,
    NonFiniteError,
    ValidationError,
)
from .lexrep import AGGREGATIONS, LN2
from .numerics import softmax
from .types import BridgeParameters, TokenSequence

NEGATIVE_WINDOW = (20, 200)  # 1-based rank positions, inclusive


@dataclass(frozen=True)
class TrainingConfig:
    temperature: float = 0.02
    batch_size: int = 64
    group_size: int = 16
    epochs: int = 10
    learning_rate: float = 1e-5
    seed: int = 0
    strategy: str = "clr"
    head_mode: str = "query_only"
    optimizer: str = "sgd"
    aggregation: str = "max"
    log_every: int = 10
    checkpoint_every: int = 5000

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValidationError(f"temperature must be > 0, got {self.temperature}")
        if self.group_size < 2:
            raise ValidationError(f"group_size must be >= 2, got {self.group_size}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.head_mode not in HEAD_MODES:
            raise ValidationError(f"unknown head_mode {self.head_mode!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValidationError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class TrainingExample:
    """One query with its positive (row 0) and negative passages."""

    query_dense: np.ndarray                 # d
    passages: np.ndarray                    # G x d, row 0 = positive
    query_tokens: Optional[TokenSequence] = None
    query_hidden: Optional[np.ndarray] = None      # L x d
    query_cls_probs: Optional[np.ndarray] = None   # m
    passage_tokens: Optional[tuple[TokenSequence, ...]] = None
    passage_hidden: Optional[tuple[np.ndarray, ...]] = None
    passage_cls_probs: Optional[np.ndarray] = None  # G x m

    def __post_init__(self):
        q = np.asarray(self.query_dense, dtype=np.float64)
        p = np.asarray(self.passages, dtype=np.float64)
        if q.ndim != 1 or p.ndim != 2 or p.shape[1] != q.shape[0]:
            raise DimensionMismatchError(
                f"query dim {q.shape} incompatible with passages {p.shape}")
        if p.shape[0] < 2:
            raise ValidationError("an example needs at least one negative passage")
        object.__setattr__(self, "query_dense", q)
        object.__setattr__(self, "passages", p)

    @property
    def group_size(self) -> int:
        return self.passages.shape[0]

    @property
    def dim(self) -> int:
        return self.query_dense.shape[0]


def contrastive_loss(similarities: np.ndarray, temperature: float) -> float:
    """-(1/B) sum_i log softmax_j(s_ij / tau)[0], log-sum-exp stabilized.

    Each row is evaluated as log(sum_j exp((s_ij - s_i0)/tau)), which is
    exactly shift-invariant; when the positive dominates, the log1p form
    keeps the tiny positive loss instead of rounding it to zero.
    """
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    s = np.asarray(similarities, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] < 2:
        raise DimensionMismatchError(f"similarities must be B x G with G >= 2, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("similarities contain non-finite values")
    x = (s - s[:, :1]) / temperature           # column 0 becomes 0
    m = np.max(x, axis=1)                      # >= 0
    rest = np.sum(np.exp(x[:, 1:] - m[:, None]), axis=1)
    rows = np.where(m > 0, m + np.log(np.exp(-m) + rest), np.log1p(rest))
    return float(np.mean(rows))


def init_bridge_params(dim: int, m: int, seed: int = 0,
                       strategy: str = "clr") -> BridgeParameters:
    """Seeded uniform initialization on [-1/sqrt(d), 1/sqrt(d)]; LLR bias 0."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(dim)
    projection = rng.uniform(-bound, bound, size=(dim, m))
    u = b = None
    if strategy == "llr":
        u = rng.uniform(-bound, bound, size=(dim, m))
        b = np.zeros(m)
    return BridgeParameters(projection=projection, llr_projection=u, llr_bias=b)


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------


def _slr_matrix(token_seqs: Sequence[TokenSequence], m: int) -> np.ndarray:
    out = np.zeros((len(token_seqs), m), dtype=np.float64)
    for row, seq in enumerate(token_seqs):
        if seq is None:
            raise ValidationError("slr strategy requires token ids on every example")
        seq.check_vocab(m)
        if seq.ids:
            out[row, np.unique(np.asarray(seq.ids, dtype=np.intp))] = LN2
    return out


class _LlrCache:
    """Per-input intermediates needed for the U/b backward pass."""

    __slots__ = ("hidden", "umax_or_u", "v", "jstar")

    def __init__(self, hidden, umax_or_u, v, jstar):
        self.hidden = hidden
        self.umax_or_u = umax_or_u
        self.v = v
        self.jstar = jstar


def _llr_forward(hidden: np.ndarray, u_mat: np.ndarray, bias: np.ndarray,
                 aggregation: str) -> tuple[np.ndarray, _LlrCache]:
    h = np.asarray(hidden, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValidationError("llr strategy requires at least one hidden state row")
    if h.shape[1] != u_mat.shape[0]:
        raise DimensionMismatchError(
            f"hidden dim {h.shape[1]} != llr_projection rows {u_mat.shape[0]}")
    u = h @ u_mat + bias  # L x m
    if aggregation == "max":
        jstar = u.argmax(axis=0)
        umax = u[jstar, np.arange(u.shape[1])]
        v = np.maximum(umax, 0.0)
        return np.log1p(v), _LlrCache(h, umax, v, jstar)
    v = np.maximum(u, 0.0).sum(axis=0)
    return np.log1p(v), _LlrCache(h, u, v, None)


def _llr_backward(gw: np.ndarray, cache: _LlrCache, aggregation: str,
                  d_u: np.ndarray, d_b: np.ndarray) -> None:
    gv = gw / (1.0 + cache.v)
    if aggregation == "max":
        active = cache.umax_or_u > 0.0
        gvm = np.where(active, gv, 0.0)
        m = gv.shape[0]
        onehot = np.zeros((cache.hidden.shape[0], m))
        onehot[cache.jstar, np.arange(m)] = gvm
        d_u += cache.hidden.T @ onehot
        d_b += gvm
    else:
        mask = cache.umax_or_u > 0.0  # L x m
        d_u += cache.hidden.T @ (mask * gv)
        d_b += (mask * gv).sum(axis=0)


class _Stacked:
    """Parameter-independent batch arrays, computed once per batch."""

    __slots__ = ("e_q", "p_dense", "w_query", "q_hidden", "w_pass", "p_hidden",
                 "modulate_query", "modulate_passage")

    def __init__(self, examples: Sequence[TrainingExample], config: TrainingConfig, m: int):
        self.e_q = np.stack([e.query_dense for e in examples])
        self.p_dense = np.stack([e.passages for e in examples])
        self.modulate_query = config.strategy != "baseline" and config.head_mode in (
            "query_only", "both", "lexical_only")
        self.modulate_passage = config.strategy != "baseline" and config.head_mode in (
            "passage_only", "both")
        self.w_query = self.q_hidden = self.w_pass = self.p_hidden = None
        if self.modulate_query:
            if config.strategy == "slr":
                self.w_query = _slr_matrix([e.query_tokens for e in examples], m)
            elif config.strategy == "clr":
                for e in examples:
                    if e.query_cls_probs is None:
                        raise ValidationError("clr strategy requires query_cls_probs")
                self.w_query = np.log1p(np.stack(
                    [np.asarray(e.query_cls_probs, dtype=np.float64) for e in examples]))
            else:
                for e in examples:
                    if e.query_hidden is None:
                        raise ValidationError("llr strategy requires query_hidden")
                self.q_hidden = [np.asarray(e.query_hidden, dtype=np.float64)
                                 for e in examples]
        if self.modulate_passage:
            if config.strategy == "slr":
                for e in examples:
                    if e.passage_tokens is None:
                        raise ValidationError("passage-side slr requires passage_tokens")
                self.w_pass = np.stack(
                    [_slr_matrix(e.passage_tokens, m) for e in examples])
            elif config.strategy == "clr":
                for e in examples:
                    if e.passage_cls_probs is None:
                        raise ValidationError("passage-side clr requires passage_cls_probs")
                self.w_pass = np.log1p(np.stack(
                    [np.asarray(e.passage_cls_probs, dtype=np.float64) for e in examples]))
            else:
                for e in examples:
                    if e.passage_hidden is None:
                        raise ValidationError("passage-side llr requires passage_hidden")
                self.p_hidden = [np.asarray(h, dtype=np.float64)
                                 for e in examples for h in e.passage_hidden]


def _forward_raw(stacked: _Stacked, proj: np.ndarray, u_mat, bias,
                 config: TrainingConfig, need_cache: bool):
    """Similarities (and backward intermediates) from raw parameter tensors."""
    query_caches: Optional[list] = [] if (need_cache and config.strategy == "llr") else None
    passage_caches: Optional[list] = [] if (need_cache and config.strategy == "llr") else None

    e_q = stacked.e_q
    w_query = stacked.w_query
    a_q = None
    if stacked.modulate_query:
        if config.strategy == "llr":
            rows = []
            for h in stacked.q_hidden:
                w, llr_cache = _llr_forward(h, u_mat, bias, config.aggregation)
                rows.append(w)
                if query_caches is not None:
                    query_caches.append(llr_cache)
            w_query = np.stack(rows)
        a_q = softmax(w_query @ proj.T, axis=1)
        q = a_q if config.head_mode == "lexical_only" else e_q * a_q
    else:
        q = e_q

    p_dense = stacked.p_dense
    w_pass = stacked.w_pass
    a_p = None
    if stacked.modulate_passage:
        if config.strategy == "llr":
            b, g = p_dense.shape[0], p_dense.shape[1]
            rows = []
            for h in stacked.p_hidden:
                w, llr_cache = _llr_forward(h, u_mat, bias, config.aggregation)
                rows.append(w)
                if passage_caches is not None:
                    passage_caches.append(llr_cache)
            w_pass = np.stack(rows).reshape(b, g, -1)
        a_p = softmax(np.einsum("bgm,dm->bgd", w_pass, proj), axis=2)
        p = p_dense * a_p
    else:
        p = p_dense

    qn = np.linalg.norm(q, axis=1)
    pn = np.linalg.norm(p, axis=2)
    if np.any(qn == 0.0) or np.any(pn == 0.0):
        raise ValidationError("zero-norm vector inside the contrastive loss")
    sims = np.einsum("bgd,bd->bg", p, q) / (pn * qn[:, None])
    cache = None
    if need_cache:
        cache = dict(a_q=a_q, q=q, qn=qn, a_p=a_p, p=p, pn=pn, sims=sims,
                     w_query=w_query, w_pass=w_pass,
                     query_caches=query_caches, passage_caches=passage_caches)
    return sims, cache


def _raw_tensors(params: BridgeParameters):
    return params.projection, params.llr_projection, params.llr_bias


def batch_loss(examples: Sequence[TrainingExample], params: BridgeParameters,
               config: TrainingConfig) -> float:
    """Forward-only loss; the target for finite-difference checks."""
    stacked = _Stacked(examples, config, params.importance_len)
    sims, _ = _forward_raw(stacked, *_raw_tensors(params), config, need_cache=False)
    return contrastive_loss(sims, config.temperature)


def loss_gradients(examples: Sequence[TrainingExample], params: BridgeParameters,
                   config: TrainingConfig):
    """Loss plus exact analytic gradients for every trainable tensor.

    Returns ``(loss, grads)`` with grads keyed by "projection" and, for the
    llr strategy, "llr_projection" and "llr_bias".
    """
    if not examples:
        raise ValidationError("empty batch")
    stacked = _Stacked(examples, config, params.importance_len)
    if config.strategy == "baseline":
        sims, _ = _forward_raw(stacked, *_raw_tensors(params), config, need_cache=False)
        return contrastive_loss(sims, config.temperature), {}
    sims, cache = _forward_raw(stacked, *_raw_tensors(params), config, need_cache=True)
    loss = contrastive_loss(sims, config.temperature)

    b, g = sims.shape
    tau = config.temperature
    d_s = softmax(sims / tau, axis=1)
    d_s[:, 0] -= 1.0
    d_s /= b * tau

    q, qn, p, pn = cache["q"], cache["qn"], cache["p"], cache["pn"]
    # d cos / d q: p/(|q||p|) - s q/|q|^2, weighted by d_s and summed over the group
    coef = d_s / (pn * qn[:, None])                       # B x G
    g_q = np.einsum("bg,bgd->bd", coef, p)
    g_q -= (np.sum(d_s * sims, axis=1) / qn**2)[:, None] * q

    grads: dict[str, np.ndarray] = {"projection": np.zeros_like(params.projection)}
    if config.strategy == "llr":
        grads["llr_projection"] = np.zeros_like(params.llr_projection)
        grads["llr_bias"] = np.zeros_like(params.llr_bias)

    if stacked.modulate_query:
        a_q = cache["a_q"]
        g_a = g_q if config.head_mode == "lexical_only" else g_q * stacked.e_q
        inner = np.sum(a_q * g_a, axis=1, keepdims=True)
        g_z = a_q * (g_a - inner)                          # B x d
        grads["projection"] += g_z.T @ cache["w_query"]
        if config.strategy == "llr":
            g_w = g_z @ params.projection                  # B x m
            for i, llr_cache in enumerate(cache["query_caches"]):
                _llr_backward(g_w[i], llr_cache, config.aggregation,
                              grads["llr_projection"], grads["llr_bias"])

    if stacked.modulate_passage:
        a_p = cache["a_p"]
        # d cos / d p: q/(|q||p|) - s p/|p|^2, per group entry
        g_p = (d_s / (pn * qn[:, None]))[:, :, None] * q[:, None, :]
        g_p -= (d_s * sims / pn**2)[:, :, None] * p
        g_ap = g_p * stacked.p_dense
        inner = np.sum(a_p * g_ap, axis=2, keepdims=True)
        g_zp = a_p * (g_ap - inner)                        # B x G x d
        grads["projection"] += np.einsum("bgd,bgm->dm", g_zp, cache["w_pass"])
        if config.strategy == "llr":
            g_wp = np.einsum("bgd,dm->bgm", g_zp, params.projection)
            flat = g_wp.reshape(b * g, -1)
            for i, llr_cache in enumerate(cache["passage_caches"]):
                _llr_backward(flat[i], llr_cache, config.aggregation,
                              grads["llr_projection"], grads["llr_bias"])
    return loss, grads


# ---------------------------------------------------------------------------
# hard-negative mining
# ---------------------------------------------------------------------------


def mine_hard_negatives(positive_id: str, ranked_ids: Sequence[str], k: int = 15,
                        seed: int = 0) -> list[str]:
    """Sample k distinct ids from rank positions 20..200 (1-based), seeded.

    The positive id is excluded. Lists shorter than the full window fall
    back to the available tail at ranks >= 20; fewer than k candidates is
    an error.
    """
    lo, hi = NEGATIVE_WINDOW
    window = [str(pid) for pid in ranked_ids[lo - 1:hi] if str(pid) != str(positive_id)]
    if len(window) < k:
        raise InsufficientCandidatesError(
            f"{len(window)} candidates in rank window [{lo}, {hi}] "
            f"(list length {len(ranked_ids)}); need {k}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(window), size=k, replace=False)
    return [window[int(i)] for i in picks]


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


class _Adam:
    def __init__(self, shapes: dict[str, tuple], lr: float,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for key, g in grads.items():
            self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * g * g
            m_hat = self.m[key] / (1 - self.beta1**self.t)
            v_hat = self.v[key] / (1 - self.beta2**self.t)
            tensors[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_bridge(
    dataset: Sequence[TrainingExample],
    config: TrainingConfig,
    init_params: Optional[BridgeParameters] = None,
    m: Optional[int] = None,
    checkpoint_fn: Optional[Callable[[int, BridgeParameters], None]] = None,
) -> tuple[BridgeParameters, list[tuple[int, float]]]:
    """Mini-batch training; returns final parameters and a (step, loss) log.

    Deterministic under a fixed seed in single-threaded execution. The
    baseline strategy performs no updates and returns the initialization
    untouched.
    """
    if not dataset:
        raise ValidationError("empty training dataset")
    dim = dataset[0].dim
    group = dataset[0].group_size
    for e in dataset:
        if e.dim != dim or e.group_size != group:
            raise DimensionMismatchError("examples disagree on dimensions or group size")
    if init_params is None:
        if m is None:
            if config.strategy == "clr" and dataset[0].query_cls_probs is not None:
                m = int(np.asarray(dataset[0].query_cls_probs).shape[0])
            else:
                raise ValidationError(
                    "train_bridge needs init_params or an explicit importance length m")
        init_params = init_bridge_params(dim, m, seed=config.seed, strategy=config.strategy)
    if config.strategy == "llr" and not init_params.has_llr:
        raise ValidationError("llr strategy requires llr parameters in the initialization")

    if config.strategy == "baseline" or config.epochs == 0:
        return init_params, []

    tensors: dict[str, np.ndarray] = {"projection": init_params.projection.copy()}
    if init_params.has_llr:
        tensors["llr_projection"] = init_params.llr_projection.copy()
        tensors["llr_bias"] = init_params.llr_bias.copy()

    adam = None
    if config.optimizer == "adam":
        adam = _Adam({k: v.shape for k, v in tensors.items()}, config.learning_rate)

    rng = np.random.default_rng(config.seed)
    log: list[tuple[int, float]] = []
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(dataset))
        for lo in range(0, len(dataset), config.batch_size):
            batch = [dataset[i] for i in order[lo:lo + config.batch_size]]
            params = _params_from(tensors)
            loss, grads = loss_gradients(batch, params, config)
            if not math.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at step {step}")
            step += 1
            if adam is not None:
                adam.step(tensors, grads)
            else:
                for key, g in grads.items():
                    tensors[key] -= config.learning_rate * g
            log.append((step, loss))
            if checkpoint_fn is not None and step % config.checkpoint_every == 0:
                checkpoint_fn(step, _params_from(tensors))
    return _params_from(tensors), log


def _params_from(tensors: dict[str, np.ndarray]) -> BridgeParameters:
    u = tensors.get("llr_projection")
    b = tensors.get("llr_bias")
    return BridgeParameters(
        projection=tensors["projection"].copy(),
        llr_projection=None if u is None else u.copy(),
        llr_bias=None if b is None else b.copy(),
    )


# ---------------------------------------------------------------------------
# gradient verification
# ---------------------------------------------------------------------------


def make_check_instance(dim: int, m: int, batch: int, group: int, strategy: str,
                        seed: int = 0, seq_len: int = 6,
                        head_mode: str = "query_only") -> tuple[list[TrainingExample], BridgeParameters]:
    """Seeded random batch plus parameters for gradient checking."""
    rng = np.random.default_rng(seed)
    examples = []
    for _ in range(batch):
        tokens = TokenSequence(tuple(int(t) for t in rng.integers(0, m, size=seq_len)))
        hidden = rng.standard_normal((seq_len, dim))
        cls_probs = softmax(rng.standard_normal(m))
        passage_tokens = tuple(
            TokenSequence(tuple(int(t) for t in rng.integers(0, m, size=seq_len)))
            for _ in range(group))
        passage_hidden = tuple(rng.standard_normal((seq_len, dim)) for _ in range(group))
        passage_cls = np.stack([softmax(rng.standard_normal(m)) for _ in range(group)])
        examples.append(TrainingExample(
            query_dense=rng.standard_normal(dim),
            passages=rng.standard_normal((group, dim)),
            query_tokens=tokens,
            query_hidden=hidden,
            query_cls_probs=cls_probs,
            passage_tokens=passage_tokens,
            passage_hidden=passage_hidden,
            passage_cls_probs=passage_cls,
        ))
    params = init_bridge_params(dim, m, seed=seed + 1, strategy=strategy)
    return examples, params


def finite_difference_gradients(examples, params: BridgeParameters,
                                config: TrainingConfig, h: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of the batch loss over every coordinate.

    Uses the same forward function as :func:`batch_loss`; the batch arrays
    that do not depend on the trainable tensors are stacked once.
    """
    stacked = _Stacked(examples, config, params.importance_len)
    tensors = {"projection": params.projection.copy()}
    if config.strategy == "llr":
        tensors["llr_projection"] = params.llr_projection.copy()
        tensors["llr_bias"] = params.llr_bias.copy()

    def loss_at() -> float:
        sims, _ = _forward_raw(stacked, tensors["projection"],
                               tensors.get("llr_projection"), tensors.get("llr_bias"),
                               config, need_cache=False)
        return contrastive_loss(sims, config.temperature)

    out: dict[str, np.ndarray] = {}
    for key, base in tensors.items():
        grad = np.zeros_like(base)
        flat = base.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.shape[0]):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_at()
            flat[idx] = orig - h
            down = loss_at()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2.0 * h)
        out[key] = grad
    return out


def relative_errors(analytic: dict[str, np.ndarray],
                    numeric: dict[str, np.ndarray]) -> dict[str, float]:
    """max |a - n| / max(|a|, |n|, floor) per tensor.

    The floor is scale-aware: max(1e-6, 1e-3 * largest gradient magnitude in
    the tensor). Coordinates far below the tensor's gradient scale are
    roundoff-limited in the finite difference (|a - n| ~ eps*|loss|/h), so a
    purely element-wise relative error there would measure noise, not
    correctness.
    """
    out = {}
    for key in analytic:
        a, n = analytic[key], numeric[key]
        scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(n))))
        floor = max(1e-6, 1e-3 * scale)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        out[key] = float(np.max(np.abs(a - n) / denom))
    return out


def gradient_check(dim: int, m: int, batch: int, group: int,
                   strategies=("slr", "llr", "clr"), seed: int = 0,
                   h: float = 1e-5, temperature: float = 0.02,
                   head_mode: str = "query_only") -> dict[str, dict[str, float]]:
    """Analytic-vs-numeric comparison on seeded instances; keyed by strategy."""
    report: dict[str, dict[str, float]] = {}
    for strategy in strategies:
        examples, params = make_check_instance(dim, m, batch, group, strategy, seed=seed,
                                               head_mode=head_mode)
        config = TrainingConfig(temperature=temperature, batch_size=batch,
                                group_size=group, strategy=strategy,
                                head_mode=head_mode, epochs=1)
        _, analytic = loss_gradients(examples, params, config)
        numeric = finite_difference_gradients(examples, params, config, h=h)
        report[strategy] = relative_errors(analytic, numeric)
    return report
