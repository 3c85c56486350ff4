import numpy as np
import pytest

from lexbridge.errors import ValidationError
from lexbridge.toyenc import (
    CorpusShape,
    ToyEncoder,
    ToyEncoderConfig,
    make_synthetic_corpus,
    synthetic_vocab_size,
    toy_encode,
    toy_mlm_probs,
)
from lexbridge.types import TokenSequence


class TestToyEncode:
    def test_single_token_pooled_equals_hidden(self):
        config = ToyEncoderConfig(vocab_size=10, dim=4, seed=3)
        hidden, pooled = toy_encode(TokenSequence((5,)), config)
        assert np.array_equal(pooled.values, hidden.rows[0])
        assert np.array_equal(hidden.cls_state, pooled.values)

    def test_deterministic(self):
        config = ToyEncoderConfig(vocab_size=10, dim=4, seed=3)
        h1, p1 = toy_encode(TokenSequence((1, 2, 3)), config)
        h2, p2 = toy_encode(TokenSequence((1, 2, 3)), config)
        assert np.array_equal(h1.rows, h2.rows)
        assert np.array_equal(p1.values, p2.values)

    def test_permutation_equal_without_offsets(self):
        config = ToyEncoderConfig(vocab_size=10, dim=4, seed=3, position_offsets=False)
        _, p_ab = toy_encode(TokenSequence((1, 2)), config)
        _, p_ba = toy_encode(TokenSequence((2, 1)), config)
        # oracle: mean of the two table rows directly
        table = ToyEncoder(config).table
        assert np.allclose(p_ab.values, (table[1] + table[2]) / 2.0, atol=1e-15)
        assert np.allclose(p_ab.values, p_ba.values, atol=1e-15)

    def test_offsets_shift_hidden_rows_not_pooled_mean(self):
        # offsets are per position, so the pooled mean is order-invariant,
        # but individual hidden rows are not
        config = ToyEncoderConfig(vocab_size=10, dim=4, seed=3)
        h_ab, p_ab = toy_encode(TokenSequence((1, 2)), config)
        h_ba, p_ba = toy_encode(TokenSequence((2, 1)), config)
        assert np.allclose(p_ab.values, p_ba.values, atol=1e-15)
        assert not np.allclose(h_ab.rows[0], h_ba.rows[1])

    def test_offset_mean_depends_on_length(self):
        # the pooled vector of identical tokens shifts with sequence length
        config = ToyEncoderConfig(vocab_size=10, dim=4, seed=3)
        _, p_short = toy_encode(TokenSequence((4, 4)), config)
        _, p_long = toy_encode(TokenSequence((4,) * 50), config)
        assert not np.allclose(p_short.values, p_long.values)

    def test_repeated_token_mean_pooling(self):
        config = ToyEncoderConfig(vocab_size=6, dim=4, seed=1, position_offsets=False)
        _, pooled = toy_encode(TokenSequence((3, 3, 3, 3)), config)
        assert np.allclose(pooled.values, ToyEncoder(config).table[3], atol=1e-15)

    def test_empty_sequence_rejected(self):
        config = ToyEncoderConfig(vocab_size=6, dim=4, seed=1)
        with pytest.raises(ValidationError):
            toy_encode(TokenSequence(()), config)

    def test_out_of_vocab_rejected(self):
        config = ToyEncoderConfig(vocab_size=6, dim=4, seed=1)
        with pytest.raises(ValidationError):
            toy_encode(TokenSequence((6,)), config)


class TestToyMlm:
    def test_zero_state_uniform(self):
        config = ToyEncoderConfig(vocab_size=8, dim=4, seed=2)
        probs = toy_mlm_probs(np.zeros(4), config)
        assert np.allclose(probs, 1.0 / 8)

    def test_matvec_softmax_oracle(self, rng):
        config = ToyEncoderConfig(vocab_size=20, dim=6, seed=2)
        cls = rng.standard_normal(6)
        probs = toy_mlm_probs(cls, config)
        table = ToyEncoder(config).table
        logits = table @ cls
        e = np.exp(logits - logits.max())
        assert np.allclose(probs, e / e.sum(), atol=1e-12)

    def test_always_a_distribution(self):
        config = ToyEncoderConfig(vocab_size=12, dim=5, seed=0)
        encoder = ToyEncoder(config)
        rng = np.random.default_rng(99)
        for _ in range(200):
            probs = encoder.mlm_probs(rng.standard_normal(5) * rng.uniform(0.1, 30))
            assert probs.min() >= 0
            assert probs.sum() == pytest.approx(1.0, abs=1e-6)

    def test_dimension_mismatch(self):
        config = ToyEncoderConfig(vocab_size=8, dim=4, seed=2)
        with pytest.raises(ValidationError):
            toy_mlm_probs(np.zeros(5), config)


class TestSyntheticCorpus:
    def config(self, n, shape=CorpusShape()):
        return ToyEncoderConfig(
            vocab_size=synthetic_vocab_size(n, shape), dim=4, seed=7)

    def test_counts_and_word_counts(self):
        passages, tokens, vocab = make_synthetic_corpus(50, 120, self.config(50))
        assert len(passages) == 50
        assert all(p.word_count == 120 for p in passages)
        assert all(len(tokens[p.id]) == 120 for p in passages)

    def test_same_seed_identical(self):
        a = make_synthetic_corpus(20, 60, self.config(20))
        b = make_synthetic_corpus(20, 60, self.config(20))
        assert [p.text for p in a[0]] == [p.text for p in b[0]]

    def test_distinct_seeds_differ(self):
        shape = CorpusShape()
        c1 = ToyEncoderConfig(vocab_size=synthetic_vocab_size(20, shape), dim=4, seed=7)
        c2 = ToyEncoderConfig(vocab_size=synthetic_vocab_size(20, shape), dim=4, seed=8)
        a = make_synthetic_corpus(20, 60, c1)
        b = make_synthetic_corpus(20, 60, c2)
        assert any(pa.text != pb.text for pa, pb in zip(a[0], b[0]))

    def test_text_matches_tokens_via_vocab(self):
        passages, tokens, vocab = make_synthetic_corpus(10, 40, self.config(10))
        for p in passages:
            ids = [vocab.index()[w] for w in p.text.split()]
            assert tuple(ids) == tokens[p.id].ids

    def test_vocab_too_small_rejected(self):
        with pytest.raises(ValidationError):
            make_synthetic_corpus(
                50, 60, ToyEncoderConfig(vocab_size=10, dim=4, seed=7))
