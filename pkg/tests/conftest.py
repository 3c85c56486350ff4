import numpy as np
import pytest

from lexbridge.toyenc import CorpusShape, ToyEncoderConfig, make_synthetic_corpus, synthetic_vocab_size


@pytest.fixture(scope="session")
def small_corpus():
    """100 passages of 300 words, all long enough for every span length."""
    shape = CorpusShape()
    config = ToyEncoderConfig(
        vocab_size=synthetic_vocab_size(100, shape), dim=8, seed=11)
    passages, tokens, vocab = make_synthetic_corpus(100, 300, config, shape)
    return passages, tokens, vocab


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
