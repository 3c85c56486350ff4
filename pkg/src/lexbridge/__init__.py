"""Token-aware lexical modulation of dense retrieval embeddings."""

from .bridge import (
    EncoderFeatures,
    encode_passage,
    encode_query,
    load_bridge,
    modulate,
    patch_modulate,
    project_and_normalize,
    save_bridge,
)
from .data import load_corpus, load_queries, read_qrels, read_run, write_run
from .evaluation import MetricReport, evaluate_run, mrr_at_k, ndcg_at_k, recall_at_k
from .features import FeatureSet, assemble_training_examples, featurize_toy, load_features
from .lexrep import MlmHeadParameters, clr_weights, llr_weights, mlm_head, slr_weights
from .retrieval import DenseIndex, build_index, cosine, search_many, search_topk
from .taskgen import gen_keyword_queries, gen_pop_queries
from .tensorfile import read_tensor, write_tensor
from .toyenc import ToyEncoder, ToyEncoderConfig, make_synthetic_corpus, toy_encode, toy_mlm_probs
from .training import (
    TrainingConfig,
    TrainingExample,
    contrastive_loss,
    gradient_check,
    init_bridge_params,
    loss_gradients,
    mine_hard_negatives,
    train_bridge,
)
from .types import (
    BridgeParameters,
    HiddenStateMatrix,
    ImportanceVector,
    Passage,
    PooledEmbedding,
    QueryRecord,
    RetrievalRun,
    TokenSequence,
    Vocabulary,
)

__version__ = "0.1.0"
