"""Structure-aware Minimum Bayes Risk selection over candidate generations."""

__version__ = "0.1.0"

from .clustering import ClusterAssignment, assignment_from_labels, kmeans, select_k, silhouette
from .corpus import (
    Candidate,
    Corpus,
    CorpusError,
    OutcomeSpace,
    SynthConfig,
    generate_synthetic,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .engine import (
    MbrResult,
    MixtureSpec,
    cluster_mbr,
    conditional_mbr,
    cutoff_mbr,
    cutoff_transform,
    demo_continuous,
    embedding_mbr,
    embedding_weighted_matrix,
    expected_utilities,
    mbr_select,
)
from .methods import MethodConfig, apply_method
from .metrics import EvalReport, cluster_optimality, corc, evaluate, spearman
from .tuning import SweepConfig, SweepResult, sweep_cosine_threshold, sweep_cutoff
from .utility import (
    EmbeddingSet,
    MatrixFormatError,
    UtilityMatrix,
    build_utility_matrix,
    char_ngram_f,
    load_embeddings,
    load_matrix,
    normalize_embeddings,
    save_embeddings,
    save_matrix,
    token_f1,
)
