"""Gradual network alignment with shared-weight GNN embeddings and Tversky similarity."""

from .augment import AugmentState, EdgeAugmentingAligner, align_ea, augment, candidate_edges
from .bench import (EvalReport, accuracy, evaluate, precision_at_q, run_ablations,
                    run_benchmark, summarize, write_csv)
from .config import AlignConfig
from .encoder import EncoderParams, forward, init_params, load_params, save_params, train
from .errors import (ConsistencyError, ContractError, GradAlignError, NumericalError,
                     ParseError)
from .graph import (Graph, GroundTruth, erdos_renyi, load_graph, load_ground_truth,
                    make_noisy_copy, neighbors, save_graph, save_ground_truth, split_seeds)
from .matcher import GradualAligner, MatchPlan, align, rank_fallback, select_top_n
from .similarity import (NodeMapping, SimilarityMatrix, embedding_similarity, fuse,
                         jaccard_index, jaccard_similarity, tversky_index, tversky_similarity)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
