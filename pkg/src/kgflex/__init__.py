"""Knowledge-graph feature factorization recommender (KGFlex)."""

__version__ = "0.1.0"

from .dataset import InteractionLog, Split, holdout_split, k_core, load_ratings
from .entropy import binary_entropy, compute_all_weights, compute_user_weights, information_gain
from .graph import Feature, FeatureCatalog, KnowledgeGraph, build_catalog, explore, load_triples
from .model import KGFlexModel, TrainConfig, bpr_step, init_model, train
from .recommend import RecommendationList, recommend_all, recommend_top_k

__all__ = [
    "Feature", "FeatureCatalog", "InteractionLog", "KGFlexModel", "KnowledgeGraph",
    "RecommendationList", "Split", "TrainConfig", "binary_entropy", "bpr_step",
    "build_catalog", "compute_all_weights", "compute_user_weights", "explore",
    "holdout_split", "information_gain", "init_model", "k_core", "load_ratings",
    "load_triples", "recommend_all", "recommend_top_k", "train",
]
