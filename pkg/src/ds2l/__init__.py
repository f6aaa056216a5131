"""Discriminative supervised subspace learning for cross-modal retrieval."""

from .data import Dataset, FeatureMatrix, LabelMatrix, generate_synthetic, split, zero_center
from .model import Hyperparams, TrainedModel, load_model, project, save_model, train
from .retrieval import evaluate_projections, mean_average_precision, rank_all

__all__ = [
    "Dataset", "FeatureMatrix", "LabelMatrix", "generate_synthetic", "split", "zero_center",
    "Hyperparams", "TrainedModel", "load_model", "project", "save_model", "train",
    "evaluate_projections", "mean_average_precision", "rank_all",
]
