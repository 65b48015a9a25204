"""Decision-tree training and inference over feature vectors."""

from fibersense.classify.smoothing import smooth_labels
from fibersense.classify.tree import (
    LabeledDataset,
    LeafNode,
    SplitNode,
    TreeModel,
    best_split,
    gini,
    leaf_index,
    load_model,
    predict,
    save_model,
    train_tree,
)

__all__ = [
    "LabeledDataset",
    "LeafNode",
    "SplitNode",
    "TreeModel",
    "best_split",
    "gini",
    "leaf_index",
    "load_model",
    "predict",
    "save_model",
    "smooth_labels",
    "train_tree",
]
