"""CART-style decision tree, written out in full rather than wrapping a
library so that split selection, tie-breaking, and the stored format are
all pinned down and testable.

Conventions fixed here:

* candidate thresholds are midpoints between consecutive distinct
  feature values; a query routes right when value > threshold;
* the best split maximizes Gini gain, ties resolved by lower feature
  index, then lower threshold; gains at or below 1e-12 count as none;
* a node becomes a leaf when it is pure, at max depth, smaller than
  2 * min_leaf rows, or has no positive-gain split;
* classes are stored sorted, and leaf counts align with that order;
* predicted distributions are Laplace-smoothed: (count + 1) over
  (total + n_classes).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from fibersense.errors import DatasetError, ModelError
from fibersense.features.vector import FEATURE_ORDER_HASH

MIN_GAIN = 1e-12
MODEL_FORMAT = "fibersense-tree-v1"


@dataclass(frozen=True)
class SplitNode:
    feature_index: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class LeafNode:
    counts: tuple


@dataclass
class LabeledDataset:
    """Rows of (feature sequence, label) sharing one feature order."""

    rows: list
    feature_order_hash: str = FEATURE_ORDER_HASH

    @classmethod
    def from_dataset_rows(cls, dataset_rows, feature_order_hash: str = FEATURE_ORDER_HASH):
        return cls(
            rows=[(row.features, row.label) for row in dataset_rows],
            feature_order_hash=feature_order_hash,
        )

    def merged_with(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.feature_order_hash != self.feature_order_hash:
            raise DatasetError(
                "cannot merge datasets with different feature order hashes "
                f"({self.feature_order_hash} vs {other.feature_order_hash})"
            )
        return LabeledDataset(self.rows + other.rows, self.feature_order_hash)

    def classes(self) -> tuple:
        return tuple(sorted({label for _, label in self.rows}))

    def validate(self) -> None:
        if not self.rows:
            raise DatasetError("dataset has no rows")
        arity = len(self.rows[0][0])
        for i, (features, label) in enumerate(self.rows):
            if len(features) != arity:
                raise DatasetError(f"row {i} has {len(features)} features, expected {arity}")
            if not all(math.isfinite(v) for v in features):
                raise DatasetError(f"row {i} contains non-finite features")
            if not isinstance(label, str) or not label:
                raise DatasetError(f"row {i} has invalid label {label!r}")


@dataclass
class TreeModel:
    classes: tuple
    feature_order_hash: str
    nodes: list = field(default_factory=list)
    train_meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.nodes:
            raise ModelError("model has no nodes")
        if not self.classes:
            raise ModelError("model has no classes")
        n = len(self.nodes)
        max_depth = self.train_meta.get("max_depth", n)
        visited = set()
        stack = [(0, 0)]
        while stack:
            idx, depth = stack.pop()
            if not 0 <= idx < n:
                raise ModelError(f"node index {idx} out of range")
            if idx in visited:
                raise ModelError(f"node {idx} reachable twice; tree is not a tree")
            visited.add(idx)
            node = self.nodes[idx]
            if isinstance(node, SplitNode):
                if depth >= max_depth:
                    raise ModelError(f"split node {idx} exceeds max depth {max_depth}")
                stack.append((node.left, depth + 1))
                stack.append((node.right, depth + 1))
            elif isinstance(node, LeafNode):
                if len(node.counts) != len(self.classes):
                    raise ModelError(f"leaf {idx} counts do not align with classes")
                if any(c < 0 for c in node.counts) or sum(node.counts) == 0:
                    raise ModelError(f"leaf {idx} has invalid counts {node.counts}")
            else:
                raise ModelError(f"node {idx} has unknown type {type(node).__name__}")
        if visited != set(range(n)):
            raise ModelError("node array contains unreachable nodes")


def gini(counts) -> float:
    """Gini impurity 1 - sum((c/total)^2) of nonnegative class counts."""
    total = sum(counts)
    if total <= 0:
        raise ValueError("gini needs at least one counted sample")
    return 1.0 - sum((c / total) ** 2 for c in counts)


def _label_counts(rows, classes) -> tuple:
    index = {c: i for i, c in enumerate(classes)}
    counts = [0] * len(classes)
    for _, label in rows:
        counts[index[label]] += 1
    return tuple(counts)


def best_split(rows):
    """Best (feature_index, threshold, gain) over all midpoint splits.

    Returns None when no split improves Gini by more than MIN_GAIN.
    """
    if len(rows) < 2:
        return None
    classes = sorted({label for _, label in rows})
    parent = gini(_label_counts(rows, classes))
    n = len(rows)
    n_features = len(rows[0][0])
    best = None

    for f in range(n_features):
        values = sorted({row[0][f] for row in rows})
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = [row for row in rows if row[0][f] <= thr]
            right = [row for row in rows if row[0][f] > thr]
            if not left or not right:
                continue
            weighted = (
                len(left) / n * gini(_label_counts(left, classes))
                + len(right) / n * gini(_label_counts(right, classes))
            )
            gain = parent - weighted
            if best is None or gain > best[2]:
                best = (f, thr, gain)

    if best is None or best[2] <= MIN_GAIN:
        return None
    return best


def train_tree(
    data: LabeledDataset,
    max_depth: int = 6,
    min_leaf: int = 3,
    seed: int = 0,
) -> TreeModel:
    """Greedy recursive training; deterministic for a given row order."""
    data.validate()
    classes = data.classes()
    nodes: list = []

    def build(rows, depth) -> int:
        counts = _label_counts(rows, classes)
        is_pure = sum(1 for c in counts if c > 0) == 1
        if is_pure or depth >= max_depth or len(rows) < 2 * min_leaf:
            nodes.append(LeafNode(counts))
            return len(nodes) - 1
        found = best_split(rows)
        if found is None:
            nodes.append(LeafNode(counts))
            return len(nodes) - 1
        f, thr, _ = found
        idx = len(nodes)
        nodes.append(None)  # reserve; children indices follow
        left = build([row for row in rows if row[0][f] <= thr], depth + 1)
        right = build([row for row in rows if row[0][f] > thr], depth + 1)
        nodes[idx] = SplitNode(feature_index=f, threshold=thr, left=left, right=right)
        return idx

    build(data.rows, 0)
    model = TreeModel(
        classes=classes,
        feature_order_hash=data.feature_order_hash,
        nodes=nodes,
        train_meta={
            "n_samples": len(data.rows),
            "max_depth": max_depth,
            "min_leaf": min_leaf,
            "seed": seed,
        },
    )
    model.validate()
    return model


def leaf_index(model: TreeModel, features) -> int:
    """Index of the leaf a feature vector routes to."""
    idx = 0
    node = model.nodes[0]
    while isinstance(node, SplitNode):
        idx = node.right if features[node.feature_index] > node.threshold else node.left
        node = model.nodes[idx]
    return idx


def predict(model: TreeModel, features, feature_order_hash: str = FEATURE_ORDER_HASH):
    """Return (label, confidence, per-class distribution) for one vector."""
    if feature_order_hash != model.feature_order_hash:
        raise ModelError(
            "feature order mismatch: model was trained with "
            f"{model.feature_order_hash}, query uses {feature_order_hash}"
        )
    values = [float(v) for v in features]
    if not all(math.isfinite(v) for v in values):
        raise ValueError("feature vector contains non-finite values")

    leaf = model.nodes[leaf_index(model, values)]
    total = sum(leaf.counts)
    k = len(model.classes)
    probs = [(c + 1) / (total + k) for c in leaf.counts]

    best_i = 0
    for i in range(1, k):
        if probs[i] > probs[best_i]:
            best_i = i
    distribution = dict(zip(model.classes, probs))
    return model.classes[best_i], probs[best_i], distribution


def _node_to_dict(node) -> dict:
    if isinstance(node, SplitNode):
        return {"f": node.feature_index, "thr": node.threshold, "l": node.left, "r": node.right}
    return {"counts": list(node.counts)}


def _node_from_dict(obj: dict):
    if "counts" in obj:
        return LeafNode(tuple(int(c) for c in obj["counts"]))
    try:
        return SplitNode(
            feature_index=int(obj["f"]),
            threshold=float(obj["thr"]),
            left=int(obj["l"]),
            right=int(obj["r"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed node object {obj!r}") from exc


def save_model(model: TreeModel, path) -> None:
    model.validate()
    payload = {
        "format": MODEL_FORMAT,
        "classes": list(model.classes),
        "feature_order_hash": model.feature_order_hash,
        "train_meta": model.train_meta,
        "nodes": [_node_to_dict(n) for n in model.nodes],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> TreeModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path} is not a {MODEL_FORMAT} file")
    try:
        model = TreeModel(
            classes=tuple(payload["classes"]),
            feature_order_hash=str(payload["feature_order_hash"]),
            nodes=[_node_from_dict(obj) for obj in payload["nodes"]],
            train_meta=dict(payload["train_meta"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model file {path} is missing fields: {exc}") from exc
    model.validate()
    return model
