"""Competing ensembles: the policy-k vote and the detector-selecting tree.

The tree is CART with Gini impurity over the three detector labels. Per-node
feature subsampling, the fractional split threshold, the leaf-size floor and
the depth cap follow the tuning ranges; nodes keep their sample counts and
sampled candidate features so the constraints stay inspectable after training.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .detectors import DETECTOR_ORDER, DetectorTool
from .evaluation import ConfusionMatrix, scores

_ORDER_INDEX = {tool: i for i, tool in enumerate(DETECTOR_ORDER)}


def vote(verdicts, k: int) -> bool:
    """True when at least k of the three detector verdicts are true."""
    verdicts = tuple(verdicts)
    if len(verdicts) != 3:
        raise ValueError(f"expected 3 verdicts, got {len(verdicts)}")
    if not 1 <= k <= 3:
        raise ValueError(f"vote policy k must be in [1, 3], got {k}")
    return sum(bool(v) for v in verdicts) >= k


# ---------------------------------------------------------------------------
# ASCI training-set construction
# ---------------------------------------------------------------------------


def detector_training_mcc(labels, verdicts_by_tool: dict[DetectorTool, list[bool]]) -> dict[DetectorTool, float]:
    result = {}
    for tool, verdicts in verdicts_by_tool.items():
        result[tool] = scores(ConfusionMatrix.from_predictions(labels, verdicts)).mcc
    return result


def asci_build_training(
    labels: list[int], verdicts_by_tool: dict[DetectorTool, list[bool]]
) -> tuple[list[DetectorTool], dict[DetectorTool, float]]:
    """Label every instance with the detector that classified it correctly.

    Ties among several correct detectors go to the one with the higher
    training MCC, then to the fixed RULE_CARD < HIST < JDEODORANT order;
    when no detector is correct the overall best detector is used.
    """
    mcc_by_tool = detector_training_mcc(labels, verdicts_by_tool)
    ranked = sorted(DETECTOR_ORDER, key=lambda t: (-mcc_by_tool[t], _ORDER_INDEX[t]))
    tool_labels = []
    for index, label in enumerate(labels):
        correct = [t for t in ranked if bool(verdicts_by_tool[t][index]) == bool(label)]
        tool_labels.append(correct[0] if correct else ranked[0])
    return tool_labels, mcc_by_tool


# ---------------------------------------------------------------------------
# CART decision tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeHyperParams:
    max_features: str  # "sqrt" | "log2" | "all"
    max_depth: int
    min_samples_leaf: int
    min_samples_split: float  # fraction of the training-set size

    def validate(self):
        if self.max_features not in ("sqrt", "log2", "all"):
            raise ValueError(f"max_features must be sqrt|log2|all, got {self.max_features!r}")
        if self.max_depth not in range(10, 101, 10):
            raise ValueError(f"max_depth must be one of 10..100 by 10, got {self.max_depth}")
        if not 1 <= self.min_samples_leaf <= 5:
            raise ValueError(f"min_samples_leaf must be in [1, 5], got {self.min_samples_leaf}")
        if not 1e-4 <= self.min_samples_split <= 1e-1:
            raise ValueError(
                f"min_samples_split must be in [1e-4, 1e-1], got {self.min_samples_split}"
            )

    def to_dict(self) -> dict:
        return {
            "max_features": self.max_features,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_samples_split": self.min_samples_split,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeHyperParams":
        return cls(
            max_features=data["max_features"],
            max_depth=int(data["max_depth"]),
            min_samples_leaf=int(data["min_samples_leaf"]),
            min_samples_split=float(data["min_samples_split"]),
        )


@dataclass
class TreeNode:
    n_samples: int
    label: DetectorTool | None = None  # leaves only
    feature: int | None = None  # internal nodes only
    threshold: float | None = None
    candidate_features: tuple[int, ...] | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass
class DecisionTree:
    root: TreeNode
    n_features: int
    hyper: TreeHyperParams


def _gini(counts) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _majority(counts) -> DetectorTool:
    best = int(np.argmax(counts))  # argmax keeps the first max: the fixed order
    return DETECTOR_ORDER[best]


def _candidate_count(max_features: str, n_features: int) -> int:
    if max_features == "sqrt":
        return max(1, int(math.isqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features)))
    return n_features


def _best_split(X, y_codes, rows, candidates, min_samples_leaf):
    """Greedy Gini split over the candidate features; thresholds are midpoints
    of consecutive distinct values. Returns (gain, feature, threshold)."""
    node_counts = np.bincount(y_codes[rows], minlength=3)
    parent = _gini(node_counts)
    n = len(rows)
    best = (0.0, None, None)
    for feature in candidates:
        column = X[rows, feature]
        order = np.argsort(column, kind="stable")
        sorted_vals = column[order]
        sorted_codes = y_codes[rows][order]
        left_counts = np.zeros(3)
        for split_at in range(1, n):
            left_counts[sorted_codes[split_at - 1]] += 1
            if sorted_vals[split_at] == sorted_vals[split_at - 1]:
                continue
            n_left = split_at
            n_right = n - split_at
            if n_left < min_samples_leaf or n_right < min_samples_leaf:
                continue
            right_counts = node_counts - left_counts
            weighted = (n_left * _gini(left_counts) + n_right * _gini(right_counts)) / n
            gain = parent - weighted
            if gain > best[0]:
                threshold = (sorted_vals[split_at - 1] + sorted_vals[split_at]) / 2.0
                best = (gain, feature, threshold)
    return best


def tree_train(X, tool_labels: list[DetectorTool], hp: TreeHyperParams, seed) -> DecisionTree:
    """CART over detector labels; deterministic given the seed.

    A node splits only when it is deep enough, holds at least
    min_samples_split * |training set| samples, has an impurity-reducing
    split, and both children keep min_samples_leaf samples.
    """
    hp.validate()
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("empty training set")
    if len(X) != len(tool_labels):
        raise ValueError("feature/label length mismatch")
    y_codes = np.array([_ORDER_INDEX[t] for t in tool_labels], dtype=np.intp)
    n_features = X.shape[1]
    min_split_count = hp.min_samples_split * len(X)
    rng = np.random.default_rng(seed)
    k = _candidate_count(hp.max_features, n_features)

    def build(rows: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y_codes[rows], minlength=3)
        node = TreeNode(n_samples=len(rows))
        pure = int((counts > 0).sum()) <= 1
        if depth >= hp.max_depth or pure or len(rows) < min_split_count or len(rows) < 2:
            node.label = _majority(counts)
            return node
        if hp.max_features == "all":
            candidates = tuple(range(n_features))
        else:
            candidates = tuple(sorted(rng.choice(n_features, size=k, replace=False).tolist()))
        gain, feature, threshold = _best_split(X, y_codes, rows, candidates, hp.min_samples_leaf)
        if feature is None or gain <= 0.0:
            node.label = _majority(counts)
            return node
        node.feature = feature
        node.threshold = threshold
        node.candidate_features = candidates
        mask = X[rows, feature] <= threshold
        node.left = build(rows[mask], depth + 1)
        node.right = build(rows[~mask], depth + 1)
        return node

    root = build(np.arange(len(X)), 0)
    return DecisionTree(root=root, n_features=n_features, hyper=hp)


def tree_predict(tree: DecisionTree, x) -> DetectorTool:
    x = np.asarray(x, dtype=np.float64)
    node = tree.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


# ---------------------------------------------------------------------------
# Boosted selector
# ---------------------------------------------------------------------------

ASCI_ENSEMBLE_SIZE = 10


@dataclass
class AsciModel:
    trees: list[DecisionTree] = field(default_factory=list)

    def __post_init__(self):
        if len(self.trees) != ASCI_ENSEMBLE_SIZE:
            raise ValueError(f"selector ensemble needs exactly {ASCI_ENSEMBLE_SIZE} trees")


def train_asci(X, labels: list[int], verdicts_by_tool, hp: TreeHyperParams, seed) -> AsciModel:
    tool_labels, _ = asci_build_training(labels, verdicts_by_tool)
    trees = [tree_train(X, tool_labels, hp, seed=(seed, index)) for index in range(ASCI_ENSEMBLE_SIZE)]
    return AsciModel(trees=trees)


def select_detector(trees: list[DecisionTree], x) -> DetectorTool:
    """Plurality vote of the trees; ties resolve in the fixed detector order."""
    counts = {tool: 0 for tool in DETECTOR_ORDER}
    for tree in trees:
        counts[tree_predict(tree, x)] += 1
    return min(counts, key=lambda t: (-counts[t], _ORDER_INDEX[t]))


def asci_predict(model: AsciModel, x, verdicts_for_instance: dict[DetectorTool, bool]) -> bool:
    """The verdict of the detector the trees select for this instance."""
    return bool(verdicts_for_instance[select_detector(model.trees, x)])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"n_samples": node.n_samples, "label": node.label.value}
    return {
        "n_samples": node.n_samples,
        "feature": node.feature,
        "threshold": node.threshold,
        "candidate_features": list(node.candidate_features),
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> TreeNode:
    if "label" in data:
        return TreeNode(n_samples=data["n_samples"], label=DetectorTool(data["label"]))
    return TreeNode(
        n_samples=data["n_samples"],
        feature=data["feature"],
        threshold=data["threshold"],
        candidate_features=tuple(data["candidate_features"]),
        left=_node_from_dict(data["left"]),
        right=_node_from_dict(data["right"]),
    )


def serialize_tree(tree: DecisionTree) -> str:
    return json.dumps(
        {
            "n_features": tree.n_features,
            "hyper_params": tree.hyper.to_dict(),
            "root": _node_to_dict(tree.root),
        }
    )


def deserialize_tree(text: str) -> DecisionTree:
    data = json.loads(text)
    return DecisionTree(
        root=_node_from_dict(data["root"]),
        n_features=data["n_features"],
        hyper=TreeHyperParams.from_dict(data["hyper_params"]),
    )
