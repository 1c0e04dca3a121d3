import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smellkit.baselines import (
    AsciModel,
    TreeHyperParams,
    asci_build_training,
    asci_predict,
    deserialize_tree,
    select_detector,
    serialize_tree,
    train_asci,
    tree_predict,
    tree_train,
    vote,
)
from smellkit.detectors import DETECTOR_ORDER

RULE_CARD, HIST, JDEO = DETECTOR_ORDER

PERMISSIVE = TreeHyperParams(max_features="all", max_depth=100, min_samples_leaf=1, min_samples_split=1e-4)


def test_vote_policies():
    assert vote((True, False, False), 1)
    assert not vote((False, False, False), 1)
    assert vote((True, True, False), 2)
    assert not vote((True, False, False), 2)
    assert vote((True, True, True), 3)
    assert not vote((True, True, False), 3)


def test_vote_k_range_enforced():
    with pytest.raises(ValueError):
        vote((True, True, True), 0)
    with pytest.raises(ValueError):
        vote((True, True, True), 4)
    with pytest.raises(ValueError):
        vote((True, True), 2)


@settings(max_examples=200, deadline=None)
@given(st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_vote_monotone_in_k(verdicts):
    flags = [vote(verdicts, k) for k in (1, 2, 3)]
    assert flags[0] == any(verdicts)  # k=1 is the union
    assert flags[2] == all(verdicts)  # k=3 is the intersection
    for stricter, looser in zip(flags[1:], flags):
        assert not (stricter and not looser)


def test_asci_training_single_correct_detector():
    labels = [1]
    verdicts = {RULE_CARD: [False], HIST: [True], JDEO: [False]}
    tool_labels, _ = asci_build_training(labels, verdicts)
    assert tool_labels == [HIST]


def test_asci_training_tie_broken_by_mcc():
    # instance 0: all three correct; HIST has the best MCC thanks to rows 1-2
    labels = [1, 1, 0]
    verdicts = {
        RULE_CARD: [True, False, False],
        HIST: [True, True, False],
        JDEO: [True, False, True],
    }
    tool_labels, mcc = asci_build_training(labels, verdicts)
    assert mcc[HIST] == max(mcc.values())
    assert tool_labels[0] == HIST


def test_asci_training_none_correct_falls_back_to_best():
    labels = [1, 1, 0, 0, 1]
    verdicts = {
        RULE_CARD: [True, True, False, False, False],
        HIST: [False, False, True, True, False],
        JDEO: [False, False, True, True, False],
    }
    tool_labels, mcc = asci_build_training(labels, verdicts)
    best = max(mcc, key=lambda t: mcc[t])
    assert best is RULE_CARD
    # the last instance is missed by every detector
    assert tool_labels[4] == RULE_CARD


def test_tree_single_label_training_set():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
    tree = tree_train(X, [HIST, HIST, HIST], PERMISSIVE, seed=0)
    assert tree.root.is_leaf
    assert tree.root.label is HIST


def test_tree_splits_on_separating_feature():
    X = np.array([[0.0, 5.0], [1.0, 5.0]])
    tree = tree_train(X, [RULE_CARD, HIST], PERMISSIVE, seed=0)
    assert tree.root.feature == 0
    assert 0.0 < tree.root.threshold < 1.0
    assert tree_predict(tree, [0.0, 5.0]) is RULE_CARD
    assert tree_predict(tree, [1.0, 5.0]) is HIST


def _consistent_dataset(seed, n=200, width=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, width))
    labels = [DETECTOR_ORDER[int(k)] for k in rng.integers(0, 3, size=n)]
    return X, labels


def test_unrestricted_tree_fits_training_set_perfectly():
    X, labels = _consistent_dataset(0)
    tree = tree_train(X, labels, PERMISSIVE, seed=1)
    assert all(tree_predict(tree, x) is label for x, label in zip(X, labels))


def _depth(node):
    if node.is_leaf:
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _walk(node):
    yield node
    if not node.is_leaf:
        yield from _walk(node.left)
        yield from _walk(node.right)


def test_tree_respects_structural_constraints():
    X, labels = _consistent_dataset(3, n=300)
    hp = TreeHyperParams(max_features="sqrt", max_depth=10, min_samples_leaf=2, min_samples_split=0.05)
    tree = tree_train(X, labels, hp, seed=4)
    assert _depth(tree.root) <= hp.max_depth
    for node in _walk(tree.root):
        if node.is_leaf:
            assert node.n_samples >= hp.min_samples_leaf
        else:
            assert node.n_samples >= hp.min_samples_split * len(X)
            assert len(node.candidate_features) == 2  # floor(sqrt(6))
            assert node.feature in node.candidate_features


def test_tree_deterministic():
    X, labels = _consistent_dataset(6)
    hp = TreeHyperParams(max_features="log2", max_depth=50, min_samples_leaf=1, min_samples_split=1e-3)
    a = serialize_tree(tree_train(X, labels, hp, seed=9))
    b = serialize_tree(tree_train(X, labels, hp, seed=9))
    assert a == b


def test_tree_serialization_roundtrip():
    X, labels = _consistent_dataset(7)
    tree = tree_train(X, labels, PERMISSIVE, seed=2)
    clone = deserialize_tree(serialize_tree(tree))
    for x in X[:50]:
        assert tree_predict(clone, x) is tree_predict(tree, x)


def _stub_tree(label):
    X = np.zeros((2, 3))
    return tree_train(X, [label, label], PERMISSIVE, seed=0)


def test_asci_predict_uses_selected_detector():
    model = AsciModel(trees=[_stub_tree(HIST)] * 10)
    verdicts = {RULE_CARD: False, HIST: True, JDEO: False}
    assert asci_predict(model, [0, 0, 0], verdicts) is True
    verdicts = {RULE_CARD: True, HIST: False, JDEO: True}
    assert asci_predict(model, [0, 0, 0], verdicts) is False


def test_asci_selector_tie_break_fixed_order():
    trees = [_stub_tree(HIST)] * 5 + [_stub_tree(RULE_CARD)] * 5
    assert select_detector(trees, [0, 0, 0]) is RULE_CARD


def test_asci_identical_trees_match_single_tree():
    X, labels = _consistent_dataset(8, n=60)
    tree = tree_train(X, labels, PERMISSIVE, seed=3)
    model = AsciModel(trees=[tree] * 10)
    for x in X[:20]:
        assert select_detector(model.trees, x) is tree_predict(tree, x)


def test_train_asci_builds_ten_trees():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 6))
    labels = (rng.random(40) < 0.3).astype(int).tolist()
    verdicts = {
        tool: (rng.random(40) < 0.5).tolist() for tool in DETECTOR_ORDER
    }
    model = train_asci(X, labels, verdicts, PERMISSIVE, seed=5)
    assert len(model.trees) == 10


def test_tree_hyperparams_validated():
    with pytest.raises(ValueError):
        TreeHyperParams("sqrt", 15, 1, 1e-3).validate()
    with pytest.raises(ValueError):
        TreeHyperParams("sqrt", 10, 9, 1e-3).validate()
    with pytest.raises(ValueError):
        TreeHyperParams("median", 10, 1, 1e-3).validate()
    with pytest.raises(ValueError):
        TreeHyperParams("sqrt", 10, 1, 0.5).validate()
