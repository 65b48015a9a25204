from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibersense.classify import (
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
    smooth_labels,
    train_tree,
)
from fibersense.errors import DatasetError, ModelError

HASH = "0" * 16  # stand-in order hash for synthetic datasets


def dataset(rows):
    return LabeledDataset(rows=rows, feature_order_hash=HASH)


# --- independent oracles --------------------------------------------------


def gini_ref(labels):
    total = len(labels)
    return 1.0 - sum((labels.count(c) / total) ** 2 for c in set(labels))


def brute_force_split(rows):
    """Every (feature, midpoint) pair, scanned in tie-break order."""
    labels = [label for _, label in rows]
    parent = gini_ref(labels)
    best = None
    for f in range(len(rows[0][0])):
        values = sorted({row[0][f] for row in rows})
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = [label for v, label in rows if v[f] <= thr]
            right = [label for v, label in rows if v[f] > thr]
            if not left or not right:
                continue
            gain = parent - (
                len(left) / len(rows) * gini_ref(left)
                + len(right) / len(rows) * gini_ref(right)
            )
            if best is None or gain > best[2]:
                best = (f, thr, gain)
    if best is None or best[2] <= 1e-12:
        return None
    return best


def brute_force_impurity(rows, max_depth, min_leaf, depth=0):
    """Total weighted training impurity under the same stopping rules."""
    labels = [label for _, label in rows]
    stop = (
        len(set(labels)) == 1
        or depth >= max_depth
        or len(rows) < 2 * min_leaf
    )
    split = None if stop else brute_force_split(rows)
    if split is None:
        return len(rows) * gini_ref(labels)
    f, thr, _ = split
    left = [row for row in rows if row[0][f] <= thr]
    right = [row for row in rows if row[0][f] > thr]
    return brute_force_impurity(left, max_depth, min_leaf, depth + 1) + brute_force_impurity(
        right, max_depth, min_leaf, depth + 1
    )


def model_training_impurity(model, rows):
    buckets = {}
    for row in rows:
        buckets.setdefault(leaf_index(model, row[0]), []).append(row[1])
    return sum(len(labels) * gini_ref(labels) for labels in buckets.values())


def walk_ref(model, values, idx=0):
    node = model.nodes[idx]
    if isinstance(node, LeafNode):
        return idx
    branch = node.right if values[node.feature_index] > node.threshold else node.left
    return walk_ref(model, values, branch)


small_datasets = st.lists(
    st.tuples(
        st.lists(st.integers(-10, 10).map(float), min_size=1, max_size=4),
        st.sampled_from(["a", "b", "c"]),
    ),
    min_size=2,
    max_size=30,
).filter(lambda rows: len({len(v) for v, _ in rows}) == 1)


# --- gini -----------------------------------------------------------------


def test_gini_frozen_values():
    assert gini([10, 0, 0]) == 0.0
    assert gini([5, 5]) == 0.5
    assert gini([3, 1]) == 0.375


def test_gini_rejects_empty():
    with pytest.raises(ValueError):
        gini([0, 0, 0])


# --- best_split -----------------------------------------------------------


def test_best_split_textbook_example():
    rows = [((0.0,), "A"), ((1.0,), "A"), ((10.0,), "B"), ((11.0,), "B")]
    f, thr, gain = best_split(rows)
    assert (f, thr) == (0, 5.5)
    assert gain == pytest.approx(0.5, abs=1e-15)


def test_best_split_pure_returns_none():
    assert best_split([((0.0,), "A"), ((5.0,), "A"), ((9.0,), "A")]) is None


def test_best_split_uninformative_feature_returns_none():
    # alternating labels on one constant feature: no split exists
    assert best_split([((1.0,), "A"), ((1.0,), "B")]) is None


def test_best_split_tie_prefers_lower_feature_and_threshold():
    # both features separate perfectly; feature 0 must win
    rows = [((0.0, 0.0), "A"), ((1.0, 1.0), "B")]
    f, thr, _ = best_split(rows)
    assert (f, thr) == (0, 0.5)


@settings(max_examples=150, deadline=None)
@given(small_datasets)
def test_best_split_matches_brute_force(rows):
    got = best_split(rows)
    want = brute_force_split(rows)
    if want is None:
        assert got is None
    else:
        assert got[0] == want[0]
        assert got[1] == want[1]
        assert got[2] == pytest.approx(want[2], abs=1e-12)


# --- train_tree -----------------------------------------------------------


def test_train_single_class_gives_confident_single_leaf():
    data = dataset([((float(i),), "wind") for i in range(8)])
    model = train_tree(data)
    assert len(model.nodes) == 1
    label, confidence, dist = predict(model, [3.0], feature_order_hash=HASH)
    assert label == "wind"
    assert confidence == 1.0
    assert dist == {"wind": 1.0}


def test_train_four_rows_depth_one_pure_leaves():
    data = dataset([((0.0,), "A"), ((1.0,), "A"), ((10.0,), "B"), ((11.0,), "B")])
    model = train_tree(data, min_leaf=1)
    root = model.nodes[0]
    assert isinstance(root, SplitNode) and root.threshold == 5.5
    left, right = model.nodes[root.left], model.nodes[root.right]
    assert isinstance(left, LeafNode) and isinstance(right, LeafNode)
    assert left.counts == (2, 0) and right.counts == (0, 2)
    assert model.classes == ("A", "B")


def test_train_respects_min_leaf_stop():
    data = dataset([((0.0,), "A"), ((1.0,), "B"), ((2.0,), "A"), ((3.0,), "B")])
    model = train_tree(data, min_leaf=3)  # 4 < 6 rows: immediate leaf
    assert len(model.nodes) == 1


def test_train_respects_max_depth():
    rows = [((float(i),), "A" if i % 2 else "B") for i in range(16)]
    model = train_tree(dataset(rows), max_depth=2, min_leaf=1)
    depths = []

    def walk(idx, d):
        node = model.nodes[idx]
        if isinstance(node, LeafNode):
            depths.append(d)
        else:
            walk(node.left, d + 1)
            walk(node.right, d + 1)

    walk(0, 0)
    assert max(depths) <= 2


def test_train_is_deterministic():
    rows = [((float(i % 5), float(i % 3)), "ab"[i % 2]) for i in range(20)]
    m1 = train_tree(dataset(rows))
    m2 = train_tree(dataset(rows))
    assert m1.nodes == m2.nodes and m1.classes == m2.classes


def test_train_rejects_ragged_rows():
    with pytest.raises(DatasetError):
        train_tree(dataset([((1.0,), "A"), ((1.0, 2.0), "B")]))


def test_train_rejects_empty():
    with pytest.raises(DatasetError):
        train_tree(dataset([]))


def test_merge_rejects_hash_mismatch():
    a = LabeledDataset([((1.0,), "A")], feature_order_hash="a" * 16)
    b = LabeledDataset([((2.0,), "B")], feature_order_hash="b" * 16)
    with pytest.raises(DatasetError):
        a.merged_with(b)


@settings(max_examples=60, deadline=None)
@given(small_datasets)
def test_training_impurity_matches_brute_force(rows):
    model = train_tree(dataset(rows), max_depth=4, min_leaf=2)
    got = model_training_impurity(model, rows)
    want = brute_force_impurity(rows, max_depth=4, min_leaf=2)
    assert got == pytest.approx(want, abs=1e-12)


# --- predict --------------------------------------------------------------


def leaf_model(counts, classes):
    return TreeModel(
        classes=classes,
        feature_order_hash=HASH,
        nodes=[LeafNode(counts)],
        train_meta={"n_samples": sum(counts), "max_depth": 6, "min_leaf": 3, "seed": 0},
    )


def test_predict_laplace_smoothing_arithmetic():
    model = leaf_model((30, 0, 0), ("acoustic", "vehicle", "wind"))
    label, confidence, dist = predict(model, [0.0] * 13, feature_order_hash=HASH)
    assert label == "acoustic"
    assert confidence == pytest.approx(float(Fraction(31, 33)), abs=0)
    assert dist["vehicle"] == pytest.approx(float(Fraction(1, 33)), abs=0)


def test_predict_routing_convention_value_above_threshold_goes_right():
    model = TreeModel(
        classes=("acoustic", "wind"),
        feature_order_hash=HASH,
        nodes=[
            SplitNode(feature_index=7, threshold=90.0, left=1, right=2),
            LeafNode((0, 4)),
            LeafNode((4, 0)),
        ],
        train_meta={"n_samples": 8, "max_depth": 6, "min_leaf": 3, "seed": 0},
    )
    v = [0.0] * 13
    v[7] = 120.0  # dominant frequency above the threshold
    label, _, _ = predict(model, v, feature_order_hash=HASH)
    assert label == "acoustic"
    v[7] = 90.0  # exactly at threshold routes left
    assert predict(model, v, feature_order_hash=HASH)[0] == "wind"


def test_predict_tie_breaks_lexicographically():
    model = leaf_model((2, 2), ("alpha", "beta"))
    label, confidence, _ = predict(model, [0.0] * 13, feature_order_hash=HASH)
    assert label == "alpha"
    assert confidence == 0.5


def test_predict_rejects_hash_mismatch():
    model = leaf_model((3,), ("wind",))
    with pytest.raises(ModelError):
        predict(model, [0.0] * 13, feature_order_hash="f" * 16)


def test_predict_rejects_non_finite():
    model = leaf_model((3,), ("wind",))
    with pytest.raises(ValueError):
        predict(model, [float("nan")] * 13, feature_order_hash=HASH)


@settings(max_examples=60, deadline=None)
@given(small_datasets, st.lists(st.integers(-12, 12).map(float), min_size=4, max_size=4))
def test_predict_agrees_with_recursive_walk(rows, query):
    rows = [((v + [0.0] * 4)[:4], label) for v, label in [(list(v), l) for v, l in rows]]
    model = train_tree(dataset(rows), max_depth=5, min_leaf=1)
    assert leaf_index(model, query) == walk_ref(model, query)
    label, confidence, dist = predict(model, query, feature_order_hash=HASH)
    leaf = model.nodes[walk_ref(model, query)]
    total, k = sum(leaf.counts), len(model.classes)
    want = {c: (n + 1) / (total + k) for c, n in zip(model.classes, leaf.counts)}
    assert dist == want
    assert confidence == max(want.values())
    assert label == min(c for c, p in want.items() if p == confidence)


# --- structural invariance and serialization -------------------------------


two_feature_datasets = st.lists(
    st.tuples(
        st.tuples(st.integers(-10, 10).map(float), st.integers(-10, 10).map(float)),
        st.sampled_from(["a", "b", "c"]),
    ),
    min_size=2,
    max_size=30,
)


@settings(max_examples=40, deadline=None)
@given(two_feature_datasets)
def test_monotone_transform_preserves_routing(rows):
    def g(x):
        return x**3 + 2.0 * x  # strictly increasing everywhere

    transformed = [(tuple([g(v[0])] + list(v[1:])), label) for v, label in rows]
    m_raw = train_tree(dataset(rows), max_depth=4, min_leaf=1)
    m_tr = train_tree(dataset(transformed), max_depth=4, min_leaf=1)
    raw_leaves = [leaf_index(m_raw, v) for v, _ in rows]
    tr_leaves = [leaf_index(m_tr, v) for v, _ in transformed]
    # same partition of training rows into leaves
    groups_raw = {}
    groups_tr = {}
    for i, (a, b) in enumerate(zip(raw_leaves, tr_leaves)):
        groups_raw.setdefault(a, set()).add(i)
        groups_tr.setdefault(b, set()).add(i)
    assert sorted(map(sorted, groups_raw.values())) == sorted(map(sorted, groups_tr.values()))


@settings(max_examples=40, deadline=None)
@given(small_datasets, st.data())
def test_save_load_round_trip(tmp_path_factory, rows, data):
    model = train_tree(dataset(rows), max_depth=4, min_leaf=1)
    path = tmp_path_factory.mktemp("models") / "tree.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.nodes == model.nodes
    assert loaded.classes == model.classes
    assert loaded.train_meta == model.train_meta
    n_f = len(rows[0][0])
    query = data.draw(st.lists(st.floats(-20, 20), min_size=n_f, max_size=n_f))
    assert predict(loaded, query, HASH) == predict(model, query, HASH)


def test_load_rejects_tampered_file(tmp_path):
    model = train_tree(dataset([((0.0,), "A"), ((9.0,), "B")] * 4), min_leaf=1)
    path = tmp_path / "tree.json"
    save_model(model, path)
    text = path.read_text().replace('"l": 1', '"l": 99')
    path.write_text(text)
    with pytest.raises(ModelError):
        load_model(path)
    path.write_text("not json")
    with pytest.raises(ModelError):
        load_model(path)


def test_validate_rejects_cycles_and_orphans():
    cyclic = TreeModel(
        classes=("a", "b"),
        feature_order_hash=HASH,
        nodes=[SplitNode(0, 1.0, 1, 0), LeafNode((1, 1))],
        train_meta={"max_depth": 6},
    )
    with pytest.raises(ModelError):
        cyclic.validate()
    orphaned = TreeModel(
        classes=("a",),
        feature_order_hash=HASH,
        nodes=[LeafNode((1,)), LeafNode((2,))],
        train_meta={"max_depth": 6},
    )
    with pytest.raises(ModelError):
        orphaned.validate()


# --- smoothing --------------------------------------------------------------


def test_smooth_labels_examples():
    assert smooth_labels([("A", 0.9), ("A", 0.8), ("A", 0.7)]) == "A"
    assert smooth_labels([("A", 1), ("B", 1), ("A", 1), ("B", 1), ("B", 1)]) == "B"
    assert smooth_labels([("A", 1), ("B", 1)]) == "B"
    assert smooth_labels([("B", 1), ("A", 1)]) == "A"


def test_smooth_labels_window_limits_vote():
    history = [("A", 1)] * 10 + [("B", 1)] * 3
    assert smooth_labels(history, window=5) == "B"
    assert smooth_labels(history, window=13) == "A"


def test_smooth_labels_tie_goes_to_most_recent_tied_label():
    # C is most recent overall but not among the leaders
    history = [("A", 1), ("A", 1), ("B", 1), ("B", 1), ("C", 1)]
    assert smooth_labels(history, window=5) == "B"


def test_smooth_labels_empty_rejected():
    with pytest.raises(ValueError):
        smooth_labels([])
