import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crfdspam.classifiers import (
    DEFAULT_SPECS,
    ClassifierSpec,
    KNNModel,
    LogisticModel,
    TreeModel,
    fit_model,
    gini,
    parse_spec,
    parse_specs,
    predict_labels,
    predict_scores,
)
from crfdspam.data import LabeledMatrix
from crfdspam.features import build_matrix
from tests.oracles import exhaustive_split


def matrix(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return LabeledMatrix(ids=tuple(map(str, range(len(X)))), X=X, y=np.asarray(y),
                         feature_names=tuple(f"f{j}" for j in range(X.shape[1])))


def blobs(seed=0, n=100):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    centers = np.where(y[:, None] == 1, [2.0, 2.0], [-2.0, -2.0])
    X = centers + rng.uniform(-1, 1, size=(n, 2))
    return X, y


def test_spec_parsing():
    s = parse_spec("cart:depth=10")
    assert s == ClassifierSpec("cart", {"max_depth": 10})
    assert s.name == "cart(max_depth=10)" and s.label == "DT(Dep=10)"
    specs = parse_specs("cart:depth=10,min_split=4;knn:k=5,lda")
    assert [x.name for x in specs] == ["cart(max_depth=10,min_samples_split=4)", "knn(k=5)", "lda"]
    with pytest.raises(ValueError):
        parse_spec("cart:depth")
    with pytest.raises(ValueError):
        ClassifierSpec("svm").check()
    with pytest.raises(ValueError):
        ClassifierSpec("knn", {"k": 0}).check()
    with pytest.raises(ValueError):
        ClassifierSpec("cart", {"gamma": 1.0}).check()


def test_cart_single_midpoint_split():
    m = matrix([0, 1, 10, 11], [0, 0, 1, 1])
    tree = fit_model(ClassifierSpec("cart", {"max_depth": 2}), m)
    assert tree.node_count == 3
    assert tree.threshold[0] == 5.5
    assert np.array_equal(tree.predict_labels(m.X), m.y)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(st.floats(-5, 5, width=16), st.floats(-5, 5, width=16)), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)))
def test_cart_root_split_is_exhaustive_optimum(data):
    rows, labels = data
    tree = fit_model(ClassifierSpec("cart", {"max_depth": 1}), matrix(rows, labels))
    want = exhaustive_split(rows, labels)
    if want is None:
        assert tree.node_count == 1
    else:
        assert (int(tree.feature[0]), float(tree.threshold[0])) == want[:2]


def test_tree_invariants(small_synth):
    m = build_matrix(small_synth)
    for depth in (1, 3, 10):
        tree = fit_model(ClassifierSpec("cart", {"max_depth": depth}), m)
        assert tree.max_depth <= depth
        np.testing.assert_allclose(tree.leaf_distribution().sum(axis=1), 1.0)
        leaves = tree.left < 0
        assert tree.n_samples[leaves].sum() == len(m)
        for node in np.flatnonzero(~leaves):
            assert tree.n_samples[node] == tree.n_samples[tree.left[node]] + tree.n_samples[tree.right[node]]


def test_cart_leaf_score_is_proportion():
    m = matrix([0, 0, 0, 0], [0, 0, 0, 1])
    tree = fit_model(ClassifierSpec("cart"), m)
    assert tree.node_count == 1
    assert tree.predict_scores([[0.0]]).tolist() == [0.25]


def test_cart_single_class_is_constant():
    m = matrix(np.arange(10.0), np.zeros(10, dtype=int))
    tree = fit_model(ClassifierSpec("cart"), m)
    assert tree.predict_labels(np.array([[-3.0], [50.0]])).tolist() == [0, 0]


def test_gini():
    assert gini((5, 5)) == 0.5
    assert gini((4, 0)) == 0.0
    assert gini((0, 0)) == 0.0


def test_knn_k1_reproduces_training_labels(small_synth):
    m = build_matrix(small_synth)
    model = fit_model(ClassifierSpec("knn", {"k": 1}), m)
    assert np.array_equal(model.predict_labels(m.X), m.y)


def test_knn_vote_fraction():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [100.0]])
    model = KNNModel(X=X, y=np.array([1, 1, 1, 0, 0, 0]), k=5)
    assert model.predict_scores(np.array([[0.0]])).tolist() == [0.6]


def test_knn_even_split_is_class_one():
    model = KNNModel(X=np.array([[0.0], [1.0], [3.0], [4.0]]), y=np.array([0, 1, 1, 0]), k=4)
    assert model.predict_labels(np.array([[0.1], [3.9]])).tolist() == [1, 1]


def test_knn_k_larger_than_training_set():
    model = fit_model(ClassifierSpec("knn", {"k": 10}), matrix([0, 1, 2], [0, 1, 1]))
    assert model.k_eff == 3
    assert model.predict_scores([[5.0]]).tolist() == pytest.approx([2 / 3])


def test_knn_permutation_invariant():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(int)
    q = rng.normal(size=(25, 3))
    perm = rng.permutation(60)
    a = fit_model(ClassifierSpec("knn", {"k": 5}), matrix(X, y)).predict_scores(q)
    b = fit_model(ClassifierSpec("knn", {"k": 5}), matrix(X[perm], y[perm])).predict_scores(q)
    assert np.array_equal(a, b)


def test_logreg_separable_blobs():
    X, y = blobs()
    # the diagonal x0 + x1 = 0 separates the blobs with margin
    assert np.all((X.sum(axis=1) > 0) == (y == 1))
    model = fit_model(ClassifierSpec("log_reg"), matrix(X, y))
    assert len(model.loss_history) <= 5001
    assert np.mean(model.predict_labels(X) == y) >= 0.95


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 50.0))
def test_logreg_loss_never_increases(seed, lr):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3)) * rng.uniform(0.1, 100, size=3)
    y = rng.integers(0, 2, size=40)
    y[:2] = [0, 1]
    model = fit_model(ClassifierSpec("log_reg", {"learning_rate": lr, "max_iter": 300}), matrix(X, y))
    assert np.all(np.diff(model.loss_history) <= 0)


def test_logreg_zero_weights_score_half():
    model = LogisticModel(weights=np.zeros(3), bias=0.0)
    assert model.predict_scores(np.random.default_rng(0).normal(size=(4, 3))).tolist() == [0.5] * 4


def test_lda_translation_invariant():
    X, y = blobs(1)
    shift = np.array([1000.0, -250.0])
    a = fit_model(ClassifierSpec("lda"), matrix(X, y)).predict_scores(X)
    b = fit_model(ClassifierSpec("lda"), matrix(X + shift, y)).predict_scores(X + shift)
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_lda_singular_without_ridge():
    X = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [3.0, 1.0]])
    with pytest.raises(ValueError, match="singular"):
        fit_model(ClassifierSpec("lda", {"ridge": 0.0}), matrix(X, [0, 0, 1, 1]))
    fit_model(ClassifierSpec("lda"), matrix(X, [0, 0, 1, 1]))


def test_gaussian_nb_posterior_by_hand():
    X = np.array([[0.0], [2.0], [4.0], [8.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_model(ClassifierSpec("gaussian_nb"), matrix(X, y))

    def density(x, mu, var):
        return math.exp(-((x - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)

    x = 3.0
    p0, p1 = 0.5 * density(x, 1.0, 1.0), 0.5 * density(x, 6.0, 4.0)
    assert model.predict_scores([[x]])[0] == pytest.approx(p1 / (p0 + p1), rel=1e-12)
    proba = model.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)


def test_gaussian_nb_variance_floor():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 5.0], [3.0, 6.0]])
    model = fit_model(ClassifierSpec("gaussian_nb"), matrix(X, [0, 0, 1, 1]))
    assert model.variances[0, 0] == 1e-9
    assert np.all(np.isfinite(model.predict_scores(X)))


@pytest.mark.parametrize("algo", ["log_reg", "lda", "gaussian_nb"])
def test_single_class_rejected(algo):
    with pytest.raises(ValueError):
        fit_model(ClassifierSpec(algo), matrix([0, 1, 2], [1, 1, 1]))


def test_width_mismatch():
    model = fit_model(ClassifierSpec("cart"), matrix([[0, 1], [1, 0]], [0, 1]))
    with pytest.raises(ValueError, match="width"):
        predict_scores(model, [[1.0, 2.0, 3.0]])


def test_threshold_boundary():
    model = LogisticModel(weights=np.zeros(1), bias=0.0)
    assert predict_labels(model, [[3.0]]).tolist() == [1]
    tree = fit_model(ClassifierSpec("cart"), matrix([0, 1], [0, 1]))
    assert predict_labels(tree, [[0.0], [1.0]]).tolist() == [0, 1]


@pytest.mark.parametrize("spec", DEFAULT_SPECS, ids=lambda s: s.name)
def test_determinism(spec, small_synth):
    m = build_matrix(small_synth)
    a, b = fit_model(spec, m, seed=5), fit_model(spec, m, seed=5)
    assert a.to_dict() == b.to_dict()
    assert np.array_equal(a.predict_scores(m.X), b.predict_scores(m.X))


def test_tree_serializes():
    tree = fit_model(ClassifierSpec("cart"), matrix([0, 1, 10, 11], [0, 0, 1, 1]))
    d = tree.to_dict()
    assert isinstance(tree, TreeModel)
    assert [n["left"] for n in d["nodes"]] == [1, -1, -1]
