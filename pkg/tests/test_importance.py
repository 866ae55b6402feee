import numpy as np
import pytest

from crfdspam.classifiers import ClassifierSpec, LogisticModel, fit_model
from crfdspam.data import FEATURE_NAMES, LabeledMatrix
from crfdspam.evaluation import cross_validate_matrix
from crfdspam.features import build_matrix
from crfdspam.importance import averaged_importance, gini_importance, select_top_k


def matrix(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or tuple(f"f{j}" for j in range(X.shape[1]))
    return LabeledMatrix(ids=tuple(map(str, range(len(X)))), X=X, y=np.asarray(y), feature_names=names)


def test_single_split_on_feature_two():
    X = np.zeros((6, 8))
    X[:, 2] = [0, 1, 2, 10, 11, 12]
    tree = fit_model(ClassifierSpec("cart"), matrix(X, [0, 0, 0, 1, 1, 1]))
    assert gini_importance(tree).values.tolist() == [0, 0, 1, 0, 0, 0, 0, 0]


def test_hand_built_depth_two_tree():
    # root: 1 fake / 3 genuine, gini 0.375; both features tie, feature 0 wins.
    # root decrease 4*0.375 - 2*0.5 = 0.5, left child decrease 2*0.5 = 1.0,
    # both divided by 4 -> [0.125, 0.25] -> normalized [1/3, 2/3]
    X = [[0, 0], [0, 1], [1, 0], [1, 1]]
    tree = fit_model(ClassifierSpec("cart", {"max_depth": 2}), matrix(X, [0, 1, 1, 1]))
    assert tree.feature[0] == 0
    imp = gini_importance(tree)
    np.testing.assert_allclose(imp.values, [1 / 3, 2 / 3], atol=1e-15)
    assert not imp.no_split


def test_no_split_flag():
    tree = fit_model(ClassifierSpec("cart"), matrix([[1.0], [1.0]], [0, 1]))
    imp = gini_importance(tree)
    assert imp.no_split and imp.values.tolist() == [0.0]


def test_non_tree_rejected():
    with pytest.raises(TypeError):
        gini_importance(LogisticModel(weights=np.zeros(2), bias=0.0))


def test_normalization_on_synthetic(small_synth):
    m = build_matrix(small_synth)
    rep = cross_validate_matrix(m, "cumulative", [ClassifierSpec("cart", {"max_depth": 5})], keep_models=True)
    for tree in rep.models["cart(max_depth=5)"]:
        v = gini_importance(tree).values
        assert np.all(v >= 0) and abs(v.sum() - 1.0) <= 1e-9
    a = averaged_importance(rep.models["cart(max_depth=5)"], m.feature_names)
    rep2 = cross_validate_matrix(m, "cumulative", [ClassifierSpec("cart", {"max_depth": 5})], keep_models=True)
    assert a == averaged_importance(rep2.models["cart(max_depth=5)"], m.feature_names)


def test_averaging():
    X = [[0, 5], [1, 5], [2, 5], [3, 5]]
    t1 = fit_model(ClassifierSpec("cart"), matrix(X, [0, 0, 1, 1]))
    t2 = fit_model(ClassifierSpec("cart"), matrix([[5, 0], [5, 1], [5, 2], [5, 3]], [0, 0, 1, 1]))
    assert averaged_importance([t1, t1], ["a", "b"]) == [("a", 1.0), ("b", 0.0)]
    assert averaged_importance([t1, t2], ["a", "b"]) == [("a", 0.5), ("b", 0.5)]


def test_select_top_k():
    m = matrix(np.arange(16.0).reshape(2, 8), [0, 1], FEATURE_NAMES)
    ranking = [(n, 0.5) for n in ("review_count", "useful_votes", "reviewer_expertise")]
    ranking += [(n, 0.0) for n in FEATURE_NAMES if n not in dict(ranking)]
    names, sub = select_top_k(ranking, m, 3)
    assert names == ["review_count", "useful_votes", "reviewer_expertise"]
    assert sub.feature_names == tuple(names)
    assert sub.X[:, 0].tolist() == [1.0, 9.0]
    names8, sub8 = select_top_k(ranking, m, 8)
    assert set(names8) == set(FEATURE_NAMES) and sub8.X.shape == (2, 8)
    for bad in (0, 9):
        with pytest.raises(ValueError):
            select_top_k(ranking, m, bad)
