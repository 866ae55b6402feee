import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crfdspam import kernels
from tests.oracles import brute_neighbors, exhaustive_split


def test_backend_name():
    assert kernels.BACKEND in kernels.available_backends()


def test_env_forces_python_backend():
    env = {**os.environ, "CRFDSPAM_PURE_PYTHON": "1"}
    out = subprocess.run(
        [sys.executable, "-c", "from crfdspam import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


small_data = st.integers(2, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=150)
@given(small_data)
def test_best_split_matches_exhaustive_search(data):
    rows, labels = data
    X = np.array(rows, dtype=float)
    y = np.array(labels, dtype=np.int64)
    want = exhaustive_split(rows, labels)
    for impl in kernels.available_backends().values():
        f, t, gain = impl.best_split(X, y, np.arange(len(y), dtype=np.int64))
        if want is None:
            assert f == -1 or gain <= 1e-10
        else:
            assert (f, t) == want[:2]
            assert gain == pytest.approx(float(want[2]), abs=1e-9)


def test_best_split_constant_features(backend):
    X = np.ones((4, 2))
    f, t, gain = backend.best_split(X, np.array([0, 1, 0, 1]), np.arange(4, dtype=np.int64))
    assert f == -1 and np.isnan(t) and gain == 0.0


@settings(max_examples=60)
@given(st.integers(1, 40), st.integers(1, 10), st.integers(1, 12), st.integers(0, 2**31))
def test_kneighbors_matches_brute_force(n_train, n_query, k, seed):
    rng = np.random.default_rng(seed)
    # small integer grid so distance ties are common
    train = rng.integers(0, 3, size=(n_train, 3)).astype(float)
    query = rng.integers(0, 3, size=(n_query, 3)).astype(float)
    k = min(k, n_train)
    want = brute_neighbors(train.tolist(), query.tolist(), k)
    for impl in kernels.available_backends().values():
        assert impl.kneighbors(train, query, k).tolist() == want


def test_backends_agree_on_random_data():
    impls = kernels.available_backends()
    if len(impls) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(11)
    X = rng.normal(size=(3000, 8))
    X[:, 2] = np.round(X[:, 2], 1)
    y = (X[:, 0] + rng.normal(size=3000) > 0).astype(np.int64)
    idx = np.arange(0, 3000, 2, dtype=np.int64)
    a, b = impls["cython"], impls["python"]
    assert a.best_split(X, y, idx) == b.best_split(X, y, idx)
    q = rng.normal(size=(500, 8))
    assert np.array_equal(a.kneighbors(X, q, 7), b.kneighbors(X, q, 7))


def test_apply_tree(backend):
    # root splits feature 0 at 1.5; node 1 is a leaf, node 2 splits feature 1 at 0
    feature = np.array([0, -1, 1, -1, -1], dtype=np.int64)
    threshold = np.array([1.5, np.nan, 0.0, np.nan, np.nan])
    left = np.array([1, -1, 3, -1, -1], dtype=np.int64)
    right = np.array([2, -1, 4, -1, -1], dtype=np.int64)
    X = np.array([[1.0, 9.0], [1.5, -3.0], [2.0, 0.0], [2.0, 0.1]])
    assert backend.apply_tree(X, feature, threshold, left, right).tolist() == [1, 1, 3, 4]


def test_reports_identical_across_backends(tmp_path):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    from crfdspam.ingest import write_dataset
    from crfdspam.synth import generate

    write_dataset(generate(120, seed=8), tmp_path)
    outputs = []
    for flag in ("0", "1"):
        out = tmp_path / "report.json"
        subprocess.run(
            [sys.executable, "-m", "crfdspam", "compare", "--input", str(tmp_path / "reviews.csv"),
             "--profiles", str(tmp_path / "profiles.csv"), "--folds", "3", "--out", str(out)],
            env={**os.environ, "CRFDSPAM_PURE_PYTHON": flag}, check=True,
        )
        outputs.append(out.read_bytes())
        out.unlink()
    assert outputs[0] == outputs[1]
