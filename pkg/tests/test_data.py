from dataclasses import replace

import numpy as np
import pytest

from crfdspam.data import BusinessStats, Dataset, LabeledMatrix, Review, ReviewerProfile, validate_dataset


def test_well_formed_dataset_has_no_violations(tiny_dataset):
    assert len(tiny_dataset.reviews) >= 3
    assert validate_dataset(tiny_dataset) == []


def test_rating_out_of_range(tiny_dataset):
    reviews = list(tiny_dataset.reviews)
    reviews[0] = replace(reviews[0], rating=6)
    bad = Dataset(tuple(reviews), tiny_dataset.profiles)
    violations = validate_dataset(bad)
    assert [v.rule for v in violations] == ["rating out of range"]
    assert violations[0].instance_id == "r1"


def test_first_review_time_after_a_review(tiny_dataset):
    businesses = dict(tiny_dataset.businesses)
    businesses["b1"] = BusinessStats("b1", 4.0, 5.0)
    violations = validate_dataset(Dataset(tiny_dataset.reviews, tiny_dataset.profiles, businesses))
    assert violations == [("b1", "first_review_time after a review")]


def test_other_rules():
    reviews = (
        Review("r1", "a", "b", 3, -1.0, "fake"),
        Review("r1", "ghost", "b", 3, 1.0, "fake"),
    )
    profiles = {"a": ReviewerProfile("a", -1, 0, 0.0)}
    rules = {v.rule for v in validate_dataset(Dataset(reviews, profiles))}
    assert rules == {"negative timestamp", "duplicate review_id", "unresolved reviewer", "negative photo_count"}


def test_avg_rating_must_be_mean(tiny_dataset):
    businesses = dict(tiny_dataset.businesses)
    businesses["b2"] = BusinessStats("b2", 2.0, 5.0)
    d = Dataset(tiny_dataset.reviews, tiny_dataset.profiles, businesses)
    assert [v.rule for v in validate_dataset(d)] == ["avg_rating is not the mean rating"]


def test_validate_is_idempotent(tiny_dataset):
    assert validate_dataset(tiny_dataset) == validate_dataset(tiny_dataset)


def test_labeled_matrix_checks_shapes():
    with pytest.raises(ValueError):
        LabeledMatrix(ids=("a",), X=np.zeros((2, 8)), y=np.zeros(2))
    m = LabeledMatrix(ids=("a", "b"), X=np.arange(16.0).reshape(2, 8), y=[0, 1])
    assert not m.X.flags.writeable
    sub = m.columns(["review_count", "photo_count"])
    assert sub.X.tolist() == [[1.0, 0.0], [9.0, 8.0]]
    assert m.subset([1]).ids == ("b",)
