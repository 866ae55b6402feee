"""The eight reviewer-centric features and the labeled matrix built from them."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .data import FAKE, FEATURE_NAMES, NON_FAKE, Dataset, FeatureVector, LabeledMatrix, ReviewerProfile

_LABEL_CODES = {"fake": FAKE, "genuine": NON_FAKE}


def compute_profile_features(p: ReviewerProfile, review_count: int, reference_date: float):
    """Return (photo_count, review_count, useful_votes, reviewer_expertise)."""
    if reference_date < p.registration_date:
        raise ValueError(
            f"reviewer {p.reviewer_id!r}: reference date {reference_date} precedes "
            f"registration {p.registration_date}"
        )
    return (
        float(p.photo_count),
        float(review_count),
        float(p.useful_votes),
        float(reference_date - p.registration_date),
    )


def compute_avg_gap(timestamps: Sequence[float]) -> float:
    n = len(timestamps)
    if n == 0:
        raise ValueError("average gap of an empty review history")
    if any(b < a for a, b in zip(timestamps, timestamps[1:])):
        raise ValueError("timestamps must be sorted ascending")
    if n == 1:
        return 0.0
    # the gap sum telescopes
    return (timestamps[-1] - timestamps[0]) / (n - 1)


def compute_ard(reviews: Iterable[tuple[float, float]]) -> float:
    """Mean absolute deviation of ratings from the reviewed businesses' averages."""
    devs = [abs(rating - avg) for rating, avg in reviews]
    if not devs:
        raise ValueError("rating deviation of an empty review history")
    return math.fsum(devs) / len(devs)


def compute_first_review(reviews: Iterable[tuple[float, float]]) -> float:
    delays = []
    for ts, first in reviews:
        if ts < first:
            raise ValueError(f"review at day {ts} precedes its business's first review at day {first}")
        delays.append(ts - first)
    if not delays:
        raise ValueError("first-review delay of an empty review history")
    return math.fsum(delays) / len(delays)


def compute_activity(timestamps: Sequence[float]) -> float:
    if len(timestamps) == 0:
        raise ValueError("activity of an empty review history")
    return float(max(timestamps) - min(timestamps))


def reviewer_features(d: Dataset, reference_date: float | None = None) -> dict[str, FeatureVector]:
    """Feature vector of every reviewer that has at least one review."""
    if not d.businesses:
        raise ValueError("business stats missing; run derive_business_stats first")
    if reference_date is None:
        reference_date = max(r.timestamp for r in d.reviews)
    out = {}
    for rid, reviews in d.reviews_by_reviewer().items():
        try:
            profile = d.profiles[rid]
            ts = sorted(r.timestamp for r in reviews)
            stats = [d.businesses[r.business_id] for r in reviews]
            photo, count, votes, expertise = compute_profile_features(profile, len(reviews), reference_date)
            out[rid] = FeatureVector(
                photo_count=photo,
                review_count=count,
                useful_votes=votes,
                reviewer_expertise=expertise,
                avg_gap=compute_avg_gap(ts),
                avg_rating_deviation=compute_ard((r.rating, b.avg_rating) for r, b in zip(reviews, stats)),
                first_review=compute_first_review((r.timestamp, b.first_review_time) for r, b in zip(reviews, stats)),
                reviewer_activity=compute_activity(ts),
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"reviewer {rid!r}: {exc}") from exc
    return out


def build_matrix(
    d: Dataset,
    reference_date: float | None = None,
    group_by_reviewer: bool = False,
) -> LabeledMatrix:
    """One row per review (sorted by review_id) carrying its reviewer's features.

    With ``group_by_reviewer`` the matrix has one row per reviewer instead,
    sorted by reviewer_id.
    """
    if not d.reviews:
        raise ValueError("dataset has no reviews")
    feats = reviewer_features(d, reference_date)
    labels = {}
    for rid in feats:
        tag = d.profiles[rid].label
        if tag not in _LABEL_CODES:
            raise ValueError(f"reviewer {rid!r} is not tagged fake/genuine (got {tag!r}); run tag_reviewers")
        labels[rid] = _LABEL_CODES[tag]

    if group_by_reviewer:
        keys = sorted(feats)
        ids, groups = keys, keys
    else:
        reviews = sorted(d.reviews, key=lambda r: r.review_id)
        ids = [r.review_id for r in reviews]
        groups = [r.reviewer_id for r in reviews]

    table = {rid: fv.as_tuple() for rid, fv in feats.items()}
    X = np.array([table[g] for g in groups], dtype=np.float64).reshape(len(groups), len(FEATURE_NAMES))
    y = np.array([labels[g] for g in groups], dtype=np.int64)
    return LabeledMatrix(ids=tuple(ids), X=X, y=y, feature_names=FEATURE_NAMES, groups=tuple(groups))
