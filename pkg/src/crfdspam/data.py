"""Domain records shared by every stage of the pipeline.

Times are fractional days since a fixed epoch (1970-01-01 for ingested
calendar dates). Review labels are ``fake``/``non_fake``/``unknown``;
reviewer labels are ``fake``/``genuine``/``mix`` (``None`` before tagging).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

FAKE = 0
NON_FAKE = 1

REVIEW_LABELS = ("fake", "non_fake", "unknown")
REVIEWER_LABELS = ("fake", "genuine", "mix")

FEATURE_NAMES = (
    "photo_count",
    "review_count",
    "useful_votes",
    "reviewer_expertise",
    "avg_gap",
    "avg_rating_deviation",
    "first_review",
    "reviewer_activity",
)


@dataclass(frozen=True)
class Review:
    review_id: str
    reviewer_id: str
    business_id: str
    rating: int
    timestamp: float
    label: str = "unknown"


@dataclass(frozen=True)
class ReviewerProfile:
    reviewer_id: str
    photo_count: int
    useful_votes: int
    registration_date: float
    label: str | None = None


@dataclass(frozen=True)
class BusinessStats:
    business_id: str
    avg_rating: float
    first_review_time: float


@dataclass(frozen=True)
class Dataset:
    reviews: tuple[Review, ...]
    profiles: dict[str, ReviewerProfile] = field(default_factory=dict)
    businesses: dict[str, BusinessStats] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.reviews, tuple):
            object.__setattr__(self, "reviews", tuple(self.reviews))

    def reviews_by_reviewer(self) -> dict[str, list[Review]]:
        out: dict[str, list[Review]] = {}
        for r in self.reviews:
            out.setdefault(r.reviewer_id, []).append(r)
        return out

    def reviews_by_business(self) -> dict[str, list[Review]]:
        out: dict[str, list[Review]] = {}
        for r in self.reviews:
            out.setdefault(r.business_id, []).append(r)
        return out


@dataclass(frozen=True)
class FeatureVector:
    photo_count: float
    review_count: float
    useful_votes: float
    reviewer_expertise: float
    avg_gap: float
    avg_rating_deviation: float
    first_review: float
    reviewer_activity: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in FEATURE_NAMES)


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    """Feature rows with binary labels (0 = fake, 1 = non_fake).

    ``groups`` holds the reviewer id of every row so that callers can
    collapse or group folds by reviewer.
    """

    ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if X.shape[0] != y.shape[0] or X.shape[0] != len(self.ids):
            raise ValueError(
                f"row count mismatch: {len(self.ids)} ids, {X.shape[0]} rows, {y.shape[0]} labels"
            )
        if X.shape[1] != len(self.feature_names):
            raise ValueError("column count does not match feature_names")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx: Sequence[int] | np.ndarray) -> "LabeledMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledMatrix(
            ids=tuple(self.ids[i] for i in idx),
            X=self.X[idx],
            y=self.y[idx],
            feature_names=self.feature_names,
            groups=None if self.groups is None else tuple(self.groups[i] for i in idx),
        )

    def with_values(self, X: np.ndarray, feature_names: Sequence[str] | None = None) -> "LabeledMatrix":
        return LabeledMatrix(
            ids=self.ids,
            X=X,
            y=self.y,
            feature_names=self.feature_names if feature_names is None else tuple(feature_names),
            groups=self.groups,
        )

    def columns(self, names: Sequence[str]) -> "LabeledMatrix":
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise KeyError(f"unknown feature(s): {', '.join(missing)}")
        cols = [self.feature_names.index(n) for n in names]
        return self.with_values(self.X[:, cols], names)


class Violation(NamedTuple):
    instance_id: str
    rule: str


def validate_dataset(d: Dataset) -> list[Violation]:
    """Return one violation per broken invariant; empty means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for r in d.reviews:
        if r.review_id in seen:
            out.append(Violation(r.review_id, "duplicate review_id"))
        seen.add(r.review_id)
        if not (1 <= r.rating <= 5):
            out.append(Violation(r.review_id, "rating out of range"))
        if not math.isfinite(r.timestamp) or r.timestamp < 0:
            out.append(Violation(r.review_id, "negative timestamp"))
        if r.label not in REVIEW_LABELS:
            out.append(Violation(r.review_id, "unknown review label"))
        if r.reviewer_id not in d.profiles:
            out.append(Violation(r.review_id, "unresolved reviewer"))
        # business stats are optional until derive_business_stats has run
        if d.businesses and r.business_id not in d.businesses:
            out.append(Violation(r.review_id, "unresolved business"))

    for pid, p in d.profiles.items():
        if pid != p.reviewer_id:
            out.append(Violation(pid, "profile key mismatch"))
        if p.photo_count < 0:
            out.append(Violation(pid, "negative photo_count"))
        if p.useful_votes < 0:
            out.append(Violation(pid, "negative useful_votes"))
        if not math.isfinite(p.registration_date) or p.registration_date < 0:
            out.append(Violation(pid, "negative registration_date"))
        if p.label is not None and p.label not in REVIEWER_LABELS:
            out.append(Violation(pid, "unknown reviewer label"))

    if d.businesses:
        by_business = d.reviews_by_business()
        for bid, b in d.businesses.items():
            reviews = by_business.get(bid, [])
            if not (1.0 <= b.avg_rating <= 5.0):
                out.append(Violation(bid, "avg_rating out of range"))
            if not reviews:
                continue
            if any(r.timestamp < b.first_review_time for r in reviews):
                out.append(Violation(bid, "first_review_time after a review"))
            mean = math.fsum(r.rating for r in reviews) / len(reviews)
            if abs(mean - b.avg_rating) > 1e-9:
                out.append(Violation(bid, "avg_rating is not the mean rating"))
    return out
