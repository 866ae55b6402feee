"""Seeded generator of labeled review datasets with power-law count features.

Fake reviewers are bursty (short activity windows), recently registered,
rate far from the business mean and have lighter-tailed counts; genuine
reviewers are the opposite. Every constant is a keyword argument.
"""

from __future__ import annotations

import math

import numpy as np

from .data import FEATURE_NAMES, Dataset, Review, ReviewerProfile
from .features import build_matrix
from .ingest import derive_business_stats


def zipf_sample(rng: np.random.Generator, exponent: float, size: int, max_rank: int = 1000) -> np.ndarray:
    """Ranks in [1, max_rank] with P(r) proportional to r**-exponent.

    Inverse-CDF sampling on stratified uniforms: each draw falls in its own
    1/size slice of [0, 1), so the count of draws <= r stays within one of
    its expectation for every rank r.
    """
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    ranks = np.arange(1, max_rank + 1, dtype=np.float64)
    cdf = np.cumsum(ranks ** -exponent)
    cdf /= cdf[-1]
    u = (rng.permutation(size) + rng.random(size)) / size
    return np.minimum(np.searchsorted(cdf, u, side="right"), max_rank - 1).astype(np.int64) + 1


def generate(
    n_reviewers: int = 2000,
    reviews_per_reviewer_range: tuple[int, int] = (1, 40),
    fake_ratio: float = 0.13,
    zipf_exponent: float = 1.2,
    seed: int = 0,
    *,
    n_businesses: int | None = None,
    horizon_days: float = 5000.0,
    fake_span_days: float = 60.0,
    genuine_span_days: float = 300.0,
    span_mass: float = 0.8,
    fake_exponent_shift: float = 0.6,
    fake_rating_shift: float = 1.8,
    max_rank: int = 1000,
) -> Dataset:
    """Generate a tagged dataset with derived business stats.

    ``round(fake_ratio * n_reviewers)`` (halves rounded up) reviewers are fake.
    A fake reviewer's drawn activity window is at most ``fake_span_days``
    with probability ``span_mass``; a genuine one's is at least
    ``genuine_span_days`` with the same probability. Single-review
    reviewers realize an activity of 0 whatever window they drew.
    """
    lo, hi = reviews_per_reviewer_range
    if not 0 < fake_ratio < 1:
        raise ValueError("fake_ratio must be in (0, 1)")
    if not zipf_exponent > 1:
        raise ValueError("zipf_exponent must be > 1")
    if n_reviewers < 20:
        raise ValueError("n_reviewers must be at least 20")
    if not 1 <= lo <= hi:
        raise ValueError("reviews_per_reviewer_range must satisfy 1 <= lo <= hi")
    if not 0 <= span_mass <= 1:
        raise ValueError("span_mass must be in [0, 1]")
    if not 0 < fake_span_days < genuine_span_days < horizon_days:
        raise ValueError("need 0 < fake_span_days < genuine_span_days < horizon_days")

    rng = np.random.default_rng(seed)
    n_fake = int(math.floor(fake_ratio * n_reviewers + 0.5))
    is_fake = np.zeros(n_reviewers, dtype=bool)
    is_fake[rng.permutation(n_reviewers)[:n_fake]] = True
    fake_idx, gen_idx = np.flatnonzero(is_fake), np.flatnonzero(~is_fake)
    s_fake = zipf_exponent + fake_exponent_shift

    def per_class(fn_fake, fn_gen, dtype=np.int64):
        out = np.empty(n_reviewers, dtype=dtype)
        out[fake_idx] = fn_fake(fake_idx.size)
        out[gen_idx] = fn_gen(gen_idx.size)
        return out

    n_reviews = per_class(
        lambda m: lo - 1 + zipf_sample(rng, s_fake, m, hi - lo + 1),
        lambda m: lo - 1 + zipf_sample(rng, zipf_exponent, m, hi - lo + 1),
    )
    photos = per_class(
        lambda m: zipf_sample(rng, s_fake, m, max_rank) - 1,
        lambda m: zipf_sample(rng, zipf_exponent, m, max_rank) - 1,
    )
    votes_base = per_class(
        lambda m: zipf_sample(rng, s_fake, m, max_rank) - 1,
        lambda m: zipf_sample(rng, zipf_exponent, m, max_rank) - 1,
    )

    short = rng.random(n_reviewers) < span_mass
    span = np.where(
        is_fake,
        np.where(short, rng.uniform(0, fake_span_days, n_reviewers),
                 rng.uniform(fake_span_days, genuine_span_days, n_reviewers)),
        np.where(short, rng.uniform(genuine_span_days, 0.6 * horizon_days, n_reviewers),
                 rng.uniform(0, genuine_span_days, n_reviewers)),
    )
    span = np.floor(span)
    # fake accounts appear late in the observation window
    earliest = np.where(is_fake, 0.5 * horizon_days, 0.0)
    start = np.floor(earliest + rng.random(n_reviewers) * (horizon_days - span - earliest))
    offset = np.floor(np.where(is_fake, rng.exponential(40.0, n_reviewers), rng.exponential(600.0, n_reviewers)))
    registration = np.maximum(0.0, start - offset)

    if n_businesses is None:
        n_businesses = max(20, n_reviewers // 2)
    quality = rng.uniform(2.0, 4.6, n_businesses)
    total = int(n_reviews.sum())
    business = zipf_sample(rng, zipf_exponent, total, n_businesses) - 1
    business = business[rng.permutation(total)]
    noise = rng.normal(0.0, 0.7, total)
    push = np.where(rng.random(total) < 0.7, 1.0, -1.0) * (fake_rating_shift + np.abs(rng.normal(0.0, 0.6, total)))
    owner = np.repeat(np.arange(n_reviewers), n_reviews)
    raw = quality[business] + np.where(is_fake[owner], push, noise)
    ratings = np.clip(np.rint(raw), 1, 5).astype(np.int64)

    width = len(str(n_reviewers))
    rid_width = len(str(total))
    bid_width = len(str(n_businesses))
    reviews = []
    profiles = {}
    pos = 0
    for i in range(n_reviewers):
        n = int(n_reviews[i])
        if n == 1:
            times = np.array([start[i]])
        else:
            inner = np.sort(np.floor(start[i] + rng.random(n - 2) * span[i]))
            times = np.concatenate(([start[i]], inner, [start[i] + span[i]]))
        uid = f"u{i:0{width}d}"
        label = "fake" if is_fake[i] else "non_fake"
        for j in range(n):
            reviews.append(
                Review(
                    review_id=f"r{pos:0{rid_width}d}",
                    reviewer_id=uid,
                    business_id=f"b{int(business[pos]):0{bid_width}d}",
                    rating=int(ratings[pos]),
                    timestamp=float(times[j]),
                    label=label,
                )
            )
            pos += 1
        fake = bool(is_fake[i])
        votes = int(votes_base[i]) + int(rng.poisson((0.3 if fake else 1.5) * n))
        profiles[uid] = ReviewerProfile(
            reviewer_id=uid,
            photo_count=int(photos[i]),
            useful_votes=votes,
            registration_date=float(registration[i]),
            label="fake" if fake else "genuine",
        )
    return derive_business_stats(Dataset(reviews=tuple(reviews), profiles=profiles))


def summarize(d) -> list[tuple[str, float, float]]:
    """(feature, mean, std) for the eight features over the review-level matrix.

    Accepts a Dataset or an already built LabeledMatrix.
    """
    m = d if hasattr(d, "X") else build_matrix(d if d.businesses else derive_business_stats(d))
    if len(m) == 0:
        raise ValueError("cannot summarize an empty dataset")
    return [(name, float(m.X[:, j].mean()), float(m.X[:, j].std())) for j, name in enumerate(m.feature_names)]


# mean / std reported for the crawled dataset, for side-by-side display only
REFERENCE_SUMMARY = dict(
    zip(
        FEATURE_NAMES,
        [(170.9, 911.0), (201.9, 298.2), (502.7, 2089.45), (3664.7, 579.8),
         (55.2, 110.6), (0.01, 0.06), (13.9, 50.2), (2637.6, 991.3)],
    )
)
