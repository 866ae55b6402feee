"""Reading and writing review/profile files, reviewer tagging and
per-business aggregates."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import tempfile
from collections import Counter
from datetime import date, datetime, timezone
from pathlib import Path

from .data import (
    REVIEW_LABELS,
    REVIEWER_LABELS,
    BusinessStats,
    Dataset,
    Review,
    ReviewerProfile,
)

log = logging.getLogger(__name__)

REVIEW_FIELDS = ("review_id", "reviewer_id", "business_id", "rating", "timestamp", "label")
PROFILE_FIELDS = ("reviewer_id", "photo_count", "useful_votes", "registration_date")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class IngestError(ValueError):
    """Malformed input file; the message carries the file and record locus."""


def parse_day(value) -> float:
    """Parse an ISO-8601 date/datetime or a plain day number into days since 1970-01-01."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        out = float(value)
    else:
        text = str(value).strip()
        try:
            out = float(text)
        except ValueError:
            try:
                if len(text) == 10:
                    dt = datetime.combine(date.fromisoformat(text), datetime.min.time(), timezone.utc)
                else:
                    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
                    if dt.tzinfo is None:
                        dt = dt.replace(tzinfo=timezone.utc)
            except ValueError:
                raise ValueError(f"not a date or day number: {text!r}") from None
            out = (dt - _EPOCH).total_seconds() / 86400.0
    if not math.isfinite(out):
        raise ValueError(f"non-finite day value: {value!r}")
    return out


def _parse_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{name}: expected integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{name}: expected integer, got {value!r}")
        return int(value)
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        try:
            f = float(text)
        except ValueError:
            raise ValueError(f"{name}: expected integer, got {text!r}") from None
        if not f.is_integer():
            raise ValueError(f"{name}: expected integer, got {text!r}") from None
        return int(f)


def _records(path: Path, required: tuple[str, ...]):
    """Yield (line number, record dict) from a CSV or JSON-lines file."""
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(rec, dict):
                    raise IngestError(f"{path}:{lineno}: expected a JSON object")
                missing = [f for f in required if f not in rec]
                if missing:
                    raise IngestError(f"{path}:{lineno}: missing field {missing[0]!r}")
                yield lineno, rec
    else:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [f for f in required if f not in header]
            if missing:
                raise IngestError(f"{path}: missing field {missing[0]!r} in header")
            for rec in reader:
                yield reader.line_num, rec


def _read_profiles(path: Path) -> dict[str, ReviewerProfile]:
    profiles: dict[str, ReviewerProfile] = {}
    for lineno, rec in _records(path, PROFILE_FIELDS):
        try:
            label = rec.get("label") or None
            if label is not None and label not in REVIEWER_LABELS:
                raise ValueError(f"label: unknown reviewer label {label!r}")
            p = ReviewerProfile(
                reviewer_id=str(rec["reviewer_id"]),
                photo_count=_parse_int(rec["photo_count"], "photo_count"),
                useful_votes=_parse_int(rec["useful_votes"], "useful_votes"),
                registration_date=parse_day(rec["registration_date"]),
                label=label,
            )
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
        if p.photo_count < 0 or p.useful_votes < 0 or p.registration_date < 0:
            raise IngestError(f"{path}:{lineno}: negative profile value")
        if p.reviewer_id in profiles:
            raise IngestError(f"{path}:{lineno}: duplicate reviewer_id {p.reviewer_id!r}")
        profiles[p.reviewer_id] = p
    return profiles


def _read_reviews(path: Path) -> list[Review]:
    reviews: list[Review] = []
    seen: set[str] = set()
    for lineno, rec in _records(path, REVIEW_FIELDS):
        try:
            rating = _parse_int(rec["rating"], "rating")
            ts = parse_day(rec["timestamp"])
            label = str(rec["label"]).strip() or "unknown"
            if label not in REVIEW_LABELS:
                raise ValueError(f"label: unknown review label {label!r}")
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
        if not 1 <= rating <= 5:
            raise IngestError(f"{path}:{lineno}: rating {rating} out of range [1, 5]")
        if ts < 0:
            raise IngestError(f"{path}:{lineno}: negative timestamp")
        rid = str(rec["review_id"])
        if rid in seen:
            raise IngestError(f"{path}:{lineno}: duplicate review_id {rid!r}")
        seen.add(rid)
        reviews.append(Review(rid, str(rec["reviewer_id"]), str(rec["business_id"]), rating, ts, label))
    return reviews


def load_dataset(reviews_path, profiles_path) -> Dataset:
    """Load reviews and profiles; reviews whose profile is absent are dropped."""
    reviews_path, profiles_path = Path(reviews_path), Path(profiles_path)
    for p in (reviews_path, profiles_path):
        if not p.is_file():
            raise FileNotFoundError(f"no such input file: {p}")
    profiles = _read_profiles(profiles_path)
    reviews = _read_reviews(reviews_path)
    kept = [r for r in reviews if r.reviewer_id in profiles]
    if len(kept) != len(reviews):
        dropped = {r.reviewer_id for r in reviews if r.reviewer_id not in profiles}
        log.warning(
            "dropped %d review(s) of %d reviewer(s) without a profile",
            len(reviews) - len(kept),
            len(dropped),
        )
    return Dataset(reviews=tuple(kept), profiles=profiles)


def tag_counts(d: Dataset) -> dict[str, float]:
    """Fraction of reviewers per tag (fake / genuine / mix) implied by review labels."""
    tags = Counter(_reviewer_tag(rs) for rs in d.reviews_by_reviewer().values())
    total = sum(tags.values())
    return {t: (tags[t] / total if total else 0.0) for t in REVIEWER_LABELS}


def _reviewer_tag(reviews) -> str:
    labels = {r.label for r in reviews}
    if "unknown" in labels:
        raise ValueError(f"review {reviews[0].review_id!r} has no fake/non_fake label")
    if labels == {"fake"}:
        return "fake"
    if labels == {"non_fake"}:
        return "genuine"
    return "mix"


def tag_reviewers(d: Dataset) -> Dataset:
    """Label each reviewer from its reviews and discard mix reviewers.

    A reviewer is fake when all of its reviews are fake, genuine when all
    are non-fake, and mix otherwise. Mix reviewers and their reviews are
    removed; business stats, if present, are re-derived on what remains.
    """
    by_reviewer = d.reviews_by_reviewer()
    for pid in d.profiles:
        if pid not in by_reviewer:
            raise ValueError(f"unreviewable profile: reviewer {pid!r} has no reviews")

    tags = {pid: _reviewer_tag(rs) for pid, rs in by_reviewer.items()}
    counts = Counter(tags.values())
    total = len(tags)
    log.info(
        "reviewer tags: %s",
        ", ".join(f"{t}={counts[t] / total:.1%}" for t in REVIEWER_LABELS) if total else "none",
    )

    profiles = {
        pid: ReviewerProfile(p.reviewer_id, p.photo_count, p.useful_votes, p.registration_date, tags[pid])
        for pid, p in d.profiles.items()
        if tags[pid] != "mix"
    }
    reviews = tuple(r for r in d.reviews if tags.get(r.reviewer_id) != "mix")
    out = Dataset(reviews=reviews, profiles=profiles)
    return derive_business_stats(out) if d.businesses else out


def derive_business_stats(d: Dataset) -> Dataset:
    businesses = {}
    for bid, rs in d.reviews_by_business().items():
        businesses[bid] = BusinessStats(
            business_id=bid,
            avg_rating=math.fsum(r.rating for r in rs) / len(rs),
            first_review_time=min(r.timestamp for r in rs),
        )
    return Dataset(reviews=d.reviews, profiles=d.profiles, businesses=businesses)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_dataset(d: Dataset, out_dir) -> tuple[Path, Path]:
    """Write ``reviews.csv`` and ``profiles.csv`` in the ingestion schema."""
    out_dir = Path(out_dir)
    reviews_path = out_dir / "reviews.csv"
    profiles_path = out_dir / "profiles.csv"
    atomic_write_text(
        reviews_path,
        _csv_text(
            REVIEW_FIELDS,
            ((r.review_id, r.reviewer_id, r.business_id, r.rating, repr(r.timestamp), r.label) for r in d.reviews),
        ),
    )
    atomic_write_text(
        profiles_path,
        _csv_text(
            PROFILE_FIELDS + ("label",),
            (
                (p.reviewer_id, p.photo_count, p.useful_votes, repr(p.registration_date), p.label or "")
                for p in d.profiles.values()
            ),
        ),
    )
    return reviews_path, profiles_path
