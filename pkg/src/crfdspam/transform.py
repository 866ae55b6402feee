"""Cumulative relative frequency re-encoding of feature columns.

Each column is replaced by its empirical CDF: a value ``v`` maps to the
fraction of fitting entries ``<= v``. Min-max and z-score scalers are kept
alongside as baselines.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import LabeledMatrix


def _column(values) -> np.ndarray:
    col = np.asarray(values, dtype=np.float64).ravel()
    if col.size == 0:
        raise ValueError("cannot fit on an empty column")
    if not np.all(np.isfinite(col)):
        raise ValueError("column contains non-finite values")
    return col


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    values: np.ndarray
    counts: np.ndarray
    cum_rel_freq: np.ndarray
    n_total: int

    @classmethod
    def from_counts(cls, values, counts) -> "FrequencyTable":
        values = np.asarray(values, dtype=np.float64)
        counts = np.asarray(counts, dtype=np.int64)
        if values.shape != counts.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("values and counts must be equal-length non-empty 1-D sequences")
        if np.any(np.diff(values) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        n = int(counts.sum())
        cum = np.cumsum(counts) / n
        for a in (values, counts, cum):
            a.setflags(write=False)
        return cls(values=values, counts=counts, cum_rel_freq=cum, n_total=n)

    def __call__(self, v):
        return eval_crfd(self, v)

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "counts": self.counts.tolist(),
            "n_total": self.n_total,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FrequencyTable":
        table = cls.from_counts(data["values"], data["counts"])
        if table.n_total != int(data.get("n_total", table.n_total)):
            raise ValueError("n_total does not match the sum of counts")
        return table


def fit_crfd(column) -> FrequencyTable:
    col = _column(column)
    values, counts = np.unique(col, return_counts=True)
    return FrequencyTable.from_counts(values, counts)


def eval_crfd(t: FrequencyTable, v):
    """Right-continuous step lookup; values below the table minimum map to 0.

    Accepts a scalar or an array and returns the same shape.
    """
    arr = np.asarray(v, dtype=np.float64)
    idx = np.searchsorted(t.values, arr, side="right")
    cum = np.concatenate(([0.0], t.cum_rel_freq))
    out = cum[idx]
    return float(out) if out.ndim == 0 else out


def fit_tables(m: LabeledMatrix) -> list[FrequencyTable]:
    return [fit_crfd(m.X[:, j]) for j in range(m.X.shape[1])]


def transform_matrix(m: LabeledMatrix, tables: Sequence[FrequencyTable]) -> LabeledMatrix:
    if len(tables) != m.X.shape[1]:
        raise ValueError(f"expected {m.X.shape[1]} frequency tables, got {len(tables)}")
    if any(t is None for t in tables):
        raise ValueError("missing frequency table")
    X = np.empty_like(m.X)
    for j, t in enumerate(tables):
        X[:, j] = eval_crfd(t, m.X[:, j])
    return m.with_values(X)


def tables_to_json(tables: Sequence[FrequencyTable], feature_names: Sequence[str]) -> str:
    payload = {name: t.to_dict() for name, t in zip(feature_names, tables)}
    return json.dumps(payload, indent=2)


def tables_from_json(text: str, feature_names: Sequence[str]) -> list[FrequencyTable]:
    payload = json.loads(text)
    missing = [n for n in feature_names if n not in payload]
    if missing:
        raise ValueError(f"missing frequency table for {missing[0]!r}")
    return [FrequencyTable.from_dict(payload[n]) for n in feature_names]


@dataclass(frozen=True)
class MinMax:
    lo: float
    hi: float

    def __call__(self, v):
        out = np.clip((np.asarray(v, dtype=np.float64) - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ZScore:
    mean: float
    std: float

    def __call__(self, v):
        out = (np.asarray(v, dtype=np.float64) - self.mean) / self.std
        return float(out) if out.ndim == 0 else out


def fit_minmax(column) -> MinMax:
    col = _column(column)
    lo, hi = float(col.min()), float(col.max())
    if not hi > lo:
        raise ValueError("zero range: cannot min-max scale a constant column")
    return MinMax(lo, hi)


def fit_zscore(column) -> ZScore:
    col = _column(column)
    std = float(col.std())  # population std
    if not std > 0:
        raise ValueError("zero std: cannot standardize a constant column")
    return ZScore(float(col.mean()), std)


_FITTERS = {"cumulative": fit_crfd, "minmax": fit_minmax, "zscore": fit_zscore}


def fit_scalers(m: LabeledMatrix, mode: str) -> list | None:
    """Per-column fitted transforms for ``mode``; ``None`` for basic features."""
    if mode == "basic":
        return None
    try:
        fitter = _FITTERS[mode]
    except KeyError:
        raise ValueError(f"unknown feature mode {mode!r}") from None
    out = []
    for j, name in enumerate(m.feature_names):
        try:
            out.append(fitter(m.X[:, j]))
        except ValueError as exc:
            raise ValueError(f"column {name!r}: {exc}") from None
    return out


def apply_scalers(m: LabeledMatrix, scalers) -> LabeledMatrix:
    if scalers is None:
        return m
    if len(scalers) != m.X.shape[1]:
        raise ValueError(f"expected {m.X.shape[1]} column transforms, got {len(scalers)}")
    X = np.empty_like(m.X)
    for j, s in enumerate(scalers):
        X[:, j] = s(m.X[:, j])
    return m.with_values(X)


def preprocessing_timer(m: LabeledMatrix, repeats: int = 1) -> float:
    """Wall-clock milliseconds to fit every column's table and transform ``m``,
    summed over ``repeats`` runs."""
    total = 0.0
    for _ in range(repeats):
        start = time.perf_counter()
        transform_matrix(m, fit_tables(m))
        total += time.perf_counter() - start
    return total * 1000.0
