"""Stratified cross-validation, metrics and basic-vs-cumulative comparison.

Class 0 (fake) is the positive class throughout: TP counts fakes predicted
as fake.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .classifiers import ClassifierSpec, KNNModel, Model, fit_model
from .data import Dataset, LabeledMatrix
from .features import build_matrix
from .transform import apply_scalers, fit_scalers

FEATURE_MODES = ("basic", "cumulative", "minmax", "zscore")
CRFD_SCOPES = ("train_only", "full_dataset")
LEAKY_FLAG = "paper-faithful (leaky) protocol"


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: np.ndarray

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train indices, test indices) for one fold."""
        return np.flatnonzero(self.folds != fold), np.flatnonzero(self.folds == fold)


def stratified_folds(labels, k: int, seed: int) -> FoldAssignment:
    """Seeded shuffle within each class, then round-robin over the folds.

    The round-robin position carries over from one class to the next so
    fold sizes stay balanced overall.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    for c, n in zip(classes, counts):
        if n < k:
            raise ValueError(f"class {c!r} has {n} member(s), fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return FoldAssignment(k=k, folds=folds)


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) with fake = 0 as the positive class."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    tp = int(np.sum((t == 0) & (p == 0)))
    fp = int(np.sum((t == 1) & (p == 0)))
    fn = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 1) & (p == 1)))
    return tp, fp, fn, tn


def _ratio(a, b) -> float:
    return a / b if b else 0.0


def _f1(p, r) -> float:
    return _ratio(2 * p * r, p + r)


def prf(cm) -> dict[str, float]:
    """Precision, recall and F1 for both classes; 0/0 counts as 0."""
    tp, fp, fn, tn = cm
    p0, r0 = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
    p1, r1 = _ratio(tn, tn + fn), _ratio(tn, tn + fp)
    return {
        "precision_0": p0, "recall_0": r0, "f1_0": _f1(p0, r0),
        "precision_1": p1, "recall_1": r1, "f1_1": _f1(p1, r1),
    }


def mcc(cm) -> float:
    tp, fp, fn, tn = cm
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def auc(y_true, scores) -> float:
    """P(score of a class-1 row > score of a class-0 row), ties counted 1/2.

    Computed from mid-ranks (Mann-Whitney U).
    """
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {s.shape}")
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes present")
    uniq, inv, counts = np.unique(s, return_inverse=True, return_counts=True)
    # mid-rank of each distinct score (1-based)
    upper = np.cumsum(counts)
    mid = upper - (counts - 1) / 2.0
    rank_sum = float(mid[inv][y == 1].sum())
    return (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def correlation_matrix(m: LabeledMatrix) -> np.ndarray:
    X = m.X
    for j, name in enumerate(m.feature_names):
        if np.all(X[:, j] == X[0, j]):
            raise ValueError(f"constant column {name!r} has no correlation")
    r = np.corrcoef(X, rowvar=False)
    r = (r + r.T) / 2.0
    np.fill_diagonal(r, 1.0)
    return r


@dataclass(frozen=True)
class MetricsRecord:
    train_accuracy: float
    test_accuracy: float
    precision_0: float
    recall_0: float
    f1_0: float
    precision_1: float
    recall_1: float
    f1_1: float
    mcc: float
    auc: float

    @classmethod
    def from_predictions(cls, y_train, pred_train, y_test, pred_test, scores_test) -> "MetricsRecord":
        cm = confusion(y_test, pred_test)
        return cls(
            train_accuracy=float(np.mean(np.asarray(y_train) == np.asarray(pred_train))),
            test_accuracy=(cm[0] + cm[3]) / len(y_test),
            **prf(cm),
            mcc=mcc(cm),
            auc=auc(y_test, scores_test),
        )

    @classmethod
    def mean(cls, records: Sequence["MetricsRecord"]) -> "MetricsRecord":
        return cls(**{f.name: math.fsum(getattr(r, f.name) for r in records) / len(records) for f in fields(cls)})


@dataclass
class SpecResult:
    spec: ClassifierSpec
    mean: MetricsRecord | None = None
    folds: list[MetricsRecord] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.spec.name,
            "label": self.spec.label,
            "mean": None if self.mean is None else asdict(self.mean),
            "folds": [asdict(r) for r in self.folds],
            "error": self.error,
        }


@dataclass
class EvaluationReport:
    feature_mode: str
    k: int
    seed: int
    crfd_scope: str
    results: list[SpecResult]
    feature_names: tuple[str, ...]
    flags: list[str] = field(default_factory=list)
    models: dict[str, list[Model]] = field(default_factory=dict, repr=False)

    def result(self, name: str) -> SpecResult:
        for r in self.results:
            if r.spec.name == name or r.spec.label == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "feature_mode": self.feature_mode,
            "k": self.k,
            "seed": self.seed,
            "crfd_scope": self.crfd_scope,
            "feature_names": list(self.feature_names),
            "flags": list(self.flags),
            "results": [r.to_dict() for r in self.results],
        }

    def to_markdown(self) -> str:
        lines = [f"Feature mode: {self.feature_mode} (k={self.k}, seed={self.seed}, scope={self.crfd_scope})"]
        lines += [f"> {flag}" for flag in self.flags]
        lines.append("")
        lines.append(metrics_table([(r.spec.label, r.mean, r.error) for r in self.results]))
        return "\n".join(lines)


_METRIC_HEADERS = ("TraAcc", "TstAcc", "Prec-0", "Rec-0", "F1-0", "Prec-1", "Rec-1", "F1-1", "MCC", "AUC")


def metrics_table(rows, first_header: str = "Algorithm", extra_headers: Sequence[str] = ()) -> str:
    """Markdown table in the TraAcc ... AUC column layout.

    ``rows`` holds (label, MetricsRecord | None, error) or, with
    ``extra_headers``, (label, extras tuple, MetricsRecord | None, error).
    """
    headers = (first_header, *extra_headers, *_METRIC_HEADERS)
    out = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        if extra_headers:
            label, extras, rec, err = row
        else:
            (label, rec, err), extras = row, ()
        if rec is None:
            cells = [f"error: {err}"] + [""] * (len(_METRIC_HEADERS) - 1)
        else:
            cells = [f"{v:.2f}" for v in asdict(rec).values()]
        out.append("| " + " | ".join([label, *extras, *cells]) + " |")
    return "\n".join(out)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("CRFD_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _evaluate_fold(train: LabeledMatrix, test: LabeledMatrix, specs, seed):
    """Fit every spec on ``train``; returns a list of (record, model) or exceptions."""
    out: list = []
    knn_cache: dict[str, np.ndarray] = {}
    knn_k = [s.resolved()["k"] for s in specs if s.algorithm == "knn" and _valid(s)]
    for spec in specs:
        try:
            model = fit_model(spec, train, seed)
            if isinstance(model, KNNModel) and knn_k:
                # neighbour lists are prefix-consistent, so one query serves every k
                if not knn_cache:
                    k_max = min(max(knn_k), train.X.shape[0])
                    probe = KNNModel(model.X, model.y, k_max)
                    knn_cache["train"] = probe.kneighbors(train.X)
                    knn_cache["test"] = probe.kneighbors(test.X)
                kk = model.k_eff
                nb_tr, nb_te = knn_cache["train"][:, :kk], knn_cache["test"][:, :kk]
                pred_tr = model.predict_labels(train.X, neighbors=nb_tr)
                pred_te = model.predict_labels(test.X, neighbors=nb_te)
                scores = model.predict_scores(test.X, neighbors=nb_te)
            else:
                pred_tr = model.predict_labels(train.X)
                pred_te = model.predict_labels(test.X)
                scores = model.predict_scores(test.X)
            rec = MetricsRecord.from_predictions(train.y, pred_tr, test.y, pred_te, scores)
            out.append((rec, model))
        except Exception as exc:  # one failing spec must not sink the others
            out.append(exc)
    return out


def _valid(spec) -> bool:
    try:
        spec.check()
        return True
    except ValueError:
        return False


def cross_validate_matrix(
    m: LabeledMatrix,
    feature_mode: str,
    specs: Sequence[ClassifierSpec],
    k: int = 5,
    seed: int = 0,
    crfd_scope: str = "train_only",
    threads: int | None = None,
    keep_models: bool = False,
) -> EvaluationReport:
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {feature_mode!r}")
    if crfd_scope not in CRFD_SCOPES:
        raise ValueError(f"unknown crfd scope {crfd_scope!r}")
    specs = list(specs)
    flags = []
    if feature_mode != "basic" and crfd_scope == "full_dataset":
        flags.append(LEAKY_FLAG)
        m = apply_scalers(m, fit_scalers(m, feature_mode))
    assignment = stratified_folds(m.y, k, seed)

    def run_fold(f):
        tr_idx, te_idx = assignment.split(f)
        train, test = m.subset(tr_idx), m.subset(te_idx)
        if feature_mode != "basic" and crfd_scope == "train_only":
            scalers = fit_scalers(train, feature_mode)
            train, test = apply_scalers(train, scalers), apply_scalers(test, scalers)
        return _evaluate_fold(train, test, specs, seed)

    n_threads = min(resolve_threads(threads), k)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            per_fold = list(pool.map(run_fold, range(k)))
    else:
        per_fold = [run_fold(f) for f in range(k)]

    results, models = [], {}
    for i, spec in enumerate(specs):
        outcomes = [fold[i] for fold in per_fold]
        errors = [o for o in outcomes if isinstance(o, Exception)]
        if errors:
            results.append(SpecResult(spec, error=f"{type(errors[0]).__name__}: {errors[0]}"))
            continue
        records = [rec for rec, _ in outcomes]
        results.append(SpecResult(spec, mean=MetricsRecord.mean(records), folds=records))
        if keep_models:
            models[spec.name] = [model for _, model in outcomes]
    return EvaluationReport(
        feature_mode=feature_mode,
        k=k,
        seed=seed,
        crfd_scope=crfd_scope,
        results=results,
        feature_names=m.feature_names,
        flags=flags,
        models=models,
    )


def cross_validate(
    d: Dataset,
    feature_mode: str,
    specs: Sequence[ClassifierSpec],
    k: int = 5,
    seed: int = 0,
    crfd_scope: str = "train_only",
    group_by_reviewer: bool = False,
    reference_date: float | None = None,
    threads: int | None = None,
    keep_models: bool = False,
) -> EvaluationReport:
    m = build_matrix(d, reference_date=reference_date, group_by_reviewer=group_by_reviewer)
    report = cross_validate_matrix(m, feature_mode, specs, k, seed, crfd_scope, threads, keep_models)
    single = sum(1 for rs in d.reviews_by_reviewer().values() if len(rs) == 1)
    if single:
        report.flags.append(f"{single} single-review reviewer(s): avg_gap and activity set to 0")
    return report


@dataclass(frozen=True)
class ImprovementRow:
    algorithm: str
    label: str
    mcc_basic: float | None
    mcc_cumulative: float | None
    mcc_improvement_pct: float | None
    auc_basic: float | None
    auc_cumulative: float | None
    auc_improvement_pct: float | None


def improvement_pct(basic: float | None, cumulative: float | None) -> float | None:
    if basic is None or cumulative is None or basic == 0:
        return None
    return (cumulative - basic) / basic * 100.0


def compare_feature_sets(basic: EvaluationReport, cumulative: EvaluationReport) -> list[ImprovementRow]:
    names_b = [r.spec.name for r in basic.results]
    names_c = [r.spec.name for r in cumulative.results]
    if names_b != names_c:
        raise ValueError(f"algorithm lists differ: {names_b} vs {names_c}")
    if basic.k != cumulative.k:
        raise ValueError(f"fold counts differ: {basic.k} vs {cumulative.k}")
    rows = []
    for rb, rc in zip(basic.results, cumulative.results):
        mb = rb.mean.mcc if rb.mean else None
        mc = rc.mean.mcc if rc.mean else None
        ab = rb.mean.auc if rb.mean else None
        ac = rc.mean.auc if rc.mean else None
        rows.append(ImprovementRow(rb.spec.name, rb.spec.label, mb, mc, improvement_pct(mb, mc),
                                   ab, ac, improvement_pct(ab, ac)))
    return rows


def improvement_markdown(rows: Sequence[ImprovementRow]) -> str:
    def fmt(v, spec):
        return "n/a" if v is None else format(v, spec)

    out = [
        "| Algorithm | MCC Basic | MCC Cumulative | MCC Improv.(%) | AUC Basic | AUC Cumulative | AUC Improv.(%) |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        out.append(
            f"| {r.label} | {fmt(r.mcc_basic, '.2f')} | {fmt(r.mcc_cumulative, '.2f')} | "
            f"{fmt(r.mcc_improvement_pct, '.1f')} | {fmt(r.auc_basic, '.2f')} | "
            f"{fmt(r.auc_cumulative, '.2f')} | {fmt(r.auc_improvement_pct, '.1f')} |"
        )
    return "\n".join(out)


def dumps(payload) -> str:
    """Canonical JSON used for every report file."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"
