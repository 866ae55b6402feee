"""Gini (mean decrease in impurity) importance and top-k feature selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifiers import TreeModel
from .data import LabeledMatrix


@dataclass(frozen=True, eq=False)
class Importances:
    values: np.ndarray
    no_split: bool = False


def gini_importance(model) -> Importances:
    """Per-feature impurity decrease weighted by node sample share, normalized to 1.

    A tree without any split returns all zeros with ``no_split`` set.
    """
    if not isinstance(model, TreeModel):
        raise TypeError(f"gini importance needs a tree model, got {type(model).__name__}")
    if model.node_count < 1:
        raise ValueError("empty tree")
    out = np.zeros(model.n_features)
    root_n = float(model.n_samples[0])
    for node in np.flatnonzero(model.left >= 0):
        l, r = model.left[node], model.right[node]
        decrease = (
            model.n_samples[node] * model.impurity[node]
            - model.n_samples[l] * model.impurity[l]
            - model.n_samples[r] * model.impurity[r]
        ) / root_n
        out[model.feature[node]] += decrease
    total = out.sum()
    if total <= 0:
        return Importances(np.zeros(model.n_features), no_split=True)
    return Importances(out / total)


def averaged_importance(models: Sequence[TreeModel], feature_names: Sequence[str]) -> list[tuple[str, float]]:
    """Mean importance per feature across folds, most important first."""
    if not models:
        raise ValueError("need at least one model")
    mean = np.mean([gini_importance(m).values for m in models], axis=0)
    ranking = [(name, float(v)) for name, v in zip(feature_names, mean)]
    return sorted(ranking, key=lambda item: (-item[1], item[0]))


def select_top_k(ranking: Sequence[tuple[str, float]], m: LabeledMatrix, k: int = 3):
    """Restrict ``m`` to the ``k`` best-ranked features, in ranking order."""
    if not 1 <= k <= len(m.feature_names):
        raise ValueError(f"k must be in [1, {len(m.feature_names)}], got {k}")
    names = [name for name, _ in ranking[:k]]
    return names, m.columns(names)
