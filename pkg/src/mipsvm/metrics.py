"""Prediction and the two evaluation measures: accuracy and macro-F1.

Macro-F1 is the harmonic mean of macro-averaged precision and macro-averaged
recall.  The per-class ratios are reduced with exact rational arithmetic and
converted to float once at the end, so hand-checkable values come out exact.
A flag switches to the other common convention (mean of per-class F1).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .sparse import SparseVector, WeightMatrix

if TYPE_CHECKING:
    from .dataio import Dataset


@dataclass
class PredictionSet:
    """Paired true and predicted class ids."""

    true_labels: np.ndarray
    predicted: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        self.predicted = np.asarray(self.predicted, dtype=np.int64)
        if self.true_labels.shape != self.predicted.shape:
            raise ValueError("true/predicted length mismatch")
        if self.true_labels.size:
            hi = int(max(self.true_labels.max(), self.predicted.max()))
            lo = int(min(self.true_labels.min(), self.predicted.min()))
            if lo < 0 or hi >= self.num_classes:
                raise ValueError("label outside [0, num_classes)")

    def __len__(self):
        return int(self.true_labels.size)


def predict(W: WeightMatrix, x: SparseVector) -> int:
    """argmax over all class scores, ties toward the smallest class id."""
    best_c = 0
    best_s = -np.inf
    for c in range(W.num_classes):
        s = W.row_dot(c, x)
        if s > best_s:
            best_s = s
            best_c = c
    return best_c

def predict_batch(W: WeightMatrix, data: "Dataset") -> np.ndarray:
    """Vectorized prediction for a whole dataset (same tie-breaking as predict)."""
    scores = (data.to_csr() @ W.to_csr().T).toarray()
    return scores.argmax(axis=1).astype(np.int64)


def accuracy(p: PredictionSet) -> float:
    if len(p) == 0:
        raise ValueError("empty prediction set")
    return float((p.true_labels == p.predicted).mean())


def macro_f1(p: PredictionSet, *, mean_per_class: bool = False) -> float:
    """Macro-F1 over the classes present in the truth or the predictions.

    Default: harmonic mean of macro-precision and macro-recall.  A class
    with no predicted (resp. actual) positives contributes precision
    (resp. recall) 0.  ``mean_per_class=True`` averages per-class F1 scores
    instead.
    """
    if len(p) == 0:
        raise ValueError("empty prediction set")
    present = np.union1d(np.unique(p.true_labels), np.unique(p.predicted))
    tp = {c: 0 for c in present}
    pred_n = {c: 0 for c in present}
    true_n = {c: 0 for c in present}
    for t, q in zip(p.true_labels.tolist(), p.predicted.tolist()):
        true_n[t] += 1
        pred_n[q] += 1
        if t == q:
            tp[t] += 1
    k = len(present)
    if mean_per_class:
        total = Fraction(0)
        for c in present:
            denom = pred_n[c] + true_n[c]
            if denom:
                total += Fraction(2 * tp[c], denom)
        return float(total / k)
    map_sum = sum((Fraction(tp[c], pred_n[c]) for c in present if pred_n[c]),
                  Fraction(0))
    mar_sum = sum((Fraction(tp[c], true_n[c]) for c in present if true_n[c]),
                  Fraction(0))
    ma_p = map_sum / k
    ma_r = mar_sum / k
    if ma_p + ma_r == 0:
        return 0.0
    return float(2 * ma_p * ma_r / (ma_p + ma_r))


@dataclass(frozen=True)
class EvalReport:
    n: int
    accuracy: float
    macro_f1: float
    predict_seconds: float

    def to_dict(self) -> dict:
        return {"n": self.n, "accuracy": self.accuracy,
                "macro_f1": self.macro_f1,
                "predict_seconds": self.predict_seconds}


def evaluate(W: WeightMatrix, data: "Dataset") -> EvalReport:
    """Predict a whole dataset with exact scoring and report both measures."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    t0 = time.perf_counter()
    pred = predict_batch(W, data)
    seconds = time.perf_counter() - t0
    truth = data.labels_array()
    C = max(W.num_classes, int(truth.max()) + 1 if truth.size else 1)
    pset = PredictionSet(truth, pred, C)
    return EvalReport(n=len(data), accuracy=accuracy(pset),
                      macro_f1=macro_f1(pset), predict_seconds=seconds)
