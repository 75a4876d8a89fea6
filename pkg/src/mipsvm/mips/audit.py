"""Audit of the gap between approximate and exact margins.

The approximate margin can only exceed the exact one (the exact rival
maximizes the subtracted score), so the audited quantity is the fraction of
queries whose gap exceeds a chosen epsilon: an empirical delta for the
(epsilon, delta) contract of a backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..margin import exact_margin, inexact_margin
from .base import MipsIndex

if TYPE_CHECKING:
    from ..dataio import Dataset
    from ..sparse import WeightMatrix


@dataclass(frozen=True)
class AuditReport:
    n: int
    epsilon: float
    delta_hat: float
    mean_gap: float
    max_gap: float
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "delta_hat": self.delta_hat,
            "mean_gap": self.mean_gap,
            "max_gap": self.max_gap,
            "histogram": {
                "counts": self.hist_counts.tolist(),
                "edges": self.hist_edges.tolist(),
            },
        }


def audit_inexactness(index: MipsIndex, W: "WeightMatrix", queries: "Dataset",
                      epsilon: float, bins: int = 20) -> AuditReport:
    """Empirical P(approx_margin - exact_margin > epsilon) plus a gap histogram."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    if len(queries) == 0:
        raise ValueError("empty query set")
    gaps = np.empty(len(queries))
    for i, (y, x) in enumerate(queries.examples):
        m_exact = exact_margin(W, x, y).margin
        m_approx = inexact_margin(index, W, x, y).margin
        gaps[i] = m_approx - m_exact
    counts, edges = np.histogram(gaps, bins=bins)
    return AuditReport(
        n=len(queries),
        epsilon=float(epsilon),
        delta_hat=float((gaps > epsilon).mean()),
        mean_gap=float(gaps.mean()),
        max_gap=float(gaps.max()),
        hist_counts=counts,
        hist_edges=edges,
    )


def recall_at_1(index: MipsIndex, oracle: MipsIndex, queries) -> float:
    """Fraction of (x, exclude) queries where ``index`` returns the oracle's class."""
    queries = list(queries)
    if not queries:
        raise ValueError("empty query set")
    hits = 0
    for x, exclude in queries:
        got, _ = index.query(x, exclude=exclude)
        want, _ = oracle.query(x, exclude=exclude)
        hits += got == want
    return hits / len(queries)
