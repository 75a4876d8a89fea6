"""Maximum-inner-product-search backends behind one incremental interface."""

from __future__ import annotations

from typing import TYPE_CHECKING

from .audit import AuditReport, audit_inexactness, recall_at_1
from .base import MipsIndex, NoCandidateError
from .exact import ExactIndex
from .simplelsh import (GaussianPlaneField, SimpleLshIndex, hash_code,
                        hashing_quality, sign_bits, simplelsh_transform)
from .swgraph import SwGraphIndex

if TYPE_CHECKING:
    from ..sparse import WeightMatrix

BACKENDS = ("exact", "simplelsh", "swgraph")


def build_index(rows, kind: str, dim: int | None = None, *, seed: int = 0,
                lsh_bits: int = 64, lsh_tables: int = 32,
                swg_max_neighbors: int = 16, swg_ef_construction: int = 100,
                swg_ef_search: int = 64) -> MipsIndex:
    """Build an index of the given kind over (class_id, row) pairs.

    Deterministic for a fixed seed and row order.  Duplicate class ids and
    mismatched dimensions are rejected.
    """
    rows = list(rows)
    if dim is None:
        if not rows:
            raise ValueError("dim is required when building from no rows")
        dim = rows[0][1].dim
    seen = set()
    for c, r in rows:
        if c in seen:
            raise ValueError(f"duplicate class id {c}")
        seen.add(c)
        if r.dim != dim:
            raise ValueError(f"row {c} has dim {r.dim}, expected {dim}")
    if kind == "exact":
        index: MipsIndex = ExactIndex(dim)
    elif kind == "simplelsh":
        index = SimpleLshIndex(dim, bits=lsh_bits, tables=lsh_tables, seed=seed)
    elif kind == "swgraph":
        index = SwGraphIndex(dim, max_neighbors=swg_max_neighbors,
                             ef_construction=swg_ef_construction,
                             ef_search=swg_ef_search, seed=seed)
    else:
        raise ValueError(f"unknown backend {kind!r}; expected one of {BACKENDS}")
    for c, r in rows:
        index.update_row(c, r)
    return index


def index_from_matrix(W: "WeightMatrix", kind: str, **params) -> MipsIndex:
    """Index over the materialized logical rows of a weight matrix."""
    rows = [(c, W.materialize_row(c)) for c in range(W.num_classes)]
    return build_index(rows, kind, dim=W.dim, **params)


__all__ = [
    "MipsIndex", "NoCandidateError", "ExactIndex", "SimpleLshIndex",
    "SwGraphIndex", "build_index", "index_from_matrix", "BACKENDS",
    "simplelsh_transform", "hash_code", "sign_bits", "hashing_quality",
    "GaussianPlaneField", "AuditReport", "audit_inexactness", "recall_at_1",
]
