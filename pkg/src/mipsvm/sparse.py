"""Sparse vectors and the lazily-scaled per-class sparse weight matrix.

Every trainer, search index and metric in this package works on two
structures: :class:`SparseVector` (sorted index/value pairs with an explicit
dimension) and :class:`WeightMatrix` (one sparse row per class sharing a
single scale multiplier, so that scaling the whole matrix is O(1)).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse as sp

# The shared multiplier is folded back into the stored rows once it leaves
# this range; keeps double precision comfortable during long runs.
SCALE_FOLD_LOW = 1e-8
SCALE_FOLD_HIGH = 1e8


class SparseVector:
    """A sparse vector: strictly increasing indices, parallel values, fixed dim."""

    __slots__ = ("indices", "values", "dim")

    def __init__(self, indices, values, dim, *, check=True):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if check:
            if indices.ndim != 1 or values.ndim != 1:
                raise ValueError("indices and values must be 1-d")
            if indices.shape != values.shape:
                raise ValueError(
                    f"indices/values length mismatch: {indices.size} vs {values.size}"
                )
            if dim < 0:
                raise ValueError("dim must be nonnegative")
            if indices.size:
                if indices[0] < 0:
                    raise ValueError("negative feature index")
                if indices[-1] >= dim:
                    raise ValueError(
                        f"feature index {int(indices[-1])} out of range for dim {dim}"
                    )
                if indices.size > 1 and np.any(np.diff(indices) <= 0):
                    raise ValueError("indices must be strictly increasing")
        self.indices = indices
        self.values = values
        self.dim = int(dim)

    @classmethod
    def from_pairs(cls, pairs, dim):
        """Build from a dict or iterable of (index, value); drops explicit zeros."""
        items = sorted(pairs.items() if isinstance(pairs, dict) else pairs)
        if items:
            idx = np.array([i for i, _ in items], dtype=np.int64)
            val = np.array([v for _, v in items], dtype=np.float64)
            if idx.size > 1 and np.any(np.diff(idx) == 0):
                raise ValueError("duplicate feature index")
            keep = val != 0.0
            idx, val = idx[keep], val[keep]
        else:
            idx = np.empty(0, dtype=np.int64)
            val = np.empty(0, dtype=np.float64)
        return cls(idx, val, dim)

    @classmethod
    def zeros(cls, dim):
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), dim,
                   check=False)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def sq_norm(self) -> float:
        return float(np.dot(self.values, self.values))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def scaled(self, alpha) -> "SparseVector":
        return SparseVector(self.indices, alpha * self.values, self.dim, check=False)

    def drop_zeros(self) -> "SparseVector":
        keep = self.values != 0.0
        if keep.all():
            return self
        return SparseVector(self.indices[keep], self.values[keep], self.dim,
                            check=False)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        pairs = ", ".join(f"{int(i)}:{v:g}" for i, v in
                          zip(self.indices[:6], self.values[:6]))
        tail = ", ..." if self.nnz > 6 else ""
        return f"SparseVector({{{pairs}{tail}}}, dim={self.dim})"


def _dot_arrays(ai, av, bi, bv) -> float:
    if ai.size == 0 or bi.size == 0:
        return 0.0
    if ai.size > bi.size:
        ai, av, bi, bv = bi, bv, ai, av
    pos = np.searchsorted(bi, ai)
    in_range = pos < bi.size
    hit = np.zeros(ai.size, dtype=bool)
    hit[in_range] = bi[pos[in_range]] == ai[in_range]
    if not hit.any():
        return 0.0
    return float(np.dot(av[hit], bv[pos[hit]]))


def dot(a: SparseVector, b: SparseVector) -> float:
    """Exact sparse inner product by merge over the sorted index arrays."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return _dot_arrays(a.indices, a.values, b.indices, b.values)


class WeightMatrix:
    """C sparse class rows sharing one lazy scale multiplier.

    The logical value of row ``c`` is ``scale * stored_row_c``; all public
    operations are defined on logical values.  Multiplying the whole matrix
    by a positive factor only touches ``scale``, which is what makes the
    regularization step of the trainers O(1) instead of O(nnz).

    Cached per-row squared norms (of the stored, unscaled rows) and their sum
    are maintained incrementally; the squared norm of a row is recomputed
    exactly from its value array on every row update, so the caches cannot
    drift with the number of operations.

    Single-writer: concurrent read-only access (dot products against a
    frozen matrix) is safe, concurrent mutation is not.
    """

    def __init__(self, num_classes: int, dim: int):
        if num_classes < 1:
            raise ValueError("need at least one class")
        if dim < 1:
            raise ValueError("need at least one feature dimension")
        self.num_classes = int(num_classes)
        self.dim = int(dim)
        self.scale = 1.0
        self._idx = [np.empty(0, dtype=np.int64) for _ in range(num_classes)]
        self._val = [np.empty(0, dtype=np.float64) for _ in range(num_classes)]
        self._row_sq = np.zeros(num_classes)
        self._frob_sq = 0.0
        self.fold_count = 0

    # -- constructors -------------------------------------------------

    @classmethod
    def from_rows(cls, rows, dim):
        """Build from an iterable of (class_id, SparseVector) logical rows."""
        rows = list(rows)
        if not rows:
            raise ValueError("need at least one row")
        num_classes = max(c for c, _ in rows) + 1
        W = cls(num_classes, dim)
        seen = set()
        for c, r in rows:
            if c in seen:
                raise ValueError(f"duplicate class id {c}")
            seen.add(c)
            if r.dim != dim:
                raise ValueError(f"row {c} has dim {r.dim}, expected {dim}")
            r = r.drop_zeros()
            W._idx[c] = r.indices.copy()
            W._val[c] = r.values.copy()
            W._row_sq[c] = r.sq_norm()
        W._frob_sq = float(W._row_sq.sum())
        return W

    # -- internal helpers ---------------------------------------------

    def _check_class(self, c):
        if not 0 <= c < self.num_classes:
            raise IndexError(f"class id {c} out of range [0, {self.num_classes})")

    def _fold(self):
        s = self.scale
        for c in range(self.num_classes):
            val = self._val[c] * s
            keep = val != 0.0
            if not keep.all():
                self._idx[c] = self._idx[c][keep]
                val = val[keep]
            self._val[c] = val
            self._row_sq[c] = float(np.dot(val, val))
        self.scale = 1.0
        self._frob_sq = float(self._row_sq.sum())
        self.fold_count += 1

    # -- mutating operations ------------------------------------------

    def add_to_row(self, c: int, coeff: float, x: SparseVector) -> None:
        """Logical row c += coeff * x (stored row takes coeff/scale * x)."""
        self._check_class(c)
        if x.dim != self.dim:
            raise ValueError(f"vector dim {x.dim} does not match matrix dim {self.dim}")
        if coeff == 0.0 or x.indices.size == 0:
            return
        sc = coeff / self.scale
        idx, val = self._idx[c], self._val[c]
        if idx.size == 0:
            new_idx = x.indices.copy()
            new_val = sc * x.values
        else:
            new_idx = np.union1d(idx, x.indices)
            new_val = np.zeros(new_idx.size)
            new_val[np.searchsorted(new_idx, idx)] = val
            new_val[np.searchsorted(new_idx, x.indices)] += sc * x.values
        self._idx[c] = new_idx
        self._val[c] = new_val
        new_sq = float(np.dot(new_val, new_val))
        self._frob_sq += new_sq - self._row_sq[c]
        self._row_sq[c] = new_sq

    def global_scale(self, alpha: float) -> None:
        """Logical W *= alpha in O(1); folds into rows on extreme scales."""
        if alpha <= 0.0:
            raise ValueError("scale factor must be positive")
        self.scale *= alpha
        if not SCALE_FOLD_LOW <= self.scale <= SCALE_FOLD_HIGH:
            self._fold()

    def project_to_ball(self, lam: float) -> float:
        """Scale W into the Frobenius ball of radius 1/sqrt(lam); returns the factor."""
        if lam < 0.0:
            raise ValueError("lam must be nonnegative")
        fro = self.frob_norm()
        if lam == 0.0 or fro == 0.0:
            return 1.0
        phi = min(1.0, 1.0 / (math.sqrt(lam) * fro))
        if phi < 1.0:
            self.global_scale(phi)
        return phi

    def truncate_row(self, c: int, tau: float) -> None:
        """Soft-threshold logical row c at tau; drops the resulting zeros."""
        self._check_class(c)
        if tau < 0.0:
            raise ValueError("threshold must be nonnegative")
        idx, val = self._idx[c], self._val[c]
        if idx.size == 0:
            return
        if tau == 0.0:
            keep = val != 0.0
            new_idx, new_val = idx[keep], val[keep]
        else:
            logical = self.scale * val
            shrunk = np.sign(logical) * np.maximum(np.abs(logical) - tau, 0.0)
            keep = shrunk != 0.0
            new_idx = idx[keep]
            new_val = shrunk[keep] / self.scale
        self._idx[c] = new_idx
        self._val[c] = new_val
        new_sq = float(np.dot(new_val, new_val))
        self._frob_sq += new_sq - self._row_sq[c]
        self._row_sq[c] = new_sq

    # -- read-only views ----------------------------------------------

    def materialize_row(self, c: int) -> SparseVector:
        """Logical row c with the scale folded in; explicit zeros dropped."""
        self._check_class(c)
        val = self.scale * self._val[c]
        keep = val != 0.0
        if keep.all():
            return SparseVector(self._idx[c].copy(), val, self.dim, check=False)
        return SparseVector(self._idx[c][keep], val[keep], self.dim, check=False)

    def stored_row(self, c: int) -> SparseVector:
        """Stored (unscaled) row c; all rows share the same implicit scale."""
        self._check_class(c)
        idx, val = self._idx[c], self._val[c]
        keep = val != 0.0
        if keep.all():
            return SparseVector(idx.copy(), val.copy(), self.dim, check=False)
        return SparseVector(idx[keep], val[keep], self.dim, check=False)

    def row_dot(self, c: int, x: SparseVector) -> float:
        """Logical inner product of row c with x."""
        self._check_class(c)
        if x.dim != self.dim:
            raise ValueError(f"vector dim {x.dim} does not match matrix dim {self.dim}")
        return self.scale * _dot_arrays(self._idx[c], self._val[c],
                                        x.indices, x.values)

    def row_norm(self, c: int) -> float:
        self._check_class(c)
        return self.scale * math.sqrt(max(self._row_sq[c], 0.0))

    def frob_norm(self) -> float:
        return self.scale * math.sqrt(max(self._frob_sq, 0.0))

    @property
    def row_sq_norms(self) -> np.ndarray:
        """Cached squared norms of the stored (unscaled) rows."""
        return self._row_sq.copy()

    @property
    def frob_sq(self) -> float:
        """Cached squared Frobenius norm of the stored (unscaled) matrix."""
        return self._frob_sq

    def nnz(self) -> int:
        return sum(idx.size for idx in self._idx)

    def to_csr(self) -> sp.csr_matrix:
        """Logical matrix as a scipy CSR, for vectorized scoring paths."""
        indptr = np.zeros(self.num_classes + 1, dtype=np.int64)
        np.cumsum([idx.size for idx in self._idx], out=indptr[1:])
        if indptr[-1] == 0:
            return sp.csr_matrix((self.num_classes, self.dim))
        indices = np.concatenate(self._idx)
        data = self.scale * np.concatenate(self._val)
        return sp.csr_matrix((data, indices, indptr),
                             shape=(self.num_classes, self.dim))

    def __repr__(self):
        return (f"WeightMatrix(num_classes={self.num_classes}, dim={self.dim}, "
                f"nnz={self.nnz()}, scale={self.scale:g})")
