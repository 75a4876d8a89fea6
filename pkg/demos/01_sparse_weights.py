"""Sparse vectors and the lazily-scaled weight matrix.

The whole package stands on two structures: SparseVector (sorted
index/value pairs) and WeightMatrix (one sparse row per class times one
shared scale factor).  This walk-through shows why the shared factor makes
regularization free and how the caches stay honest.
"""

import numpy as np

from mipsvm import SparseVector, WeightMatrix, dot

# Two sparse vectors in a 10-dimensional space.
a = SparseVector.from_pairs({0: 2.0, 3: 1.0}, 10)
b = SparseVector.from_pairs({0: 0.5, 3: 4.0, 7: -1.0}, 10)
print("a =", a)
print("b =", b)
print("dot(a, b) =", dot(a, b), "(2*0.5 + 1*4 = 5)")

# A 3-class weight matrix over the same space.
W = WeightMatrix(num_classes=3, dim=10)
W.add_to_row(0, 1.0, a)
W.add_to_row(1, -0.5, b)
W.add_to_row(2, 2.0, a)
print("\nafter three updates: nnz =", W.nnz(), " scale =", W.scale)

# Scaling the whole matrix is O(1): only the shared factor moves.
stored_before = W.row_sq_norms.copy()
W.global_scale(0.5)
W.global_scale(0.5)
print("after two global halvings: scale =", W.scale)
print("stored row norms untouched:",
      np.allclose(W.row_sq_norms, stored_before))
print("but the logical row 0 is scaled:", W.materialize_row(0))

# Updates land in logical units no matter what the scale is.
W.add_to_row(0, 1.0, SparseVector.from_pairs({3: 1.0}, 10))
print("\nlogical row 0 after +1.0 at feature 3:", W.materialize_row(0))

# Projection onto the Frobenius ball of radius 1/sqrt(lam) is also just a
# scale change.
lam = 4.0
phi = W.project_to_ball(lam)
print(f"\nprojection factor phi = {phi:.6f}")
print(f"||W||_F = {W.frob_norm():.6f} <= 1/sqrt(lam) = {1/np.sqrt(lam):.6f}")

# Thousands of tiny scale factors eventually leave the safe range for
# doubles; the matrix folds them back into the stored rows on its own.
before_folds = W.fold_count
for _ in range(3000):
    W.global_scale(0.99)
print(f"\nafter 3000 shrinks: scale = {W.scale:.3e}, "
      f"folds = {W.fold_count - before_folds}")
print("row 0 is still correct:", W.materialize_row(0))
