"""Sign-projection geometry and the (epsilon, delta) audit.

Two facts make SimpleLSH work: a random hyperplane separates two vectors
with probability theta/pi, and augmenting data rows with sqrt(1 - ||w/U||^2)
turns maximum inner product into maximum cosine.  The audit then measures
how often an approximate margin overshoots the exact one by more than
epsilon: an empirical delta for the backend.
"""

import numpy as np

from mipsvm import (SparseVector, WeightMatrix, audit_inexactness, build_index,
                    hashing_quality, sign_bits, simplelsh_transform)
from mipsvm.dataio import Dataset

rng = np.random.default_rng(0)

# 1. Collision law: P[same sign bit] = 1 - theta/pi.
planes = rng.standard_normal((200_000, 2))
print("angle      measured   1 - theta/pi")
for theta in (0.0, np.pi / 6, np.pi / 3, np.pi / 2, 2 * np.pi / 3):
    a = np.array([1.0, 0.0])
    b = np.array([np.cos(theta), np.sin(theta)])
    rate = (sign_bits(a, planes) == sign_bits(b, planes)).mean()
    print(f"{theta:7.4f} {rate:10.4f} {1 - theta / np.pi:14.4f}")

# 2. The augmentation identity: inner products survive up to a constant.
w = SparseVector.from_pairs({0: 0.3, 2: 0.4}, 5)
x = SparseVector.from_pairs({0: 1.0, 2: 2.0}, 5)
U = 1.0
zd = simplelsh_transform(w, U)
zq = simplelsh_transform(x, U, query=True)
from mipsvm import dot
print(f"\naugmented (data . query) = {dot(zd, zq):.6f}")
print(f"(w . x) / (U ||x||)      = {dot(w, x) / (U * x.norm()):.6f}")

# 3. The hashing-quality diagnostic of the trade-off between the target
# threshold S and the slack factor c (printed-formula form).
print("\nhashing quality rho(c, S):")
for c in (0.3, 0.5, 0.7, 0.9):
    row = "  ".join(f"{hashing_quality(c, S):.3f}" for S in (0.2, 0.6, 1.0, 1.4))
    print(f"  c={c}: {row}")

# 4. The audit over a random model: tiny codes make real errors, epsilon
# sweeps show the empirical delta falling.
C, d = 200, 32
W = WeightMatrix(C, d)
for c in range(C):
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    W.add_to_row(c, 1.0, SparseVector(np.arange(d), v, d, check=False))
rows = [(c, W.materialize_row(c)) for c in range(C)]
queries = Dataset([(int(rng.integers(C)),
                    SparseVector(np.arange(d),
                                 rng.standard_normal(d) / np.sqrt(d), d,
                                 check=False)) for _ in range(300)], d, C)
weak = build_index(rows, "simplelsh", dim=d, lsh_bits=4, lsh_tables=2, seed=1)
print("\nepsilon   delta_hat   mean gap")
for eps in (0.0, 0.05, 0.1, 0.25, 0.5):
    rep = audit_inexactness(weak, W, queries, epsilon=eps)
    print(f"{eps:7.2f} {rep.delta_hat:11.3f} {rep.mean_gap:10.4f}")

exact = build_index(rows, "exact", dim=d)
rep = audit_inexactness(exact, W, queries, epsilon=0.0)
print(f"\nexact backend: delta_hat = {rep.delta_hat} (always 0)")
