"""Training the two SVM variants with exact and approximate margins.

The l2 trainer is Pegasos-shaped: shrink, hinge updates on a sampled batch,
project onto the ball of radius 1/sqrt(lam).  The l1 trainer replaces the
shrink/project pair with per-batch soft-thresholding of the touched rows,
which is what keeps the weights sparse.  Swapping the margin backend only
changes who proposes the rival class.
"""

import numpy as np

from mipsvm import TrainConfig, train_l1, train_l2
from mipsvm.metrics import evaluate
from mipsvm.synth import make_synthetic, make_toy_dataset, train_test_split

# -- the bundled toy problem: 3 classes on the plane, margin >= 0.5 --------
toy = make_toy_dataset()
cfg = TrainConfig(lam=1.0, epochs=40, seed=0, backend="exact")
W, log = train_l2(toy, cfg)
print("toy set, l2/exact:")
print(f"  accuracy {evaluate(W, toy).accuracy:.3f}   "
      f"objective {log.objective[0]:.3f} -> {log.objective[-1]:.3f}")

# -- a 50-class synthetic problem, exact vs approximate backends -----------
data = make_synthetic(num_classes=50, dim=100, n=5000, noise=0.4, seed=1)
train, test = train_test_split(data, 0.2, seed=2)

print("\n50 classes x 100 dims, 4000 train / 1000 test, l2, T=25:")
for backend in ("exact", "simplelsh", "swgraph"):
    cfg = TrainConfig(lam=1.0, epochs=25, seed=3, backend=backend)
    W, log = train_l2(train, cfg)
    rep = evaluate(W, test)
    print(f"  {backend:<10} test accuracy {rep.accuracy:.4f}   "
          f"epoch time {np.mean(log.seconds):.2f}s")

# -- the l1 sparsity dial ---------------------------------------------------
print("\nl1 regularization vs sparsity (same seed, T=25):")
for lam in (1e-6, 1e-3, 1e-2, 5e-2):
    cfg = TrainConfig(lam=lam, epochs=25, seed=4, backend="exact")
    W, log = train_l1(train, cfg)
    rep = evaluate(W, test)
    print(f"  lam={lam:<8g} nnz={log.nnz[-1]:<6} "
          f"test accuracy {rep.accuracy:.4f}")
