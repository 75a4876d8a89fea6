"""The full command-line pipeline in a scratch directory.

Everything the library does is reachable from the `mipsvm` command: train
writes a model file (magic "MEMOIR1") plus a tab-separated epoch log,
predict/eval consume it, audit measures a backend's margin gaps, and bench
generates synthetic workloads.  This script drives main() directly so it
runs without installing the console script.
"""

import json
import tempfile
from pathlib import Path

from mipsvm.cli import main
from mipsvm.dataio import write_dataset
from mipsvm.synth import make_toy_dataset, train_test_split

workdir = Path(tempfile.mkdtemp(prefix="mipsvm-demo-"))
print("working in", workdir)

train_file = workdir / "train.txt"
test_file = workdir / "test.txt"
train_set, test_set = train_test_split(make_toy_dataset(points_per_class=40),
                                       0.25, seed=0)
write_dataset(train_file, train_set)
write_dataset(test_file, test_set)
print(f"wrote {len(train_set)} train / {len(test_set)} test examples")

model = workdir / "model.bin"
log = workdir / "run.tsv"

print("\n$ mipsvm train ...")
main(["train", str(train_file), "--algo", "l2", "--backend", "exact",
      "--epochs", "40", "--seed", "0", "--heldout", str(test_file),
      "--model-out", str(model), "--log-out", str(log)])

print("\nfirst lines of the epoch log:")
for line in log.read_text().splitlines()[:4]:
    print(" ", line)

print("\n$ mipsvm eval ...")
main(["eval", "--model", str(model), "--test", str(test_file)])

print("\n$ mipsvm predict ... (first 10 labels)")
pred_file = workdir / "pred.txt"
main(["predict", "--model", str(model), "--input", str(test_file),
      "--output", str(pred_file)])
print(" ", " ".join(pred_file.read_text().split()[:10]))

print("\n$ mipsvm audit ... (weak LSH so gaps exist)")
main(["audit", "--model", str(model), "--queries", str(test_file),
      "--epsilon", "0.1", "--backend", "simplelsh",
      "--lsh-bits", "4", "--lsh-tables", "2", "--seed", "1"])

print("\n$ mipsvm bench ...")
main(["bench", "--classes", "20", "--dim", "50", "--examples", "1000",
      "--epochs", "5", "--backend", "swgraph", "--seed", "2"])

print("\nmodel file starts with:", model.read_bytes()[:7])
