"""Pretrain the two-branch contrastive model on the toy benchmark.

Every graph gets two stochastic views (edge dropping + feature masking).
The geometry branch pushes a GCN readout of each view through a projection
head; the structural branch embeds the joint signature of each view.  Both
branches align their views with NT-Xent.  Afterwards, a linear probe on the
frozen representation shows what each branch contributed.

Run:  python demos/04_pretraining.py   (about half a minute)
"""

import numpy as np

from chcl import TrainConfig, linear_probe, pretrain, toy_dataset
from chcl.eval import embed_dataset

ds = toy_dataset(seed=42)
print(f"dataset: {len(ds)} graphs, 4 classes, all-ones node features")

cfg = TrainConfig(epochs=40, batch_size=32, seed=0)
result = pretrain(ds, cfg)

first, last = result.trace[0], result.trace[-1]
print(f"\nloss trace ({cfg.epochs} epochs):")
print(f"  epoch {first[0]:>3}: total {first[1]:.4f} (geo {first[2]:.4f}, structural {first[3]:.4f})")
print(f"  epoch {last[0]:>3}: total {last[1]:.4f} (geo {last[2]:.4f}, structural {last[3]:.4f})")

labels = ds.labels()
for source in ("geo", "ch", "concat", "signature"):
    emb = embed_dataset(result.params, ds, source)
    acc = linear_probe(emb, labels, k_folds=4, seed=1, source=source).accuracy
    print(f"  probe on {source:<10}: accuracy {acc:.3f}   (dim {emb.shape[1]})")

print("\nThe structural branch carries the class signal on featureless graphs;")
print("the geometry encoder alone sees only degree statistics.")
