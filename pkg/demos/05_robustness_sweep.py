"""Perturbation-robustness protocol: probe accuracy and signature drift
as the corruption strength sweeps 0.05 .. 0.50.

Run:  python demos/05_robustness_sweep.py   (about a minute)
"""

import numpy as np

from chcl import TrainConfig, pretrain, robustness_sweep, synthetic_dataset

ds = synthetic_dataset(count_per_class=10, seed=3)
result = pretrain(ds, TrainConfig(epochs=12, batch_size=32, seed=0))

levels = [round(0.05 * i, 2) for i in range(1, 11)]
for kind in ("edge_drop", "feature_mask"):
    sweep = robustness_sweep(
        ds, result.params, kind, levels, n_seeds=2, seed=9, probe_folds=4, probe_seed=1
    )
    print(f"\n{kind}:")
    print(f"  {'level':>6} {'accuracy':>9} {'sig drift':>10}")
    for lv, acc, disp in zip(sweep.levels, sweep.accuracy_per_level, sweep.signature_distance_per_level):
        bar = "#" * int(round(acc * 20))
        print(f"  {lv:>6.2f} {acc:>9.3f} {disp:>10.3f}  {bar}")

print("\nSignature drift grows monotonically with the corruption strength, and")
print("feature masking leaves the structural signature untouched (drift 0):")
print("the signature depends only on the graph, not on node attributes.")
