"""Train the blob MLP, compress it adaptively and against a fixed rank.

Run: python demos/03_mlp_compression.py  (about 5 seconds)
"""

import numpy as np

from arsvd import (
    BlobSpec,
    TrainConfig,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    make_blobs,
    parameter_count,
    train_mlp,
)

Xtr, ytr, Xte, yte = make_blobs(BlobSpec(seed=0))
model = train_mlp(Xtr, ytr, TrainConfig(seed=0), class_count=10).model
dense = evaluate(model, Xte, yte)
print(f"dense: {parameter_count(model)} params, accuracy {dense.accuracy:.3f}")

cmodel, log, report = compress_model(model, 0.9)
comp = evaluate(cmodel, Xte, yte)
totals = report.totals()
print(f"tau 0.9: ranks {report.ranks}, weights {totals['params_before']} -> "
      f"{totals['params_after']} ({100 * totals['param_reduction']:.0f}% fewer), "
      f"accuracy {comp.accuracy:.3f}")

# Same total budget spread evenly: one global rank equal to the mean.
k = int(np.floor(np.mean(report.ranks) + 0.5))
fmodel, _, freport = compress_model_fixed_rank(model, k)
print(f"fixed k={k}: weights {freport.totals()['params_after']}, "
      f"accuracy {evaluate(fmodel, Xte, yte).accuracy:.3f}")

for rec in report.layers:
    print(f"  layer {rec.layer_index}: {rec.m}x{rec.n} k={rec.k} "
          f"FLOPs {rec.flops_before} -> {rec.flops_after}")
