"""Inception forecaster with and without a conditional neural field.

Both models see the same 12-step history. The time-aware one also receives
the timestamps of that history, from which the field supplies daily and
weekly context at every layer through a learned gate.

    python3 demos/time_aware_forecasting.py [--epochs 5]
"""
import argparse

import numpy as np
import torch

from seafield import (TrainConfig, build_model, make_windows, normalize, predict, split,
                      synthesize_seasonal, train)
from seafield.evaluation import horizon_metrics

parser = argparse.ArgumentParser()
parser.add_argument("--epochs", type=int, default=5)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

ds = synthesize_seasonal(num_nodes=20, days=28, noise_std=0.1, seed=0)
parts = split(ds)
train_part, stats = normalize(parts[0])
tr, va, te = [make_windows(train_part)] + [make_windows(normalize(p, stats)[0])
                                           for p in parts[1:]]
print(f"{len(tr)} training windows, {len(te)} test windows, {ds.num_nodes} nodes")

hparams = {"channels": 16, "end_channels": 64, "field_kwargs": {"hidden": 64}}
for kind in ("inception", "seacnn"):
    model = build_model(kind, ds.num_nodes, seed=args.seed, **hparams)
    result = train(model, tr, va, stats, TrainConfig(epochs=args.epochs, seed=args.seed))
    pred, target, mask = predict(model, te, stats)
    scores = horizon_metrics(pred, target, mask, metrics=("mae", "rmse"))
    line = "  ".join(f"h{h} MAE {scores[(h, 'mae')]:.4f}" for h in (3, 6, 12))
    print(f"{kind:>9}: best val MAE {result.best_val_mae:.4f}  {line}")

# The gate of the first fusion layer: how much of the field is let through.
with torch.no_grad():
    hist, _, _, coords = te.batch(np.arange(4))
    g = model.injection.features(torch.as_tensor(coords, dtype=torch.float32))
    h = model.start_conv(torch.as_tensor(hist, dtype=torch.float32).permute(0, 3, 2, 1))
    h = model.blocks[0](h)
    glob = model.injection.adapters[0](g, h.shape[-1])
    z = model.injection.fusions[0].gate(h, glob)
print(f"mean gate opening after the first module: {float(z.mean()):.3f}")
