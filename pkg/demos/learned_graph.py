"""The graph a forecaster learns, and how mix-hop propagation smooths features.

    python3 demos/learned_graph.py [--epochs 3] [--out graph.png]
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import torch

from seafield import (TrainConfig, build_model, make_windows, normalize, split,
                      synthesize_seasonal, train)
from seafield.graph import MixHop, normalize_adjacency

parser = argparse.ArgumentParser()
parser.add_argument("--epochs", type=int, default=3)
parser.add_argument("--out", default="graph.png")
args = parser.parse_args()

ds = synthesize_seasonal(num_nodes=12, days=14, noise_std=0.1, seed=1)
parts = split(ds)
train_part, stats = normalize(parts[0])
tr, va = make_windows(train_part), make_windows(normalize(parts[1], stats)[0])

model = build_model("mtgnn", ds.num_nodes, seed=0, channels=8, skip_channels=16,
                    end_channels=32, k=4)
before = model.adjacency().detach().clone()
train(model, tr, va, stats, TrainConfig(epochs=args.epochs))
after = model.adjacency().detach()
print("edges kept per row:", (after > 0).sum(1).tolist())
print("A and A^T never share an edge:", bool(((after > 0) & (after.T > 0)).sum() == 0))

# Mix-hop with beta close to 1 stays near the input; small beta mixes neighbours.
x = torch.randn(1, 1, ds.num_nodes, 1)
rows = normalize_adjacency(after)
for beta in (0.9, 0.05):
    hops = MixHop(1, 1, depth=4, beta=beta).propagate(x, after)
    spread = [float(h.std()) for h in hops]
    print(f"beta={beta}: feature spread per hop {[round(s, 3) for s in spread]}")

fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
for ax, mat, title in zip(axes, (before, after, rows), ("initial A", "trained A",
                                                       "row-normalized A + I")):
    im = ax.imshow(mat.numpy(), cmap="viridis")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
fig.tight_layout()
fig.savefig(args.out, dpi=100)
print("wrote", args.out)
