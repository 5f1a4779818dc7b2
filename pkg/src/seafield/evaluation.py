"""Horizon-wise metrics, multi-seed aggregation, ablations and the
coordinate-MLP reconstruction experiment."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from .data import NormStats, TimeSeriesDataset, WindowSet
from .field import ENCODER_KINDS, make_encoder
from .metrics import METRICS
from .models import ABLATION_VARIANTS, apply_variant, build_model
from .timefeatures import coords_for_window
from .training import TrainConfig, predict, train

REPORT_HORIZONS = (3, 6, 12)


def horizon_metrics(pred, target, mask, horizons: Iterable[int] = REPORT_HORIZONS,
                    metrics: Sequence[str] = ("mae", "rmse", "mape")) -> dict:
    """{(horizon, metric): value} using only the given 1-based horizon step."""
    out = {}
    for h in horizons:
        for name in metrics:
            out[(h, name)] = METRICS[name](pred[:, h - 1], target[:, h - 1], mask[:, h - 1])
    return out


def pooled_metrics(pred, target, mask, metrics: Sequence[str] = ("mae", "rmse", "mape")) -> dict:
    """Metrics over every horizon at once."""
    return {name: METRICS[name](pred, target, mask) for name in metrics}


def evaluate(model, windows: WindowSet, stats: NormStats,
             horizons: Iterable[int] = REPORT_HORIZONS,
             metrics: Sequence[str] = ("mae", "rmse", "mape")) -> dict:
    pred, target, mask = predict(model, windows, stats)
    return horizon_metrics(pred, target, mask, horizons, metrics)


@dataclass
class MetricsReport:
    """Mean and std over seeds of per-horizon metrics, one row per
    (model, horizon, metric)."""
    rows: list = field(default_factory=list)

    @classmethod
    def from_runs(cls, runs: dict) -> "MetricsReport":
        """``runs`` maps model name -> list of per-seed ``{(horizon, metric): value}``."""
        rows = []
        for model, per_seed in runs.items():
            for key in per_seed[0]:
                vals = np.array([r[key] for r in per_seed], dtype=np.float64)
                horizon, metric = key
                rows.append({"model": model, "horizon": horizon, "metric": metric,
                             "mean": float(vals.mean()), "std": float(vals.std()),
                             "min": float(vals.min()), "max": float(vals.max()),
                             "n": len(vals)})
        return cls(rows)

    def get(self, model, horizon, metric) -> dict:
        for row in self.rows:
            if (row["model"], row["horizon"], row["metric"]) == (model, horizon, metric):
                return row
        raise KeyError((model, horizon, metric))

    def to_csv(self, path):
        write_rows(path, self.rows, ["model", "horizon", "metric", "mean", "std", "min", "max", "n"])


def write_rows(path, rows, columns):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                             for c in columns])


def summarize(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def run_ablation(train_windows: WindowSet, val_windows: WindowSet, stats: NormStats,
                 base_hparams: dict, variants: Sequence[str], seeds: Sequence[int],
                 train_config: TrainConfig, kind: str = "seagnn",
                 metrics: Sequence[str] = ("mae", "rmse", "mape")):
    """Train each variant per seed and score the validation split over all
    horizons. Returns (rows of mean/std per variant and metric, raw per-seed scores)."""
    raw = {}
    for variant in variants:
        if variant not in ABLATION_VARIANTS:
            raise ValueError(f"unknown ablation variant {variant!r}")
        raw[variant] = [ablation_run(train_windows, val_windows, stats, base_hparams,
                                     variant, seed, train_config, kind, metrics)
                        for seed in seeds]
    return ablation_table(raw, metrics), raw


def ablation_run(train_windows, val_windows, stats, base_hparams, variant, seed,
                 train_config: TrainConfig, kind="seagnn", metrics=("mae", "rmse", "mape")):
    hparams = apply_variant(base_hparams, variant)
    model = build_model(kind, train_windows.num_nodes, seed=seed, **hparams)
    cfg = TrainConfig(**{**train_config.__dict__, "seed": seed})
    train(model, train_windows, val_windows, stats, cfg)
    pred, target, mask = predict(model, val_windows, stats)
    return pooled_metrics(pred, target, mask, metrics)


def ablation_table(raw: dict, metrics=("mae", "rmse", "mape")) -> list:
    rows = []
    for variant, per_seed in raw.items():
        for name in metrics:
            mean, std = summarize([r[name] for r in per_seed])
            rows.append({"variant": variant, "metric": name, "mean": mean, "std": std,
                         "n": len(per_seed)})
    return rows


class CoordinateMLP(nn.Module):
    """One hidden layer of 128 units over 2-D time coordinates.

    rff: fixed Fourier features -> Linear -> ReLU -> Linear
    siren: sine layer -> Linear
    linear: Linear -> ReLU -> Linear (the plain MLP)
    """

    def __init__(self, kind: str, hidden: int = 128, sigma: float = 10.0,
                 omega0: float = 30.0, seed: int = 0):
        super().__init__()
        if kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {kind!r}")
        self.kind = kind
        self.encoder = make_encoder(kind, 2, hidden, sigma=sigma, seed=seed, omega0=omega0)
        self.hidden = nn.Linear(hidden, hidden) if kind == "rff" else None
        self.head = nn.Linear(hidden, 1)

    def forward(self, coords):
        h = self.encoder(coords)
        if self.hidden is not None:
            h = torch.relu(self.hidden(h))
        elif self.kind == "linear":
            h = torch.relu(h)
        return self.head(h).squeeze(-1)


@dataclass
class ReconstructionRun:
    node: int
    kind: str
    seed: int
    final_mae: float
    fitted: np.ndarray
    target: np.ndarray


def fit_series(coords: np.ndarray, series: np.ndarray, kind: str, seed: int,
               iterations: int = 2000, learning_rate: float = 1e-3, sigma: float = 10.0):
    """Full-batch Adam on the L1 loss; returns (final MAE, fitted values)."""
    torch.manual_seed(seed)
    model = CoordinateMLP(kind, sigma=sigma, seed=seed)
    x = torch.as_tensor(coords, dtype=torch.float32)
    y = torch.as_tensor(series, dtype=torch.float32)
    opt = torch.optim.Adam(model.parameters(), lr=learning_rate)
    for _ in range(iterations):
        opt.zero_grad()
        loss = (model(x) - y).abs().mean()
        loss.backward()
        opt.step()
    with torch.no_grad():
        fitted = model(x).double().numpy()
    return float(np.abs(fitted - series).mean()), fitted


def reconstruction_experiment(dataset: TimeSeriesDataset, node_ids: Sequence[int],
                              kinds: Sequence[str] = ENCODER_KINDS,
                              seeds: Sequence[int] = (0, 1, 2), iterations: int = 2000,
                              learning_rate: float = 1e-3, sigma: float = 10.0):
    """Fit each node's observed, z-scored series with each encoder kind.

    Returns (rows of mean/std MAE per node and kind, list of ReconstructionRun).
    """
    coords_all = coords_for_window(dataset.timestamps)
    runs = []
    for node in node_ids:
        if not 0 <= node < dataset.num_nodes:
            raise IndexError(f"unknown node {node}; dataset has {dataset.num_nodes}")
        observed = dataset.mask[:, node]
        series = dataset.values[observed, node]
        series = (series - series.mean()) / series.std()
        coords = coords_all[observed]
        for kind in kinds:
            for seed in seeds:
                err, fitted = fit_series(coords, series, kind, seed, iterations,
                                         learning_rate, sigma)
                runs.append(ReconstructionRun(node, kind, seed, err, fitted, series))
    rows = []
    for node in node_ids:
        for kind in kinds:
            mean, std = summarize([r.final_mae for r in runs if r.node == node and r.kind == kind])
            rows.append({"node": node, "kind": kind, "mean": mean, "std": std, "n": len(seeds)})
    return rows, runs
