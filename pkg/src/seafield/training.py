"""Training loop: masked MAE, curriculum over horizons, checkpoints."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import NormStats, WindowSet
from .models import build_model

CHECKPOINT_FORMAT = "SEAFIELD/1"

log = logging.getLogger(__name__)


class EmptyLossError(ValueError):
    """No observed cell within the supervised horizon."""


class DivergenceError(RuntimeError):
    pass


def masked_mae_loss(pred, target, mask, horizon: int | None = None):
    """Mean |pred - target| over observed cells of horizons 1..horizon.

    Inputs are (batch, T_f, N) tensors on the raw (denormalized) scale.
    """
    if horizon is not None:
        if not 1 <= horizon <= pred.shape[1]:
            raise ValueError(f"horizon {horizon} outside 1..{pred.shape[1]}")
        pred, target, mask = pred[:, :horizon], target[:, :horizon], mask[:, :horizon]
    mask = torch.as_tensor(mask, dtype=torch.bool)
    count = mask.sum()
    if count == 0:
        raise EmptyLossError("no observed cells in the batch")
    err = torch.where(mask, (pred - target).abs(), torch.zeros((), dtype=pred.dtype))
    return err.sum() / count


@dataclass(frozen=True)
class CurriculumSchedule:
    step_every: int = 2500
    max_horizon: int = 12

    def horizon_at(self, iteration: int) -> int:
        if iteration < 0:
            raise ValueError("iteration must be nonnegative")
        return min(self.max_horizon, 1 + iteration // self.step_every)


def horizon_at(schedule: CurriculumSchedule, iteration: int) -> int:
    return schedule.horizon_at(iteration)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    clip_norm: float = 5.0
    seed: int = 0
    curriculum: bool = False
    step_every: int = 2500

    def __post_init__(self):
        for name in ("epochs", "batch_size", "learning_rate", "clip_norm", "step_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")


@dataclass
class TrainResult:
    model: torch.nn.Module
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_mae: float = math.inf
    iterations: int = 0
    optimizer_state: dict | None = None


def _tensor(x, dtype):
    return torch.as_tensor(np.ascontiguousarray(x), dtype=dtype)


def forward_batch(model, windows: WindowSet, idx, stats: NormStats):
    """Raw-scale predictions, targets and mask for window indices ``idx``."""
    dtype = next(model.parameters()).dtype
    history, target, mask, coords = windows.batch(idx)
    pred = model(_tensor(history, dtype), _tensor(coords, dtype)).squeeze(-1)
    target = stats.inverse(_tensor(target, dtype))
    return stats.inverse(pred), target, torch.as_tensor(mask)


@torch.no_grad()
def predict(model, windows: WindowSet, stats: NormStats, batch_size: int = 256):
    """Raw-scale (pred, target, mask) arrays of shape (S, T_f, N) for every window."""
    model.eval()
    preds, targets, masks = [], [], []
    for start in range(0, len(windows), batch_size):
        idx = np.arange(start, min(start + batch_size, len(windows)))
        p, t, m = forward_batch(model, windows, idx, stats)
        preds.append(p.double().numpy())
        targets.append(t.double().numpy())
        masks.append(m.numpy())
    return np.concatenate(preds), np.concatenate(targets), np.concatenate(masks)


def validation_mae(model, windows: WindowSet, stats: NormStats) -> float:
    pred, target, mask = predict(model, windows, stats)
    return float(np.abs(pred - target)[mask].mean())


def train(model, train_windows: WindowSet, val_windows: WindowSet, stats: NormStats,
          config: TrainConfig) -> TrainResult:
    """Adam with weight decay and gradient clipping; the parameters with the
    lowest validation MAE (all horizons) are restored at the end."""
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    schedule = CurriculumSchedule(config.step_every, train_windows.horizon)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                                 weight_decay=config.weight_decay)
    result = TrainResult(model)
    best_state = copy.deepcopy(model.state_dict())
    iteration = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = rng.permutation(len(train_windows))
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            horizon = (schedule.horizon_at(iteration) if config.curriculum
                       else train_windows.horizon)
            pred, target, mask = forward_batch(
                model, train_windows, order[start:start + config.batch_size], stats)
            iteration += 1
            try:
                loss = masked_mae_loss(pred, target, mask, horizon)
            except EmptyLossError:
                continue
            if not torch.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, iteration {iteration}")
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
            optimizer.step()
            total += loss.item()
            batches += 1
        val = validation_mae(model, val_windows, stats)
        result.history.append({
            "epoch": epoch,
            "train_loss": total / max(batches, 1),
            "val_mae": val,
            "horizon": schedule.horizon_at(max(iteration - 1, 0)) if config.curriculum
            else train_windows.horizon,
        })
        log.info("epoch %d train %.4f val %.4f", epoch, result.history[-1]["train_loss"], val)
        if val < result.best_val_mae:
            result.best_val_mae = val
            result.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
    model.load_state_dict(best_state)
    result.iterations = iteration
    result.optimizer_state = optimizer.state_dict()
    return result


def config_fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(path, model, model_spec: dict, stats: NormStats, iteration: int = 0,
                    config: dict | None = None, optimizer_state: dict | None = None):
    """``model_spec`` holds the ``build_model`` arguments needed to rebuild ``model``."""
    config = config or {}
    torch.save({
        "format": CHECKPOINT_FORMAT,
        "model_spec": model_spec,
        "state_dict": model.state_dict(),
        "optimizer": optimizer_state,
        "stats": asdict(stats),
        "iteration": iteration,
        "config": config,
        "fingerprint": config_fingerprint(config),
    }, Path(path))


def load_checkpoint(path):
    """Returns (model, stats, payload)."""
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    spec = dict(payload["model_spec"])
    model = build_model(spec.pop("kind"), spec.pop("num_nodes"), **spec)
    model.load_state_dict(payload["state_dict"])
    return model, NormStats(**payload["stats"]), payload
