"""Model construction by name, shared by training, evaluation and the CLI."""
from __future__ import annotations

import torch

from .conv import InceptionForecaster
from .graph import GraphForecaster

MODEL_KINDS = ("inception", "seacnn", "mtgnn", "seagnn")
TIME_AWARE = {"seacnn", "seagnn"}

ABLATION_VARIANTS = {
    "full": {},
    "no_rff": {"field_kwargs": {"encoder": "linear"}},
    "no_lgf": {"fusion_sites": "input"},
    "agg_addition": {"fusion_mode": "addition"},
    "agg_multiplication": {"fusion_mode": "multiplication"},
    "agg_concatenation": {"fusion_mode": "concatenation"},
}


def apply_variant(hparams: dict, variant: str) -> dict:
    if variant not in ABLATION_VARIANTS:
        raise ValueError(f"unknown ablation variant {variant!r}")
    out = dict(hparams)
    for key, value in ABLATION_VARIANTS[variant].items():
        if isinstance(value, dict):
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = value
    return out


def build_model(kind: str, num_nodes: int, seed: int = 0, **hparams) -> torch.nn.Module:
    """Instantiate a forecaster; weight initialization is fixed by ``seed``."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    hparams = dict(hparams)
    if kind in TIME_AWARE:
        hparams["field_kwargs"] = {"seed": seed, **hparams.get("field_kwargs", {})}
    else:
        for key in ("field_kwargs", "fusion_mode", "fusion_sites"):
            hparams.pop(key, None)
    cls = InceptionForecaster if kind in ("inception", "seacnn") else GraphForecaster
    if cls is InceptionForecaster:
        for key in ("skip_channels", "gcn_depth", "beta", "graph_dim", "alpha", "k",
                    "dropout", "static_adjacency", "dilations"):
            hparams.pop(key, None)
    torch.manual_seed(seed)
    return cls(num_nodes, time_aware=kind in TIME_AWARE, **hparams)
