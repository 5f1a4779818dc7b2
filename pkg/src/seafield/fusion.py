"""Blending of local (autoregressive) and global (neural field) features."""
from __future__ import annotations

import torch
from torch import nn

AGGREGATION_MODES = ("gated", "addition", "multiplication", "concatenation")


def _check_shapes(local, global_):
    if local.shape != global_.shape:
        raise ValueError(f"local {tuple(local.shape)} and global {tuple(global_.shape)} differ")


def _channel_linear(x, weight, bias, dim):
    # weight: (c_in, c_out); applies x @ W + b along `dim`
    if x.ndim == 4 and dim in (1, -3):
        return nn.functional.conv2d(x, weight.T[:, :, None, None], bias)
    y = torch.movedim(x, dim, -1) @ weight + bias
    return torch.movedim(y, -1, dim)


class GatedFusion(nn.Module):
    """z = sigmoid([local | global] W + b);  H = (1 - z) * local + z * global.

    ``W`` has shape (2c, c) and is shared across nodes and timesteps.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.weight = nn.Parameter(torch.empty(2 * channels, channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        nn.init.xavier_uniform_(self.weight)

    def gate(self, local, global_, dim: int = 1):
        both = torch.cat([local, global_], dim=dim)
        return torch.sigmoid(_channel_linear(both, self.weight, self.bias, dim))

    def forward(self, local, global_, dim: int = 1):
        _check_shapes(local, global_)
        z = self.gate(local, global_, dim)
        return (1 - z) * local + z * global_


def gated_fuse(layer: GatedFusion, local, global_, dim: int = -1):
    return layer(local, global_, dim=dim)


class Aggregation(nn.Module):
    """Ablation stand-ins for the gate: addition, multiplication, or
    concatenation followed by a learnable projection back to ``c`` channels."""

    def __init__(self, mode: str, channels: int):
        super().__init__()
        if mode not in AGGREGATION_MODES[1:]:
            raise ValueError(f"unknown aggregation mode {mode!r}")
        self.mode = mode
        if mode == "concatenation":
            self.weight = nn.Parameter(torch.empty(2 * channels, channels))
            self.bias = nn.Parameter(torch.zeros(channels))
            nn.init.xavier_uniform_(self.weight)

    def forward(self, local, global_, dim: int = 1):
        _check_shapes(local, global_)
        if self.mode == "addition":
            return local + global_
        if self.mode == "multiplication":
            return local * global_
        both = torch.cat([local, global_], dim=dim)
        return _channel_linear(both, self.weight, self.bias, dim)


def aggregate(mode: str, local, global_, projection: Aggregation | None = None, dim: int = -1):
    if mode == "concatenation":
        if projection is None:
            raise ValueError("concatenation needs a projection module")
        return projection(local, global_, dim=dim)
    return Aggregation(mode, local.shape[dim])(local, global_, dim=dim)


def make_fusion(mode: str, channels: int) -> nn.Module:
    if mode == "gated":
        return GatedFusion(channels)
    return Aggregation(mode, channels)


def align_global(global_feat: torch.Tensor, length: int, dim: int = -1) -> torch.Tensor:
    """Keep the last ``length`` timesteps (right alignment with causal convolutions)."""
    total = global_feat.shape[dim]
    if length > total:
        raise ValueError(f"cannot align {total} global steps to {length}")
    return global_feat.narrow(dim, total - length, length)


class GlobalAdapter(nn.Module):
    """Per-layer 1x1 map from the shared field width to a host layer's width.

    Input (B, T, N, d) from the field; output (B, c, N, L) with the time axis
    right-aligned to ``L`` and, when the host pads its input, zero-padded on
    the left to the padded length first.
    """

    def __init__(self, field_dim: int, channels: int):
        super().__init__()
        self.proj = nn.Linear(field_dim, channels)

    def forward(self, field_out: torch.Tensor, length: int, padded_len: int | None = None):
        h = self.proj(field_out).permute(0, 3, 2, 1)
        if padded_len is not None and padded_len > h.shape[-1]:
            h = nn.functional.pad(h, (padded_len - h.shape[-1], 0))
        return align_global(h, length)


class TimeInjection(nn.Module):
    """Field, per-site adapters and per-site fusion layers for one host model.

    ``sites="layerwise"`` fuses after every host module with its own adapter
    and fusion layer; ``sites="input"`` adds the global features once, before
    the first module.
    """

    def __init__(self, field: nn.Module, channels: int, num_sites: int,
                 mode: str = "gated", sites: str = "layerwise"):
        super().__init__()
        if sites not in ("layerwise", "input"):
            raise ValueError(f"unknown fusion sites {sites!r}")
        self.field = field
        self.sites = sites
        self.mode = mode
        n = num_sites if sites == "layerwise" else 1
        self.adapters = nn.ModuleList(GlobalAdapter(field.out_dim, channels) for _ in range(n))
        self.fusions = nn.ModuleList(
            make_fusion(mode if sites == "layerwise" else "addition", channels) for _ in range(n))

    def features(self, coords):
        return self.field(coords)

    def fuse(self, site: int, local, field_out, padded_len=None):
        g = self.adapters[site](field_out, local.shape[-1], padded_len)
        return self.fusions[site](local, g)
