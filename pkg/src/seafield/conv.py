"""Inception forecaster and its time-aware variant (SEACNN).

Tensors inside the network use the (batch, channels, nodes, time) layout;
temporal convolutions are ``(1, k)`` 2-D convolutions.
"""
from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from .field import ConditionalNeuralField
from .fusion import TimeInjection

DEFAULT_KERNELS = (2, 3, 6, 7)


def branch_widths(channels: int, n: int) -> list[int]:
    base, extra = divmod(channels, n)
    return [base + (i < extra) for i in range(n)]


def merged_kernel(branches, reach: int):
    """Stack branch weights into one (sum c_out, c_in, 1, reach + 1) kernel.

    A right-aligned kernel-k branch equals a wider kernel whose leading taps
    are zero, so all branches run as a single convolution.
    """
    weight = torch.cat([F.pad(conv.weight, (reach + 1 - conv.kernel_size[1], 0))
                        for conv in branches])
    return weight, torch.cat([conv.bias for conv in branches])


class InceptionModule(nn.Module):
    """Parallel temporal convolutions, concatenated, then ReLU, BatchNorm and
    a residual connection cropped to the output length.

    Without padding the time axis shrinks by ``max(kernels) - 1``; with
    ``pad=True`` the input is zero-padded on the left so it keeps its length.
    """

    def __init__(self, channels: int, kernels=DEFAULT_KERNELS, pad: bool = True):
        super().__init__()
        self.kernels = tuple(kernels)
        self.pad = pad
        self.branches = nn.ModuleList(
            nn.Conv2d(channels, w, (1, k))
            for w, k in zip(branch_widths(channels, len(self.kernels)), self.kernels))
        self.norm = nn.BatchNorm2d(channels, momentum=0.1)

    @property
    def shrink(self) -> int:
        return 0 if self.pad else max(self.kernels) - 1

    def forward(self, x):
        reach = max(self.kernels) - 1
        if self.pad:
            inp = F.pad(x, (reach, 0))
        elif x.shape[-1] <= reach:
            raise ValueError(f"time length {x.shape[-1]} shorter than kernel {reach + 1}")
        else:
            inp = x
        length = inp.shape[-1] - reach
        h = F.conv2d(inp, *merged_kernel(self.branches, reach))
        return self.norm(F.relu(h)) + x[..., -length:]


def inception_forward(module: InceptionModule, x):
    return module(x)


class OutputModule(nn.Module):
    """Two 1x1 convolutions with a ReLU in between: (B, c, N, 1) -> (B, T_f, N, 1)."""

    def __init__(self, channels: int, hidden: int, horizon: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, hidden, 1)
        self.conv2 = nn.Conv2d(hidden, horizon, 1)

    def forward(self, h):
        return self.conv2(F.relu(self.conv1(h)))


class InceptionForecaster(nn.Module):
    """Inception baseline; with ``time_aware=True`` each module becomes a
    Fusion Inception module fed by a shared conditional neural field."""

    def __init__(self, num_nodes: int, in_dim: int = 3, seq_len: int = 12, horizon: int = 12,
                 channels: int = 32, end_channels: int = 64, num_modules: int = 3,
                 kernels=DEFAULT_KERNELS, time_aware: bool = False,
                 fusion_mode: str = "gated", fusion_sites: str = "layerwise",
                 field_kwargs: dict | None = None):
        super().__init__()
        self.num_nodes = num_nodes
        self.seq_len = seq_len
        self.horizon = horizon
        self.time_aware = time_aware
        self.start_conv = nn.Conv2d(in_dim, channels, 1)
        self.blocks = nn.ModuleList(InceptionModule(channels, kernels) for _ in range(num_modules))
        self.output = OutputModule(channels, end_channels, horizon)
        if time_aware:
            kw = {"out_dim": channels, **(field_kwargs or {})}
            self.injection = TimeInjection(ConditionalNeuralField(num_nodes, **kw), channels,
                                           num_modules, fusion_mode, fusion_sites)

    def forward(self, history, coords=None):
        """history (B, T_h, N, C), coords (B, T_h, k) -> predictions (B, T_f, N, 1)."""
        if history.shape[1] != self.seq_len:
            raise ValueError(f"expected {self.seq_len} history steps, got {history.shape[1]}")
        h = self.start_conv(history.permute(0, 3, 2, 1))
        g = None
        if self.time_aware:
            if coords is None:
                raise ValueError("time-aware model needs history coordinates")
            g = self.injection.features(coords)
            if self.injection.sites == "input":
                h = self.injection.fuse(0, h, g)
        for i, block in enumerate(self.blocks):
            h = block(h)
            if g is not None and self.injection.sites == "layerwise":
                h = self.injection.fuse(i, h, g)
        return self.output(h[..., -1:])


def baseline_forward(model: InceptionForecaster, history):
    return model(history)


def seacnn_forward(model: InceptionForecaster, history, coords):
    return model(history, coords)
