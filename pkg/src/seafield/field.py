"""Conditional neural field over time coordinates and node indices."""
from __future__ import annotations

import math

import torch
from torch import nn

ENCODER_KINDS = ("rff", "siren", "linear")


class RFFEncoder(nn.Module):
    """Random Fourier features ``[cos(2 pi B x), sin(2 pi B x)]``.

    ``B`` (m x d_in) is drawn once from N(0, sigma^2) with its own seeded
    generator and stored as a buffer, so it is checkpointed but never trained.
    """

    def __init__(self, in_dim: int, num_frequencies: int, sigma: float, seed: int = 0):
        super().__init__()
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        gen = torch.Generator().manual_seed(seed)
        B = torch.randn(num_frequencies, in_dim, generator=gen, dtype=torch.float64) * sigma
        self.register_buffer("B", B.to(torch.get_default_dtype()))
        self.sigma = sigma
        self.in_dim = in_dim
        self.out_dim = 2 * num_frequencies

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        proj = 2 * math.pi * (x @ self.B.to(x.dtype).T)
        return torch.cat([torch.cos(proj), torch.sin(proj)], dim=-1)


def rff_encode(encoder: RFFEncoder, x) -> torch.Tensor:
    x = torch.as_tensor(x, dtype=encoder.B.dtype)
    return encoder(x)


class SineLayer(nn.Module):
    """``sin(omega0 * (W x + b))`` with the usual SIREN first-layer init."""

    def __init__(self, in_dim: int, out_dim: int, omega0: float = 30.0):
        super().__init__()
        self.omega0 = omega0
        self.linear = nn.Linear(in_dim, out_dim)
        with torch.no_grad():
            self.linear.weight.uniform_(-1 / in_dim, 1 / in_dim)
        self.out_dim = out_dim

    def forward(self, x):
        return torch.sin(self.omega0 * self.linear(x))


class LinearEncoder(nn.Linear):
    """Learnable affine map standing in for the Fourier features."""

    @property
    def out_dim(self) -> int:
        return self.out_features


def make_encoder(kind: str, in_dim: int, out_dim: int, sigma: float = 10.0,
                 seed: int = 0, omega0: float = 30.0) -> nn.Module:
    if kind == "rff":
        if out_dim % 2:
            raise ValueError("rff encoder needs an even output width")
        return RFFEncoder(in_dim, out_dim // 2, sigma, seed)
    if kind == "siren":
        return SineLayer(in_dim, out_dim, omega0)
    if kind == "linear":
        return LinearEncoder(in_dim, out_dim)
    raise ValueError(f"unknown encoder kind {kind!r}; expected one of {ENCODER_KINDS}")


class NodeEmbedding(nn.Module):
    """Deterministic node codes: Fourier features of the normalized index i/N."""

    def __init__(self, num_nodes: int, num_frequencies: int = 16, sigma: float = 1.0,
                 seed: int = 1):
        super().__init__()
        self.num_nodes = num_nodes
        self.encoder = RFFEncoder(1, num_frequencies, sigma, seed)
        self.out_dim = self.encoder.out_dim

    def forward(self, node_idx) -> torch.Tensor:
        idx = torch.as_tensor(node_idx)
        if idx.numel() and (idx.min() < 0 or idx.max() >= self.num_nodes):
            raise IndexError(f"node index out of range [0, {self.num_nodes})")
        pos = (idx.to(self.encoder.B.dtype) / self.num_nodes).unsqueeze(-1)
        return self.encoder(pos)


def embed_node(table: NodeEmbedding, i: int) -> torch.Tensor:
    return table(torch.tensor(i))


class ConditionalNeuralField(nn.Module):
    """Coordinate MLP ``(time coords, node) -> R^d`` with ReLU between layers.

    The first layer acts on ``[enc(tod, dow) (, weekend), node_code]``. Its
    weight is split between the time and node parts so the product is formed
    once per timestamp and once per node, then broadcast.
    """

    def __init__(self, num_nodes: int, out_dim: int, encoder: str = "rff",
                 num_frequencies: int = 64, sigma: float = 10.0,
                 node_frequencies: int = 16, node_sigma: float = 1.0,
                 hidden: int = 256, layers: int = 3, weekend: bool = False,
                 omega0: float = 30.0, seed: int = 0):
        super().__init__()
        if layers < 1:
            raise ValueError("need at least one layer")
        self.weekend = weekend
        self.time_encoder = make_encoder(encoder, 2, 2 * num_frequencies, sigma, seed, omega0)
        self.node_table = NodeEmbedding(num_nodes, node_frequencies, node_sigma, seed + 1)
        self.time_dim = self.time_encoder.out_dim + int(weekend)
        widths = [self.time_dim + self.node_table.out_dim] + [hidden] * (layers - 1) + [out_dim]
        self.layers = nn.ModuleList(nn.Linear(a, b) for a, b in zip(widths[:-1], widths[1:]))
        self.out_dim = out_dim

    @property
    def coord_dim(self) -> int:
        return 3 if self.weekend else 2

    def forward(self, coords: torch.Tensor, node_idx=None) -> torch.Tensor:
        """coords (..., 2 or 3) -> features (..., N, d)."""
        coords = coords[..., :self.coord_dim]
        if not torch.all((coords >= 0) & (coords <= 1)):
            raise ValueError("coordinates must lie in [0, 1]")
        if node_idx is None:
            node_idx = torch.arange(self.node_table.num_nodes)
        time_feat = self.time_encoder(coords[..., :2])
        if self.weekend:
            time_feat = torch.cat([time_feat, coords[..., 2:3]], dim=-1)
        node_feat = self.node_table(node_idx).to(time_feat.dtype)

        first = self.layers[0]
        w_time, w_node = first.weight.split([self.time_dim, node_feat.shape[-1]], dim=1)
        h = (time_feat @ w_time.T).unsqueeze(-2) + node_feat @ w_node.T + first.bias
        for layer in self.layers[1:]:
            h = layer(torch.relu(h))
        return h


def cnf_forward(field: ConditionalNeuralField, coords, node_indices=None) -> torch.Tensor:
    return field(torch.as_tensor(coords, dtype=field.layers[0].weight.dtype), node_indices)
