"""Graph forecaster: MTGNN-style replica and its time-aware variant (SEAGNN).

Layout is (batch, channels, nodes, time) throughout.
"""
from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from .conv import DEFAULT_KERNELS, OutputModule, branch_widths, merged_kernel
from .field import ConditionalNeuralField
from .fusion import TimeInjection


class GraphLearner(nn.Module):
    """A = ReLU(tanh(alpha (M1 M2^T - M2 M1^T))), keeping the top-k entries per row
    (ties go to the lower column index)."""

    def __init__(self, num_nodes: int, dim: int = 40, alpha: float = 3.0, k: int | None = None):
        super().__init__()
        k = min(20, num_nodes) if k is None else k
        if not 0 < k <= num_nodes:
            raise ValueError(f"k={k} must lie in [1, {num_nodes}]")
        self.k = k
        self.alpha = alpha
        self.m1 = nn.Parameter(torch.randn(num_nodes, dim))
        self.m2 = nn.Parameter(torch.randn(num_nodes, dim))

    def dense(self):
        score = self.m1 @ self.m2.T - self.m2 @ self.m1.T
        return F.relu(torch.tanh(self.alpha * score))

    def forward(self):
        adj = self.dense()
        if self.k == adj.shape[1]:
            return adj
        # stable sort: saturated tanh gives exact ties, keep the lower column index
        order = torch.sort(adj.detach(), dim=1, descending=True, stable=True).indices
        keep = torch.zeros_like(adj)
        keep.scatter_(1, order[:, :self.k], 1.0)
        return adj * keep


def learn_graph(learner: GraphLearner):
    return learner()


def normalize_adjacency(adj):
    """Row-normalize A + I so every row sums to one."""
    a = adj + torch.eye(adj.shape[0], dtype=adj.dtype, device=adj.device)
    deg = a.sum(dim=1, keepdim=True)
    assert torch.all(deg > 0), "A + I has an empty row"
    return a / deg


class MixHop(nn.Module):
    """Mix-hop propagation: H0 = X, Hk = beta X + (1 - beta) A~ H(k-1),
    followed by the selection sum_k Hk Wk (no bias, so the map is linear)."""

    def __init__(self, c_in: int, c_out: int, depth: int = 2, beta: float = 0.05):
        super().__init__()
        self.depth = depth
        self.beta = beta
        self.weight = nn.Parameter(torch.empty(depth + 1, c_in, c_out))
        for w in self.weight:
            nn.init.xavier_uniform_(w)

    def propagate(self, x, adj):
        a = normalize_adjacency(adj)
        h = x
        hops = [h]
        for _ in range(self.depth):
            h = self.beta * x + (1 - self.beta) * torch.matmul(a, h)
            hops.append(h)
        return hops

    def forward(self, x, adj):
        hops = torch.cat(self.propagate(x, adj), dim=1)
        # (K+1, c_in, c_out) -> 1x1 kernel over the hop-major concatenation
        kernel = self.weight.permute(2, 0, 1).reshape(self.weight.shape[2], -1, 1, 1)
        return F.conv2d(hops, kernel)


def mixhop_forward(layer: MixHop, x, adj):
    return layer(x, adj)


class DilatedInception(nn.Module):
    """Dilated temporal convolutions over several kernel sizes, right-aligned and
    concatenated; the time axis shrinks by ``(max(kernels) - 1) * dilation``."""

    def __init__(self, c_in: int, c_out: int, kernels=DEFAULT_KERNELS, dilation: int = 1):
        super().__init__()
        self.kernels = tuple(kernels)
        self.dilation = dilation
        self.branches = nn.ModuleList(
            nn.Conv2d(c_in, w, (1, k), dilation=(1, dilation))
            for w, k in zip(branch_widths(c_out, len(self.kernels)), self.kernels))

    @property
    def shrink(self) -> int:
        return (max(self.kernels) - 1) * self.dilation

    def forward(self, x):
        length = x.shape[-1] - self.shrink
        if length < 1:
            raise ValueError(
                f"time length {x.shape[-1]} shorter than receptive field {self.shrink + 1}")
        return F.conv2d(x, *self.kernel(), dilation=(1, self.dilation))

    def kernel(self):
        return merged_kernel(self.branches, max(self.kernels) - 1)


class TemporalConv(nn.Module):
    """tanh(filter inception) * sigmoid(gate inception)."""

    def __init__(self, c_in: int, c_out: int, kernels=DEFAULT_KERNELS, dilation: int = 1):
        super().__init__()
        self.filter = DilatedInception(c_in, c_out, kernels, dilation)
        self.gate = DilatedInception(c_in, c_out, kernels, dilation)

    def forward(self, x):
        if x.shape[-1] <= self.filter.shrink:
            raise ValueError(
                f"time length {x.shape[-1]} shorter than receptive field {self.filter.shrink + 1}")
        (wf, bf), (wg, bg) = self.filter.kernel(), self.gate.kernel()
        both = F.conv2d(x, torch.cat([wf, wg]), torch.cat([bf, bg]),
                        dilation=(1, self.filter.dilation))
        filt, gate = both.split([wf.shape[0], wg.shape[0]], dim=1)
        return torch.tanh(filt) * torch.sigmoid(gate)


def dilated_inception_forward(layer: TemporalConv, x):
    return layer(x)


def receptive_field(kernels, dilations) -> int:
    return 1 + sum((max(kernels) - 1) * d for d in dilations)


class GraphForecaster(nn.Module):
    """Spatio-temporal modules over a learned sparse graph, with skip paths.

    Each module: temporal conv -> (fusion with the field, when time-aware) ->
    skip tap -> mix-hop over A and A^T, summed -> BatchNorm -> residual.
    Histories shorter than the receptive field are zero-padded on the left.
    """

    def __init__(self, num_nodes: int, in_dim: int = 3, seq_len: int = 12, horizon: int = 12,
                 channels: int = 32, skip_channels: int = 64, end_channels: int = 128,
                 num_modules: int = 3, kernels=DEFAULT_KERNELS, dilations=None,
                 gcn_depth: int = 2, beta: float = 0.05, graph_dim: int = 40,
                 alpha: float = 3.0, k: int | None = None, dropout: float = 0.3,
                 static_adjacency=None, time_aware: bool = False,
                 fusion_mode: str = "gated", fusion_sites: str = "layerwise",
                 field_kwargs: dict | None = None):
        super().__init__()
        dilations = tuple(dilations or (1,) * num_modules)
        if len(dilations) != num_modules:
            raise ValueError("one dilation per module is required")
        self.num_nodes = num_nodes
        self.seq_len = seq_len
        self.horizon = horizon
        self.time_aware = time_aware
        self.dropout = dropout
        self.receptive_field = receptive_field(kernels, dilations)
        self.total_len = max(seq_len, self.receptive_field)

        if static_adjacency is not None:
            self.register_buffer("static_adjacency",
                                 torch.as_tensor(static_adjacency, dtype=torch.get_default_dtype()))
            self.graph = None
        else:
            self.static_adjacency = None
            self.graph = GraphLearner(num_nodes, graph_dim, alpha, k)

        self.start_conv = nn.Conv2d(in_dim, channels, 1)
        self.skip0 = nn.Conv2d(in_dim, skip_channels, (1, self.total_len))
        self.temporal = nn.ModuleList()
        self.skips = nn.ModuleList()
        self.gconv_fwd = nn.ModuleList()
        self.gconv_bwd = nn.ModuleList()
        self.norms = nn.ModuleList()
        length = self.total_len
        for d in dilations:
            tc = TemporalConv(channels, channels, kernels, d)
            length -= tc.filter.shrink
            self.temporal.append(tc)
            self.skips.append(nn.Conv2d(channels, skip_channels, (1, length)))
            self.gconv_fwd.append(MixHop(channels, channels, gcn_depth, beta))
            self.gconv_bwd.append(MixHop(channels, channels, gcn_depth, beta))
            self.norms.append(nn.BatchNorm2d(channels))
        self.skip_end = nn.Conv2d(channels, skip_channels, (1, length))
        self.output = OutputModule(skip_channels, end_channels, horizon)
        if time_aware:
            kw = {"out_dim": channels, **(field_kwargs or {})}
            self.injection = TimeInjection(ConditionalNeuralField(num_nodes, **kw), channels,
                                           num_modules, fusion_mode, fusion_sites)

    def adjacency(self):
        if self.graph is None:
            return self.static_adjacency
        return self.graph()

    def forward(self, history, coords=None):
        """history (B, T_h, N, C), coords (B, T_h, k) -> predictions (B, T_f, N, 1)."""
        if history.shape[1] != self.seq_len:
            raise ValueError(f"expected {self.seq_len} history steps, got {history.shape[1]}")
        x = history.permute(0, 3, 2, 1)
        if self.total_len > self.seq_len:
            x = F.pad(x, (self.total_len - self.seq_len, 0))
        adj = self.adjacency()
        adj_t = adj.T
        h = self.start_conv(x)
        skip = self.skip0(F.dropout(x, self.dropout, self.training))

        g = None
        if self.time_aware:
            if coords is None:
                raise ValueError("time-aware model needs history coordinates")
            g = self.injection.features(coords)
            if self.injection.sites == "input":
                h = self.injection.fuse(0, h, g, self.total_len)

        for i in range(len(self.temporal)):
            residual = h
            h = self.temporal[i](h)
            if g is not None and self.injection.sites == "layerwise":
                h = self.injection.fuse(i, h, g, self.total_len)
            h = F.dropout(h, self.dropout, self.training)
            skip = skip + self.skips[i](h)
            h = self.gconv_fwd[i](h, adj) + self.gconv_bwd[i](h, adj_t)
            h = self.norms[i](h) + residual[..., -h.shape[-1]:]
        skip = skip + self.skip_end(h)
        return self.output(F.relu(skip))


def mtgnn_forward(model: GraphForecaster, history):
    return model(history)


def seagnn_forward(model: GraphForecaster, history, coords):
    return model(history, coords)
