"""Brute-force reference computations used to cross-check the vectorized code.

Deliberately straight-line scalar loops over plain Python floats. Nothing
here imports from the rest of the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


def _flat(x):
    if hasattr(x, "tolist"):
        x = x.tolist()
    if isinstance(x, (list, tuple)):
        out = []
        for item in x:
            out.extend(_flat(item))
        return out
    return [x]


def loop_metric(kind, pred, target, mask=None):
    p = _flat(pred)
    y = _flat(target)
    m = [True] * len(p) if mask is None else [bool(v) for v in _flat(mask)]
    total = 0.0
    count = 0
    for i in range(len(p)):
        if not m[i]:
            continue
        diff = p[i] - y[i]
        if kind == "mae":
            total += abs(diff)
        elif kind == "rmse":
            total += diff * diff
        elif kind == "mape":
            total += abs(diff / y[i])
        elif kind == "smape":
            total += abs(diff / (p[i] + y[i]))
        else:
            raise ValueError(kind)
        count += 1
    mean = total / count
    return math.sqrt(mean) if kind == "rmse" else mean


def loop_rff(B, x):
    """[cos(2 pi (Bx)_1) ... cos(2 pi (Bx)_m), sin(2 pi (Bx)_1) ... sin(...)]"""
    B = B.tolist() if hasattr(B, "tolist") else B
    x = _flat(x)
    cosines, sines = [], []
    for row in B:
        s = 0.0
        for j in range(len(x)):
            s += row[j] * x[j]
        cosines.append(math.cos(2 * math.pi * s))
        sines.append(math.sin(2 * math.pi * s))
    return cosines + sines


def loop_gated_fuse(W, b, local, global_):
    """Vectors local, global of length c; W is (2c) x c; b has length c."""
    W = W.tolist() if hasattr(W, "tolist") else W
    b = _flat(b)
    local = _flat(local)
    global_ = _flat(global_)
    c = len(local)
    both = local + global_
    out = []
    for j in range(c):
        s = b[j]
        for i in range(2 * c):
            s += both[i] * W[i][j]
        z = 1.0 / (1.0 + math.exp(-s))
        out.append((1 - z) * local[j] + z * global_[j])
    return out


def loop_mixhop(A, H, K, beta, weights=None):
    """Mix-hop propagation for one sample.

    ``H`` is indexed [channel][node][time]. Returns the list of hop states
    when ``weights`` is None, otherwise the selected output sum_k Hk Wk with
    ``weights[k][c_in][c_out]``.
    """
    A = A.tolist() if hasattr(A, "tolist") else A
    H = H.tolist() if hasattr(H, "tolist") else H
    n = len(A)
    C = len(H)
    L = len(H[0][0])
    norm = []
    for v in range(n):
        row = [A[v][w] + (1.0 if v == w else 0.0) for w in range(n)]
        total = sum(row)
        norm.append([r / total for r in row])
    hops = [H]
    prev = H
    for _ in range(K):
        nxt = [[[0.0] * L for _ in range(n)] for _ in range(C)]
        for c in range(C):
            for v in range(n):
                for t in range(L):
                    agg = 0.0
                    for w in range(n):
                        agg += norm[v][w] * prev[c][w][t]
                    nxt[c][v][t] = beta * H[c][v][t] + (1 - beta) * agg
        hops.append(nxt)
        prev = nxt
    if weights is None:
        return hops
    weights = weights.tolist() if hasattr(weights, "tolist") else weights
    c_out = len(weights[0][0])
    out = [[[0.0] * L for _ in range(n)] for _ in range(c_out)]
    for k in range(K + 1):
        for d in range(c_out):
            for c in range(C):
                for v in range(n):
                    for t in range(L):
                        out[d][v][t] += hops[k][c][v][t] * weights[k][c][d]
    return out


def loop_graph(M1, M2, alpha, k):
    """Dense ReLU(tanh(alpha (M1 M2^T - M2 M1^T))) then keep the k largest per row
    (ties broken by lower column index)."""
    M1 = M1.tolist() if hasattr(M1, "tolist") else M1
    M2 = M2.tolist() if hasattr(M2, "tolist") else M2
    n = len(M1)
    d = len(M1[0])
    dense = []
    for i in range(n):
        row = []
        for j in range(n):
            s = 0.0
            for q in range(d):
                s += M1[i][q] * M2[j][q] - M2[i][q] * M1[j][q]
            row.append(max(0.0, math.tanh(alpha * s)))
        dense.append(row)
    out = []
    for row in dense:
        ranked = sorted(range(n), key=lambda j: (-row[j], j))
        keep = set(ranked[:k])
        out.append([row[j] if j in keep else 0.0 for j in range(n)])
    return out


def receptive_field(kernel_sizes, dilations):
    field = 1
    for d in dilations:
        field += (max(kernel_sizes) - 1) * d
    return field


def valid_length(length, kernel_sizes, dilations):
    for d in dilations:
        length -= (max(kernel_sizes) - 1) * d
    return length


def inception_param_count(c_in, c_out, kernel_sizes, batchnorm=True):
    """Conv weights + biases of equal-width branches, plus BatchNorm scale/shift."""
    width = c_out // len(kernel_sizes)
    count = 0
    for k in kernel_sizes:
        count += c_in * width * k + width
    if batchnorm:
        count += 2 * c_out
    return count


@dataclass
class FiniteDiffReport:
    max_rel_error: float
    worst_index: int
    step: float
    analytic: list
    numeric: list


def relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-12)


class FlatParams:
    """Flat item access over several tensors (writes go through ``.data``)."""

    def __init__(self, tensors):
        self.views = [t.data.view(-1) for t in tensors]
        self.offsets = [0]
        for v in self.views:
            self.offsets.append(self.offsets[-1] + v.numel())

    def __len__(self):
        return self.offsets[-1]

    def _locate(self, i):
        for j, v in enumerate(self.views):
            if i < self.offsets[j + 1]:
                return v, i - self.offsets[j]
        raise IndexError(i)

    def __getitem__(self, i):
        v, k = self._locate(i)
        return float(v[k])

    def __setitem__(self, i, value):
        v, k = self._locate(i)
        v[k] = value


def fd_gradcheck(f, params, analytic, step=1e-5, indices=None):
    """Central differences of scalar ``f()`` w.r.t. entries of ``params``.

    ``params`` is any flat sequence supporting item get/set (a 1-D array or a
    :class:`FlatParams`); ``analytic[n]`` is the claimed derivative for the
    n-th checked entry.
    """
    indices = range(len(params)) if indices is None else indices
    numeric = []
    worst = 0.0
    worst_i = -1
    for n, i in enumerate(indices):
        orig = float(params[i])
        params[i] = orig + step
        up = float(f())
        params[i] = orig - step
        down = float(f())
        params[i] = orig
        if not (math.isfinite(up) and math.isfinite(down)):
            raise ValueError(f"non-finite function value perturbing entry {i}")
        g = (up - down) / (2 * step)
        numeric.append(g)
        err = relative_error(float(analytic[n]), g)
        if err > worst:
            worst = err
            worst_i = i
    return FiniteDiffReport(worst, worst_i, step, [float(a) for a in analytic], numeric)
