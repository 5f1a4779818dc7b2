import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from seafield.graph import (DilatedInception, GraphForecaster, GraphLearner, MixHop,
                            TemporalConv, dilated_inception_forward, learn_graph, mixhop_forward,
                            mtgnn_forward, normalize_adjacency, receptive_field, seagnn_forward)
from seafield.oracles import loop_graph, loop_mixhop
from seafield.oracles import receptive_field as loop_receptive_field


def test_identical_embeddings_give_empty_graph():
    learner = GraphLearner(6, 4, k=3)
    with torch.no_grad():
        learner.m2.copy_(learner.m1)
    assert torch.count_nonzero(learn_graph(learner)) == 0


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_graph_matches_sort_oracle(seed, k):
    torch.manual_seed(seed)
    learner = GraphLearner(6, 3, alpha=3.0, k=k).double()
    adj = learn_graph(learner).detach()
    assert torch.all((adj > 0).sum(1) <= k)
    np.testing.assert_allclose(adj.numpy(), loop_graph(learner.m1, learner.m2, 3.0, k),
                               atol=1e-12)


def test_graph_ties_keep_lower_index():
    learner = GraphLearner(3, 1, alpha=100.0, k=1).double()
    with torch.no_grad():
        learner.m1.copy_(torch.tensor([[1.0], [0.0], [0.0]]))
        learner.m2.copy_(torch.tensor([[0.0], [1.0], [1.0]]))
    adj = learner().detach()
    assert adj[0].tolist() == [0.0, 1.0, 0.0]


def test_graph_antisymmetric_support():
    torch.manual_seed(1)
    adj = GraphLearner(8, 5, k=8)().detach()
    assert torch.all((adj > 0) & (adj.T > 0) == False)  # noqa: E712
    assert torch.all((adj >= 0) & (adj <= 1))


def test_graph_k_validation():
    with pytest.raises(ValueError):
        GraphLearner(4, k=5)


def test_normalize_rows_sum_to_one():
    adj = torch.rand(5, 5)
    torch.testing.assert_close(normalize_adjacency(adj).sum(1), torch.ones(5))


def test_mixhop_matches_loop(float64):
    torch.manual_seed(0)
    layer = MixHop(2, 3, depth=2, beta=0.05)
    A = torch.rand(3, 3)
    H = torch.randn(1, 2, 3, 4)
    hops = layer.propagate(H, A)
    ref = loop_mixhop(A, H[0], 2, 0.05)
    for k in range(3):
        np.testing.assert_allclose(hops[k][0].numpy(), ref[k], atol=1e-10)
    out = mixhop_forward(layer, H, A)[0]
    np.testing.assert_allclose(out.detach().numpy(),
                               loop_mixhop(A, H[0], 2, 0.05, layer.weight.detach()), atol=1e-10)


def test_mixhop_beta_one_and_empty_graph(float64):
    layer = MixHop(2, 2, depth=3, beta=1.0)
    H = torch.randn(1, 2, 4, 3)
    for h in layer.propagate(H, torch.rand(4, 4)):
        torch.testing.assert_close(h, H)
    layer.beta = 0.3
    for h in layer.propagate(H, torch.zeros(4, 4)):
        torch.testing.assert_close(h, H)


def test_mixhop_is_linear(float64):
    layer = MixHop(2, 3)
    A = torch.rand(4, 4)
    x, y = torch.randn(1, 2, 4, 5), torch.randn(1, 2, 4, 5)
    torch.testing.assert_close(layer(2 * x - y, A), 2 * layer(x, A) - layer(y, A))


def test_dilated_inception_lengths():
    x = torch.randn(1, 4, 3, 19)
    layer = DilatedInception(4, 4, dilation=2)
    assert layer(x).shape[-1] == 19 - 12
    tc = TemporalConv(4, 4)
    out = dilated_inception_forward(tc, x)
    assert out.shape == (1, 4, 3, 13)
    assert torch.all(out.abs() < 1)
    with pytest.raises(ValueError):
        tc(torch.randn(1, 4, 3, 6))


def test_temporal_conv_matches_unfused():
    torch.manual_seed(0)
    tc = TemporalConv(3, 4, dilation=2)
    x = torch.randn(2, 3, 2, 20)
    ref = torch.tanh(tc.filter(x)) * torch.sigmoid(tc.gate(x))
    torch.testing.assert_close(tc(x), ref)


@pytest.mark.parametrize("dilations", [(1, 1, 1), (1, 2, 4), (2, 2)])
def test_receptive_field_matches_oracle(dilations):
    k = (2, 3, 6, 7)
    assert receptive_field(k, dilations) == loop_receptive_field(k, dilations)


def test_forecaster_shapes():
    model = GraphForecaster(5, channels=4, skip_channels=8, end_channels=8, k=3)
    assert model.total_len == 19
    assert mtgnn_forward(model, torch.randn(2, 12, 5, 3)).shape == (2, 12, 5, 1)
    long = GraphForecaster(5, seq_len=24, channels=4, skip_channels=8, end_channels=8, k=3)
    assert long.total_len == 24
    assert long(torch.randn(1, 24, 5, 3)).shape == (1, 12, 5, 1)


def test_forecaster_errors():
    with pytest.raises(ValueError):
        GraphForecaster(5, dilations=(1, 1), num_modules=3, k=3)
    model = GraphForecaster(5, channels=4, skip_channels=8, end_channels=8, k=3, time_aware=True,
                            field_kwargs={"hidden": 8})
    with pytest.raises(ValueError):
        model(torch.randn(1, 12, 5, 3))
    assert seagnn_forward(model, torch.randn(1, 12, 5, 3), torch.rand(1, 12, 2)).shape == \
        (1, 12, 5, 1)


def test_static_adjacency_is_used():
    adj = np.eye(4)[::-1].copy()
    model = GraphForecaster(4, channels=4, skip_channels=8, end_channels=8,
                            static_adjacency=adj)
    assert model.graph is None
    assert torch.equal(model.adjacency(), torch.as_tensor(adj, dtype=torch.float32))


def test_learned_graph_receives_gradient():
    model = GraphForecaster(5, channels=4, skip_channels=8, end_channels=8, k=5)
    model(torch.randn(2, 12, 5, 3)).sum().backward()
    assert model.graph.m1.grad.abs().sum() > 0
