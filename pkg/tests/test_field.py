import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from seafield.field import (ConditionalNeuralField, NodeEmbedding, RFFEncoder, SineLayer,
                            cnf_forward, embed_node, make_encoder, rff_encode)
from seafield.oracles import loop_rff


def test_rff_at_zero(float64):
    enc = RFFEncoder(2, 64, 10.0, seed=0)
    out = rff_encode(enc, [0.0, 0.0])
    assert out.tolist() == [1.0] * 64 + [0.0] * 64


def test_rff_shape_and_norm(float64):
    enc = RFFEncoder(2, 64, 10.0, seed=0)
    out = rff_encode(enc, torch.rand(7, 2))
    assert out.shape == (7, 128)
    np.testing.assert_allclose((out ** 2).sum(-1).numpy(), 64, atol=1e-9)


def test_rff_matches_loop(float64):
    enc = RFFEncoder(2, 16, 10.0, seed=3)
    x = [0.3, 0.7]
    np.testing.assert_allclose(rff_encode(enc, x).numpy(), loop_rff(enc.B, x), atol=1e-12)


def test_rff_frequencies_are_frozen_and_seeded():
    a, b = RFFEncoder(2, 64, 10.0, seed=5), RFFEncoder(2, 64, 10.0, seed=5)
    assert torch.equal(a.B, b.B)
    assert not torch.equal(a.B, RFFEncoder(2, 64, 10.0, seed=6).B)
    assert list(a.parameters()) == []
    assert "B" in a.state_dict()


def test_rff_sigma_scales_frequencies():
    B = RFFEncoder(2, 4096, 10.0, seed=0).B
    assert float(B.std()) == pytest.approx(10.0, rel=0.05)


def test_rff_rejects_bad_sigma():
    with pytest.raises(ValueError):
        RFFEncoder(2, 8, 0.0)


@given(st.integers(-50, 50))
@settings(max_examples=30, deadline=None)
def test_rff_integer_frequency_periodicity(shift):
    enc = RFFEncoder(1, 8, 10.0)
    with torch.no_grad():
        enc.B.copy_(torch.round(enc.B))
    x = torch.tensor([[0.37]])
    torch.testing.assert_close(enc(x + shift), enc(x), atol=1e-3, rtol=0)


def test_node_embedding():
    table = NodeEmbedding(20, 16, 1.0, seed=1)
    codes = table(torch.arange(20))
    assert codes.shape == (20, 32)
    assert torch.equal(embed_node(table, 4), codes[4])
    assert len({tuple(c.tolist()) for c in codes}) == 20
    with pytest.raises(IndexError):
        embed_node(table, 20)


def test_make_encoder_kinds():
    assert isinstance(make_encoder("rff", 2, 128), RFFEncoder)
    assert isinstance(make_encoder("siren", 2, 128), SineLayer)
    assert make_encoder("linear", 2, 128).out_dim == 128
    with pytest.raises(ValueError):
        make_encoder("fourier", 2, 128)


def test_cnf_shapes():
    field = ConditionalNeuralField(5, 8, hidden=32)
    out = cnf_forward(field, torch.rand(3, 12, 2))
    assert out.shape == (3, 12, 5, 8)
    assert cnf_forward(field, [0.25, 0.0], [1, 2]).shape == (2, 8)


def test_cnf_default_width():
    field = ConditionalNeuralField(20, 32)
    assert [l.out_features for l in field.layers] == [256, 256, 32]
    assert field.layers[0].in_features == 128 + 32


def test_cnf_split_first_layer_matches_concat():
    field = ConditionalNeuralField(4, 6, hidden=16)
    coords = torch.rand(5, 2)
    got = field(coords)
    t = field.time_encoder(coords)
    n = field.node_table(torch.arange(4))
    x = torch.cat([t[:, None].expand(-1, 4, -1), n[None].expand(5, -1, -1)], -1)
    h = x
    for i, layer in enumerate(field.layers):
        h = layer(torch.relu(h) if i else h)
    torch.testing.assert_close(got, h)


def test_cnf_same_time_same_output():
    field = ConditionalNeuralField(3, 4, hidden=16)
    coords = torch.tensor([[0.5, 2 / 7], [0.5, 2 / 7], [0.1, 0.0]])
    out = field(coords)
    torch.testing.assert_close(out[0], out[1])


def test_cnf_weekend_flag():
    field = ConditionalNeuralField(3, 4, hidden=16, weekend=True)
    a = field(torch.tensor([0.5, 5 / 7, 0.0]))
    b = field(torch.tensor([0.5, 5 / 7, 1.0]))
    assert not torch.allclose(a, b)


def test_cnf_rejects_out_of_range():
    field = ConditionalNeuralField(3, 4, hidden=16)
    with pytest.raises(ValueError):
        field(torch.tensor([1.2, 0.0]))
    with pytest.raises(IndexError):
        field(torch.tensor([0.2, 0.0]), [3])


def test_cnf_gradients_reach_all_layers():
    field = ConditionalNeuralField(3, 4, hidden=16)
    field(torch.rand(6, 2)).pow(2).sum().backward()
    for p in field.parameters():
        assert p.grad is not None and p.grad.abs().sum() > 0
