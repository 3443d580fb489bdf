import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from promise_attention.chain import (
    LayerSpec, chain_forward, convex_update, format_layers, inverted_embedding, layer_eval,
    parse_layers, softmax)
from promise_attention.errors import DimensionError, DomainError
from promise_attention.promises import Verdict

from oracles import dense_composition


def test_layer_eval_examples():
    assert layer_eval([3.0, 5.0, 7.0], LayerSpec([[0, 1, 0]]))[0] == 5.0
    assert layer_eval([3.0, 5.0], LayerSpec([[0, 0]]))[0] == 0.0
    assert layer_eval([2.0, 4.0], LayerSpec([[0.5, 0.5]], 1.0))[0] == 4.0
    with pytest.raises(DimensionError):
        layer_eval([1.0], LayerSpec([[1, 1]]))


def test_activations():
    L = LayerSpec([[1.0], [-1.0]], activation="rectifier")
    np.testing.assert_array_equal(layer_eval([2.0], L), [2.0, 0.0])
    L = LayerSpec([[1.0]], activation="logistic")
    assert layer_eval([0.0], L)[0] == 0.5
    with pytest.raises(DomainError):
        LayerSpec([[1.0]], activation="tanh")


def test_layer_embedding_applies_beta():
    L = LayerSpec(np.eye(2), activation="identity", beta=1.0, embedding="softmax")
    np.testing.assert_allclose(layer_eval([0.0, math.log(2)], L), [1 / 3, 2 / 3])


def test_chain_two_identity_layers_match_dense_product():
    W1 = np.array([[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
    W2 = np.array([[1.0, -1.0, 0.25]])
    layers = [LayerSpec(W1, [0.1, 0.2, 0.3]), LayerSpec(W2, [-0.5])]
    x = [0.7, -1.3]
    res = chain_forward(x, layers)
    assert not res.blocked
    assert abs(res.y - dense_composition(x, layers)).max() < 1e-12


def test_chain_gate_closed():
    layers = [LayerSpec(np.eye(2)), LayerSpec(np.eye(2))]
    res = chain_forward([1.0, 2.0], layers, [Verdict.KEPT, Verdict.NOT_KEPT])
    assert res.blocked and res.blocked_at == 1
    np.testing.assert_array_equal(res.y, [0.0, 0.0])
    np.testing.assert_array_equal(res.outputs[0], [1.0, 2.0])


def test_chain_empty():
    res = chain_forward([1.0, 2.0], [])
    np.testing.assert_array_equal(res.y, [1.0, 2.0])


def test_chain_width_mismatch():
    with pytest.raises(DimensionError):
        chain_forward([1.0, 2.0], [LayerSpec(np.eye(2)), LayerSpec(np.eye(3))])


def test_softmax_examples():
    np.testing.assert_allclose(softmax([3.0, 3.0, 3.0, 3.0], 7.0), [0.25] * 4)
    np.testing.assert_allclose(softmax([0.0, math.log(2)], 1.0), [1 / 3, 2 / 3], rtol=1e-15)
    np.testing.assert_allclose(softmax([0.1, 0.5, 0.3], 100.0), [0, 1, 0], atol=1e-6)
    with pytest.raises(DimensionError):
        softmax([])
    assert np.isfinite(softmax([1e308, -1e308])).all()


def test_inverted_examples():
    assert inverted_embedding([0.0])[0] == 0.0
    assert inverted_embedding([math.log(2)])[0] == pytest.approx(0.5, abs=1e-15)
    out = inverted_embedding([0.0, 0.5, 1.0, 2.0, 5.0], 1.5)
    assert (np.diff(out) > 0).all()
    with pytest.raises(DomainError):
        inverted_embedding([-0.1])


vectors = arrays(np.float64, st.integers(1, 12), elements=st.floats(-50, 50))


@given(vectors, st.floats(0.01, 5), st.floats(-100, 100))
def test_softmax_sums_to_one_and_shift_invariant(w, beta, shift):
    p = softmax(w, beta)
    assert abs(p.sum() - 1) < 1e-12
    np.testing.assert_allclose(softmax(w + shift, beta), p, rtol=1e-9, atol=1e-15)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0, 20)), st.floats(0.05, 1.5))
def test_embeddings_preserve_rank(w, beta):
    for out in (softmax(w, beta), inverted_embedding(w, beta)):
        for i in range(len(w)):
            for j in range(len(w)):
                if w[i] < w[j]:
                    assert out[i] <= out[j]
                elif w[i] == w[j]:
                    assert out[i] == out[j]


def test_convex_update_examples():
    w = np.array([0.0])
    for _ in range(3):
        w = convex_update(w, [1.0], 0.5)
    assert w[0] == 0.875
    same = np.array([0.3, -2.0])
    np.testing.assert_array_equal(convex_update(same, same, 0.7), same)
    w0, dw = np.array([1.0]), np.array([2.0])
    assert abs(convex_update(w0, dw, 0.999) - w0)[0] < 1e-3 * abs(dw - w0)[0]
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            convex_update(w0, dw, bad)
    with pytest.raises(DimensionError):
        convex_update([1.0, 2.0], [1.0], 0.5)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 0.99), st.integers(0, 20))
def test_convex_update_geometric(w0, dw, c, k):
    w = np.array([w0])
    for _ in range(k):
        w = convex_update(w, [dw], c)
    assert abs(abs(w[0] - dw) - c ** k * abs(w0 - dw)) < 1e-12


@settings(max_examples=50)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_layer_file_round_trip(n_layers, seed):
    rng = np.random.default_rng(seed)
    widths = rng.integers(1, 5, n_layers + 1)
    layers = [LayerSpec(rng.normal(size=(widths[i + 1], widths[i])), rng.normal(size=widths[i + 1]),
                        rng.choice(["identity", "logistic", "rectifier"]), float(rng.uniform(0.1, 3)),
                        rng.choice([None, "softmax"]))
              for i in range(n_layers)]
    lines = format_layers(layers)
    again = parse_layers(lines)
    assert format_layers(again) == lines


def test_layer_file_errors_name_line():
    with pytest.raises(ValueError, match="line 3"):
        parse_layers(["LAYER 1 identity 1.0", "ROW 1.0 bias=0.0", "ROW x"])
    with pytest.raises(ValueError, match="line 1"):
        parse_layers(["LAYER 2 identity 1.0", "ROW 1.0 bias=0.0"])
