import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arsvd.compress import LowRankFactors, fixed_rank_truncate
from arsvd.errors import ContractError, ShapeError, SvdConvergenceError
from arsvd.harness import SpectrumSpec, make_matrix_with_spectrum
from arsvd.entropy import rank_for_spectrum
from arsvd.linalg import svd
from arsvd.model import (
    DenseLayer,
    FactoredLayer,
    FlopMeter,
    ModelGraph,
    accuracy_score,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    forward,
    forward_factored,
    macro_f1,
    parameter_count,
    predict,
    softmax,
)


def random_model(dims, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    layers = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        act = "softmax" if i == len(dims) - 2 else "relu"
        layers.append(DenseLayer(scale * rng.standard_normal((b, a)) / np.sqrt(a), rng.standard_normal(b) * 0.1, act))
    return ModelGraph(layers, dims[0], dims[-1])


def test_identity_layer():
    m = ModelGraph([DenseLayer(np.eye(3), np.zeros(3), "identity")], 3, 3)
    np.testing.assert_array_equal(forward(m, [1.0, -2.0, 3.0]), [1, -2, 3])


def test_zero_input_gives_uniform():
    m = random_model([5, 7, 4])
    m = ModelGraph([DenseLayer(l.w, np.zeros_like(l.bias), l.activation) for l in m.layers], 5, 4)
    np.testing.assert_allclose(forward(m, np.zeros(5)), np.full(4, 0.25), rtol=1e-15)


def test_bias_example():
    m = ModelGraph([DenseLayer(np.eye(2), [1.0, -1.0], "identity")], 2, 2)
    np.testing.assert_array_equal(forward(m, [2.0, 3.0]), [3, 2])


def test_chaining_validated():
    with pytest.raises(ShapeError):
        ModelGraph([DenseLayer(np.ones((3, 2)), np.zeros(3)), DenseLayer(np.ones((2, 4)), np.zeros(2))], 2, 2)
    with pytest.raises(ShapeError):
        ModelGraph([DenseLayer(np.ones((3, 2)), np.zeros(3))], 2, 4)
    with pytest.raises(ShapeError):
        DenseLayer(np.ones((3, 2)), np.zeros(2))
    with pytest.raises(ContractError):
        DenseLayer(np.ones((3, 2)), np.zeros(3), "tanh")


def test_forward_input_dimension_checked():
    with pytest.raises(ShapeError):
        forward(random_model([4, 3]), np.ones(5))


def test_factored_identity_slices():
    layer = FactoredLayer(LowRankFactors(np.eye(3)[:, :1], np.array([2.0]), np.eye(3)[:1, :]), np.zeros(3), "identity")
    np.testing.assert_array_equal(forward_factored(layer, [1.0, 0.0, 0.0]), [2, 0, 0])


def test_exact_factorization_matches_dense_layer():
    rng = np.random.default_rng(1)
    dense = DenseLayer(rng.standard_normal((6, 9)), rng.standard_normal(6), "relu")
    fact = FactoredLayer(fixed_rank_truncate(dense.w, 6), dense.bias, "relu")
    for _ in range(20):
        h = rng.standard_normal(9)
        np.testing.assert_allclose(forward_factored(fact, h), np.maximum(dense.w @ h + dense.bias, 0), atol=1e-8, rtol=0)


def test_truncated_factors_match_materialized_product():
    rng = np.random.default_rng(2)
    w = rng.standard_normal((10, 8))
    f = fixed_rank_truncate(w, 3)
    layer = FactoredLayer(f, np.zeros(10), "identity")
    w_hat = f.materialize()
    for _ in range(20):
        h = rng.standard_normal(8)
        np.testing.assert_allclose(forward_factored(layer, h), w_hat @ h, atol=1e-10, rtol=0)


def test_flop_meter_counts():
    m = random_model([12, 9, 5])
    meter = FlopMeter()
    forward(m, np.ones(12), meter)
    assert meter.per_layer == {0: 9 * 12, 1: 5 * 9}
    cm, _, rep = compress_model_fixed_rank(m, [4, 2])
    meter = FlopMeter()
    forward(cm, np.ones((3, 12)), meter)
    assert meter.per_layer == {0: 3 * (4 * 12 + 4 + 4 * 9), 1: 3 * (2 * 9 + 2 + 2 * 5)}
    assert [r.flops_after for r in rep.layers] == [4 * 21 + 4, 2 * 14 + 2]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-700, 700), min_size=1, max_size=30))
def test_softmax_sums_to_one(z):
    p = softmax(np.array(z))
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all(p >= 0)


def test_compress_rank_one_model():
    rng = np.random.default_rng(3)
    dims = [6, 8, 4]
    layers = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        layers.append(DenseLayer(np.outer(rng.standard_normal(b), rng.standard_normal(a)), np.zeros(b), "softmax" if i else "relu"))
    cm, log, rep = compress_model(ModelGraph(layers, 6, 4), 0.9)
    assert [r.k for r in log] == [1, 1]
    assert rep.totals()["params_after"] == (8 + 6) + (4 + 8)


def test_compress_full_tau_matches_dense():
    m = random_model([16, 12, 5], seed=4)
    cm, log, rep = compress_model(m, 1.0)
    assert [r.k for r in log] == [12, 5]
    X = np.random.default_rng(5).standard_normal((100, 16))
    np.testing.assert_allclose(forward(cm, X), forward(m, X), atol=1e-6, rtol=0)
    np.testing.assert_array_equal(predict(cm, X), predict(m, X))


def test_compress_preserves_bias_and_activation():
    m = random_model([7, 6, 3], seed=6)
    cm, _, _ = compress_model(m, 0.6)
    for a, b in zip(m.layers, cm.layers):
        assert isinstance(b, FactoredLayer)
        assert b.bias is a.bias or np.array_equal(b.bias, a.bias)
        assert b.activation == a.activation


def test_power_law_two_layer_model():
    dims = [64, 32, 10]
    layers = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        spec = SpectrumSpec.power_law(min(a, b), 1.5)
        layers.append(DenseLayer(make_matrix_with_spectrum(spec, b, a, seed=i), np.zeros(b), "softmax" if i else "relu"))
    model = ModelGraph(layers, 64, 10)
    _, log, _ = compress_model(model, 0.9)
    for rec, layer in zip(log, layers):
        oracle = rank_for_spectrum(svd(layer.w).s, 0.9).k
        assert rec.k == oracle < min(rec.m, rec.n)


def test_no_inflate_keeps_dense_layers():
    m = random_model([4, 4, 4], seed=7)
    cm, log, rep = compress_model(m, 1.0, no_inflate=True)
    assert all(isinstance(l, DenseLayer) for l in cm.layers)
    assert all(r.inflation and r.kept_dense for r in rep.layers)
    assert rep.totals()["params_after"] == rep.totals()["params_before"]
    cm, _, rep = compress_model(m, 1.0)
    assert all(isinstance(l, FactoredLayer) for l in cm.layers)
    assert not rep.reduces_params()


def test_compress_error_carries_layer_index(monkeypatch):
    import arsvd.compress as comp

    def boom(w):
        raise SvdConvergenceError("no convergence", residual=1.0, sweeps=60)

    monkeypatch.setattr(comp, "svd", boom)
    with pytest.raises(SvdConvergenceError, match="layer 0") as info:
        compress_model(random_model([3, 2]), 0.5)
    assert info.value.layer_index == 0


def test_fixed_rank_global_is_clipped():
    m = random_model([10, 8, 3])
    _, log, _ = compress_model_fixed_rank(m, 5)
    assert [r.k for r in log] == [5, 3]
    with pytest.raises(ContractError):
        compress_model_fixed_rank(m, [1, 2, 3])


def test_parameter_count():
    m = random_model([10, 8, 3])
    assert parameter_count(m) == 80 + 8 + 24 + 3
    cm, _, _ = compress_model_fixed_rank(m, [2, 1])
    assert parameter_count(cm, include_bias=False) == 2 * 18 + 2 + 1 * 11 + 1


def test_metrics_examples():
    y = np.array([0, 1, 0, 1])
    assert accuracy_score(y, y) == 1.0 and macro_f1(y, y) == 1.0
    pred = np.zeros(4, dtype=int)
    assert accuracy_score(y, pred) == 0.5
    assert macro_f1(y, pred) == pytest.approx(1 / 3)


def test_macro_f1_against_counting_oracle():
    rng = np.random.default_rng(8)
    y, p = rng.integers(0, 4, 200), rng.integers(0, 4, 200)
    scores = []
    for c in range(4):
        tp = sum(1 for a, b in zip(y, p) if a == c and b == c)
        prec = tp / sum(1 for b in p if b == c)
        rec = tp / sum(1 for a in y if a == c)
        scores.append(2 * prec * rec / (prec + rec))
    assert macro_f1(y, p) == pytest.approx(np.mean(scores), abs=1e-12)


def test_evaluate():
    m = random_model([6, 5, 3], seed=9)
    X = np.random.default_rng(10).standard_normal((50, 6))
    y = predict(m, X)
    met = evaluate(m, X, y, repeat=5)
    assert met.accuracy == 1.0 and met.macro_f1 == 1.0
    assert met.flops == 50 * (30 + 15)
    assert met.seconds_per_sample > 0
    with pytest.raises(ContractError):
        evaluate(m, np.zeros((0, 6)), np.zeros(0))
