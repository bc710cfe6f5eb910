import math

import numpy as np
import pytest

from gradcheck import numeric_grad, rel_error
from tvscm.errors import DimensionError, LabelRangeError
from tvscm.nn import (
    DenseLayer,
    Model,
    TVSCMLayer,
    build_model,
    count_parameters,
    load_checkpoint,
    relu,
    relu_backward,
    save_checkpoint,
    softmax_cross_entropy,
)
from tvscm.structmat import materialize
from tvscm.train import init_parameters

PATHS = ("naive", "fft", "lowrank")


def tvscm_layer(n, a, b, bias=None, path="auto"):
    return TVSCMLayer(n, a, b, use_bias=bias is not None, bias=bias, path=path)


class TestTVSCMForward:
    def test_zero_values_give_zero(self):
        X = np.random.default_rng(0).standard_normal((3, 6))
        assert np.all(tvscm_layer(6, 0.0, 0.0).forward(X) == 0.0)

    @pytest.mark.parametrize("path", PATHS)
    def test_unit_vector(self, path):
        out = tvscm_layer(4, 1.0, 2.0, path=path).forward([[1, 0, 0, 0]])
        np.testing.assert_allclose(out, [[1, 2, 1, 2]], atol=1e-12)

    @pytest.mark.parametrize("path", PATHS)
    def test_odd_with_bias(self, path):
        out = tvscm_layer(3, 1.0, 3.0, bias=[1, 1, 1], path=path).forward([[1, -1, 0]])
        np.testing.assert_allclose(out, [[0, 2, 1]], atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            tvscm_layer(4, 1, 2).forward(np.ones((2, 5)))

    def test_operator_tracks_values(self):
        layer = tvscm_layer(5, 1.0, 3.0)
        layer.set_values(2.0, -1.0)
        np.testing.assert_array_equal(layer.op.sym.v_sym, [2.0, 0.5, 0.5, 0.5, 0.5])
        layer.ab[:] = (1.0, 1.0)
        layer.refresh()
        np.testing.assert_array_equal(layer.op.sym.v_sym, np.ones(5))

    def test_param_count(self):
        assert tvscm_layer(10, 1, 2).num_params() == 2
        assert tvscm_layer(10, 1, 2, bias=np.zeros(10)).num_params() == 12

    def test_deterministic_naive(self):
        X = np.random.default_rng(1).standard_normal((4, 9))
        layer = tvscm_layer(9, 0.3, -0.2, path="naive")
        assert layer.forward(X).tobytes() == layer.forward(X).tobytes()

    @pytest.mark.parametrize("n", [4, 5, 100, 187])
    def test_paths_agree(self, n):
        rng = np.random.default_rng(n)
        X = rng.standard_normal((7, n))
        a, b = rng.standard_normal(2)
        ref = tvscm_layer(n, a, b, path="naive").forward(X)
        for path in ("fft", "lowrank"):
            out = tvscm_layer(n, a, b, path=path).forward(X)
            assert np.max(np.abs(out - ref)) <= 1e-9 * (np.max(np.abs(ref)) + 1e-12)


def layer_loss(layer, X, G):
    return lambda: float(np.sum(G * layer.forward(X)))


class TestTVSCMBackward:
    def test_zero_upstream(self):
        layer = tvscm_layer(5, 1.0, 2.0, bias=np.zeros(5))
        grads, dX = layer.backward(np.ones((2, 5)), np.zeros((2, 5)))
        assert np.all(grads["ab"] == 0) and np.all(grads["bias"] == 0) and np.all(dX == 0)

    @pytest.mark.parametrize("path", PATHS)
    def test_worked_example(self, path):
        layer = tvscm_layer(4, 1.0, 2.0, path=path)
        X = np.array([[1.0, 0, 0, 0]])
        G = np.array([[1.0, 0, 0, 0]])
        np.testing.assert_allclose(layer.correlation(X, G), [1, 0, 0, 0], atol=1e-12)
        grads, _ = layer.backward(X, G)
        np.testing.assert_allclose(grads["ab"], [1.0, 0.0], atol=1e-12)
        fd = numeric_grad(layer_loss(layer, X, G), layer.ab, layer.refresh)
        np.testing.assert_allclose(fd, [1.0, 0.0], atol=1e-8)

    def test_correlation_definition(self):
        rng = np.random.default_rng(5)
        for n in (4, 7):
            X = rng.standard_normal((3, n))
            G = rng.standard_normal((3, n))
            T = [sum(G[s, i] * X[s, (i + k) % n] for s in range(3) for i in range(n))
                 for k in range(n)]
            for path in ("naive", "fft"):
                np.testing.assert_allclose(tvscm_layer(n, 0, 0, path=path).correlation(X, G), T,
                                           atol=1e-12)

    @pytest.mark.parametrize("n", [4, 5, 16, 187])
    @pytest.mark.parametrize("batch", [1, 7])
    @pytest.mark.parametrize("use_bias", [False, True])
    @pytest.mark.parametrize("path", PATHS)
    def test_finite_differences(self, n, batch, use_bias, path):
        rng = np.random.default_rng(n * 100 + batch)
        a, b = rng.standard_normal(2)
        bias = rng.standard_normal(n) if use_bias else None
        layer = tvscm_layer(n, a, b, bias=bias, path=path)
        X = rng.standard_normal((batch, n))
        G = rng.standard_normal((batch, n))
        grads, dX = layer.backward(X, G)
        f = layer_loss(layer, X, G)
        assert rel_error(grads["ab"], numeric_grad(f, layer.ab, layer.refresh)) <= 1e-4
        if use_bias:
            assert rel_error(grads["bias"], numeric_grad(f, layer.bias)) <= 1e-4
        Xv = X.copy()
        fx = lambda: float(np.sum(G * layer.forward(Xv)))
        assert rel_error(dX, numeric_grad(fx, Xv)) <= 1e-4

    @pytest.mark.parametrize("n", [3, 8, 64, 187])
    def test_input_gradient_is_forward(self, n):
        rng = np.random.default_rng(n)
        layer = tvscm_layer(n, *rng.standard_normal(2), bias=rng.standard_normal(n))
        G = rng.standard_normal((5, n))
        _, dX = layer.backward(rng.standard_normal((5, n)), G)
        plain = tvscm_layer(n, layer.a, layer.b, path=layer.path)
        ref = plain.forward(G)
        assert np.max(np.abs(dX - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_input_gradient_matches_transpose(self):
        rng = np.random.default_rng(9)
        layer = tvscm_layer(6, 0.4, -1.1)
        G = rng.standard_normal((2, 6))
        _, dX = layer.backward(np.zeros((2, 6)), G)
        np.testing.assert_allclose(dX, G @ materialize(layer.op.sym).T, atol=1e-12)

    def test_batch_mismatch(self):
        with pytest.raises(DimensionError):
            tvscm_layer(4, 1, 2).backward(np.ones((2, 4)), np.ones((3, 4)))


class TestDense:
    def test_scalar_affine(self):
        layer = DenseLayer(1, 1, [[3.0]], [0.0])
        assert layer.forward([[2.0]]).tolist() == [[6.0]]

    def test_zero_input_gives_bias(self):
        layer = DenseLayer(3, 2, np.ones((2, 3)), [0.5, -1.0])
        assert layer.forward(np.zeros((4, 3))).tolist() == [[0.5, -1.0]] * 4

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            DenseLayer(3, 2, np.ones((3, 2)))
        with pytest.raises(DimensionError):
            DenseLayer(3, 2).forward(np.ones((1, 2)))

    @pytest.mark.parametrize("batch", [1, 7])
    def test_finite_differences(self, batch):
        rng = np.random.default_rng(batch)
        layer = DenseLayer(5, 4, rng.standard_normal((4, 5)), rng.standard_normal(4))
        X = rng.standard_normal((batch, 5))
        G = rng.standard_normal((batch, 4))
        grads, dX = layer.backward(X, G)
        f = layer_loss(layer, X, G)
        assert rel_error(grads["weights"], numeric_grad(f, layer.weights)) <= 1e-4
        assert rel_error(grads["bias"], numeric_grad(f, layer.bias)) <= 1e-4
        Xv = X.copy()
        assert rel_error(dX, numeric_grad(lambda: float(np.sum(G * layer.forward(Xv))), Xv)) <= 1e-4

    def test_param_count(self):
        assert DenseLayer(784, 10).num_params() == 7850


class TestActivationsAndLoss:
    def test_relu(self):
        Z = np.array([[-1.0, 0.0, 2.0]])
        assert relu(Z).tolist() == [[0.0, 0.0, 2.0]]
        assert relu_backward(Z, np.ones_like(Z)).tolist() == [[0.0, 0.0, 1.0]]

    @pytest.mark.parametrize("k", [2, 5, 10])
    def test_uniform_logits(self, k):
        loss, _ = softmax_cross_entropy(np.zeros((3, k)), np.arange(3) % k)
        assert loss == pytest.approx(math.log(k), rel=1e-12)

    def test_peaked_logits(self):
        logits = np.full((2, 4), -50.0)
        logits[[0, 1], [1, 3]] = 50.0
        loss, grad = softmax_cross_entropy(logits, np.array([1, 3]))
        assert loss < 1e-12
        assert np.max(np.abs(grad)) < 1e-12

    def test_stable_for_huge_logits(self):
        loss, grad = softmax_cross_entropy(np.array([[1e4, 0.0]]), np.array([1]))
        assert loss == pytest.approx(1e4) and np.all(np.isfinite(grad))

    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        logits = rng.standard_normal((3, 4))
        labels = np.array([0, 3, 1])
        _, grad = softmax_cross_entropy(logits, labels)
        fd = numeric_grad(lambda: softmax_cross_entropy(logits, labels)[0], logits)
        assert rel_error(grad, fd) <= 1e-5

    def test_label_out_of_range(self):
        with pytest.raises(LabelRangeError):
            softmax_cross_entropy(np.zeros((2, 3)), np.array([0, 3]))
        with pytest.raises(LabelRangeError):
            softmax_cross_entropy(np.zeros((1, 3)), np.array([-1]))


class TestModel:
    def test_chain_check(self):
        with pytest.raises(DimensionError):
            Model([DenseLayer(4, 3), DenseLayer(2, 2)], ["relu", "identity"], 2)
        with pytest.raises(DimensionError):
            Model([DenseLayer(4, 3)], ["identity"], 2)
        with pytest.raises(ValueError):
            Model([DenseLayer(4, 3)], ["tanh"], 3)

    @pytest.mark.parametrize("arch", ["dense", "tvscm"])
    @pytest.mark.parametrize("dim", [6, 7])
    def test_end_to_end_gradients(self, arch, dim):
        rng = np.random.default_rng(dim)
        model = init_parameters(build_model(arch, dim, 3, tvscm_bias=True), seed=dim)
        X = rng.standard_normal((7, dim))
        y = rng.integers(0, 3, 7)
        _, _, grads = model.loss_and_grads(X, y)
        f = lambda: softmax_cross_entropy(model.forward(X), y)[0]
        for layer, g in zip(model.layers, grads):
            for name, param in layer.parameters().items():
                assert rel_error(g[name], numeric_grad(f, param, layer.refresh)) <= 1e-4

    def test_forward_matches_forward_train(self):
        model = init_parameters(build_model("tvscm", 9, 4), seed=1)
        X = np.random.default_rng(0).standard_normal((5, 9))
        logits, _ = model.forward_train(X)
        np.testing.assert_array_equal(model.forward(X), logits)


class TestParameterCounts:
    @pytest.mark.parametrize("arch,in_dim,classes,expected", [
        ("dense", 784, 10, 623_290),
        ("tvscm", 784, 10, 7_852),
        ("dense", 187, 5, 24_709),
        ("tvscm", 187, 5, 942),
    ])
    def test_reconstructed_models(self, arch, in_dim, classes, expected):
        assert count_parameters(build_model(arch, in_dim, classes)) == expected

    def test_hidden_widths_are_unique_solutions(self):
        # h*(in + 1) + classes*(h + 1) = published count
        for in_dim, classes, total in ((784, 10, 623_290), (187, 5, 24_709)):
            sols = [h for h in range(1, 5000)
                    if h * (in_dim + 1) + classes * (h + 1) == total]
            assert sols == [build_model("dense", in_dim, classes).layers[0].out_dim]

    def test_tvscm_bias_adds_n(self):
        assert count_parameters(build_model("tvscm", 784, 10, tvscm_bias=True)) == 7_852 + 784

    def test_unknown_arch(self):
        with pytest.raises(ValueError):
            build_model("bogus", 4, 2)


class TestCheckpoint:
    @pytest.mark.parametrize("arch,bias", [("dense", False), ("tvscm", False), ("tvscm", True)])
    def test_round_trip_bit_identical(self, tmp_path, arch, bias):
        model = init_parameters(build_model(arch, 11, 3, tvscm_bias=bias), seed=4)
        if bias:
            model.layers[0].bias[:] = np.random.default_rng(0).standard_normal(11)
        model.set_matvec_path("naive")
        path = tmp_path / "m.json"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        loaded.set_matvec_path("naive")
        X = np.random.default_rng(1).standard_normal((6, 11))
        assert loaded.forward(X).tobytes() == model.forward(X).tobytes()
        assert count_parameters(loaded) == count_parameters(model)

    def test_schema(self, tmp_path):
        import json
        model = init_parameters(build_model("tvscm", 5, 2), seed=0)
        save_checkpoint(model, tmp_path / "m.json")
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["format_version"] == 1
        assert doc["loss"] == {"kind": "softmax_cross_entropy", "classes": 2}
        first, head = doc["layers"]
        assert first["kind"] == "tvscm" and first["n"] == 5 and first["bias"] is None
        assert first["activation"] == "relu" and head["activation"] == "identity"
        assert head["kind"] == "dense" and (head["m"], head["n"]) == (2, 5)

    def test_rejects_unknown_version(self):
        with pytest.raises(ValueError):
            Model.from_dict({"format_version": 99, "layers": [], "loss": {}})
