import numpy as np
import pytest

from aecfeat.errors import (
    DegenerateLabels,
    DimChainBroken,
    DimMismatch,
    NoSoftmaxHead,
    ShapeMismatch,
)
from aecfeat.network import (
    Layer,
    LayerSpec,
    Network,
    TrainConfig,
    cross_entropy,
    forward,
    grad,
    init_network,
    one_hot,
    predict,
    sgd_step,
    train,
)


def small_net(dims, seed=0, frozen_first=False):
    specs = [LayerSpec(a, b, "sigmoid") for a, b in zip(dims[:-2], dims[1:-1])]
    specs.append(LayerSpec(dims[-2], dims[-1], "softmax"))
    if frozen_first:
        specs[0].frozen = True
    return init_network(specs, seed=seed)


def finite_diff_grads(net, x, y, h=1e-5):
    """Central finite differences of mean cross-entropy w.r.t. all params."""
    grads = []
    for layer in net.layers:
        gw = np.zeros_like(layer.w)
        for idx in np.ndindex(*layer.w.shape):
            orig = layer.w[idx]
            layer.w[idx] = orig + h
            up = cross_entropy(predict(net, x), y)
            layer.w[idx] = orig - h
            down = cross_entropy(predict(net, x), y)
            layer.w[idx] = orig
            gw[idx] = (up - down) / (2 * h)
        gb = np.zeros_like(layer.b)
        for i in range(len(layer.b)):
            orig = layer.b[i]
            layer.b[i] = orig + h
            up = cross_entropy(predict(net, x), y)
            layer.b[i] = orig - h
            down = cross_entropy(predict(net, x), y)
            layer.b[i] = orig
            gb[i] = (up - down) / (2 * h)
        grads.append((gw, gb))
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestInit:
    def test_deterministic(self):
        a = small_net([5, 4, 3], seed=1)
        b = small_net([5, 4, 3], seed=1)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.w, lb.w)
            assert np.array_equal(la.b, lb.b)

    def test_shapes(self):
        net = small_net([512, 300, 15])
        assert net.layers[0].w.shape == (300, 512)
        assert net.layers[1].w.shape == (15, 300)
        assert not net.layers[0].b.any()

    def test_seeds_differ(self):
        a = small_net([5, 4, 3], seed=1)
        b = small_net([5, 4, 3], seed=2)
        assert not np.array_equal(a.layers[0].w, b.layers[0].w)

    def test_broken_chain(self):
        with pytest.raises(DimChainBroken):
            init_network([LayerSpec(5, 4), LayerSpec(3, 2, "softmax")])


class TestForward:
    def test_zero_sigmoid_is_half(self):
        net = Network([Layer(np.zeros((3, 4)), np.zeros(3), "sigmoid")])
        out = forward(net, np.random.default_rng(0).standard_normal((6, 4)))[-1]
        assert np.array_equal(out, np.full((6, 3), 0.5))

    def test_uniform_softmax(self):
        net = Network([Layer(np.zeros((3, 2)), np.zeros(3), "softmax")])
        out = predict(net, [[1.0, -1.0]])
        assert np.allclose(out, 1.0 / 3.0)

    def test_softmax_stability(self):
        net = Network([Layer(np.eye(2), np.zeros(2), "softmax")])
        out = predict(net, [[1000.0, 0.0]])
        assert np.all(np.isfinite(out))
        assert out[0, 0] == pytest.approx(1.0)
        assert out[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        net = small_net([4, 5, 3], seed=0)
        out = predict(net, rng.standard_normal((50, 4)) * 20)
        assert np.max(np.abs(out.sum(axis=1) - 1.0)) <= 1e-9

    def test_dim_mismatch(self):
        net = small_net([4, 5, 3])
        with pytest.raises(DimMismatch):
            forward(net, np.zeros((2, 7)))


class TestGrad:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            net = small_net([3, 4, 2], seed=trial)
            x = rng.standard_normal((6, 3))
            y = one_hot(rng.integers(0, 2, 6), 2)
            assert max_rel_error(grad(net, x, y), finite_diff_grads(net, x, y)) < 1e-4

    def test_perfect_prediction_zero_delta(self):
        net = Network([Layer(np.zeros((2, 2)), np.array([50.0, -50.0]), "softmax")])
        x = np.zeros((4, 2))
        y = one_hot(np.zeros(4, dtype=int), 2)
        g = grad(net, x, y)
        assert np.max(np.abs(g[0][1])) <= 1e-9

    def test_frozen_layer_zero_block(self):
        net = small_net([3, 4, 2], frozen_first=True)
        x = np.random.default_rng(3).standard_normal((5, 3))
        y = one_hot([0, 1, 0, 1, 0], 2)
        g = grad(net, x, y)
        assert not g[0][0].any() and not g[0][1].any()
        assert g[1][0].any()

    def test_requires_softmax_head(self):
        net = Network([Layer(np.zeros((2, 2)), np.zeros(2), "sigmoid")])
        with pytest.raises(NoSoftmaxHead):
            grad(net, np.zeros((1, 2)), np.zeros((1, 2)))


class TestSgdStep:
    def test_weight_decay_only(self):
        layer = Layer(np.array([[1.0]]), np.array([0.0]), "linear")
        vel = (np.zeros((1, 1)), np.zeros(1))
        sgd_step(layer, (np.zeros((1, 1)), np.zeros(1)), vel, 0.1, 0.0, 0.5)
        assert layer.w[0, 0] == pytest.approx(0.95)

    def test_momentum_two_steps(self):
        layer = Layer(np.array([[0.0]]), np.array([0.0]), "linear")
        vel = (np.zeros((1, 1)), np.zeros(1))
        g = (np.array([[1.0]]), np.zeros(1))
        sgd_step(layer, g, vel, 0.1, 0.9, 0.0)
        assert layer.w[0, 0] == pytest.approx(-0.1)
        sgd_step(layer, g, vel, 0.1, 0.9, 0.0)
        assert vel[0][0, 0] == pytest.approx(1.9)
        assert layer.w[0, 0] == pytest.approx(-0.29)

    def test_zero_lr_keeps_params_but_accumulates_velocity(self):
        layer = Layer(np.array([[2.0]]), np.array([1.0]), "linear")
        vel = (np.zeros((1, 1)), np.zeros(1))
        g = (np.array([[1.0]]), np.array([1.0]))
        sgd_step(layer, g, vel, 0.0, 0.9, 0.0)
        assert layer.w[0, 0] == 2.0 and layer.b[0] == 1.0
        assert vel[0][0, 0] == 1.0 and vel[1][0] == 1.0

    def test_shape_mismatch(self):
        layer = Layer(np.zeros((2, 2)), np.zeros(2), "linear")
        vel = (np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(ShapeMismatch):
            sgd_step(layer, (np.zeros((3, 2)), np.zeros(2)), vel, 0.1, 0.0, 0.0)


def xor_data(copies=25):
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    labels = np.array([0, 1, 1, 0])
    x = np.tile(pts, (copies, 1))
    y = np.tile(labels, copies)
    return x, y


class TestTrain:
    def test_learns_xor(self):
        x, y = xor_data()
        net = small_net([2, 8, 2], seed=0)
        cfg = TrainConfig(lr0=0.5, weight_decay=0.0, batch_size=16,
                          max_epochs_per_stage=400, seed=0)
        trained, report = train(net, x, y, cfg)
        pred = np.argmax(predict(trained, x), axis=1)
        assert np.mean(pred == y) == 1.0
        assert len(report.train_ce) == report.final_epoch

    def test_zero_epochs_returns_initial(self):
        x, y = xor_data(5)
        net = small_net([2, 4, 2], seed=0)
        cfg = TrainConfig(max_epochs_per_stage=0, seed=0)
        trained, report = train(net, x, y, cfg)
        assert report.train_ce == [] and report.val_ce == []
        for a, b in zip(trained.layers, net.layers):
            assert np.array_equal(a.w, b.w)

    def test_separable_blobs_low_validation_ce(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((100, 2)) + [-5.0, -5.0]
        b = rng.standard_normal((100, 2)) + [5.0, 5.0]
        x = np.vstack([a, b])
        y = np.array([0] * 100 + [1] * 100)
        net = small_net([2, 4, 2], seed=0)
        cfg = TrainConfig(lr0=0.2, weight_decay=0.0, max_epochs_per_stage=100, seed=0)
        trained, report = train(net, x, y, cfg)
        assert report.val_ce[-1] < 0.1 or min(report.val_ce) < 0.1

    def test_degenerate_labels(self):
        net = small_net([2, 3, 2])
        with pytest.raises(DegenerateLabels):
            train(net, np.zeros((4, 2)), np.zeros(4, dtype=int), TrainConfig())

    def test_deterministic(self):
        x, y = xor_data(5)
        cfg = TrainConfig(lr0=0.3, max_epochs_per_stage=20, seed=7)
        r1 = train(small_net([2, 4, 2], seed=7), x, y, cfg)
        r2 = train(small_net([2, 4, 2], seed=7), x, y, cfg)
        for a, b in zip(r1[0].layers, r2[0].layers):
            assert np.array_equal(a.w, b.w) and np.array_equal(a.b, b.b)
        assert r1[1].train_ce == r2[1].train_ce

    def test_two_stage_schedule_recorded(self):
        x, y = xor_data(5)
        cfg = TrainConfig(lr0=0.3, max_epochs_per_stage=10,
                          patience_epochs=3, seed=0)
        _, report = train(small_net([2, 4, 2], seed=0), x, y, cfg)
        assert len(report.stage_boundaries) == 2
        assert report.stage_boundaries[0] == 0
        assert 0 < report.stage_boundaries[1] <= 10

    def test_frozen_layers_bit_identical(self):
        x, y = xor_data(10)
        net = small_net([2, 6, 2], seed=1, frozen_first=True)
        before_w = net.layers[0].w.copy()
        before_b = net.layers[0].b.copy()
        cfg = TrainConfig(lr0=0.3, max_epochs_per_stage=30, seed=1)
        trained, _ = train(net, x, y, cfg)
        assert np.array_equal(trained.layers[0].w, before_w)
        assert np.array_equal(trained.layers[0].b, before_b)

    def test_full_batch_convex_ce_non_increasing(self):
        # single softmax layer on fixed data is a convex problem
        rng = np.random.default_rng(3)
        x = rng.standard_normal((40, 3))
        y = (x[:, 0] > 0).astype(int)
        net = init_network([LayerSpec(3, 2, "softmax")], seed=0)
        cfg = TrainConfig(lr0=0.05, momentum=0.0, weight_decay=0.0,
                          batch_size=40, val_ratio=0.0, patience_epochs=10 ** 6,
                          min_rel_improve=0.0, n_lr_stages=1,
                          max_epochs_per_stage=50, seed=0)
        _, report = train(net, x, y, cfg)
        diffs = np.diff(report.train_ce)
        assert np.all(diffs <= 1e-8)
