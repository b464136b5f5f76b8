import numpy as np
import pytest

from multiatk.sandbox.data import DatasetConfig, class_templates, make_dataset
from multiatk.sandbox.model import (
    SandboxModel,
    forward,
    init_model,
    loss_and_grads,
    loss_value,
    predict,
)


class TestDataset:
    def test_same_seed_bit_identical(self):
        cfg = DatasetConfig(n_train=60, n_test=30, seed=7)
        a, b = make_dataset(cfg), make_dataset(cfg)
        assert a.train_x.tobytes() == b.train_x.tobytes()
        assert a.test_x.tobytes() == b.test_x.tobytes()
        assert np.array_equal(a.train_y, b.train_y)

    def test_different_seed_differs(self):
        a = make_dataset(DatasetConfig(n_train=60, n_test=30, seed=1))
        b = make_dataset(DatasetConfig(n_train=60, n_test=30, seed=2))
        assert a.train_x.tobytes() != b.train_x.tobytes()

    def test_pixels_in_unit_interval(self):
        ds = make_dataset(DatasetConfig(n_train=200, n_test=50, noise=0.5, seed=3))
        for arr in (ds.train_x, ds.test_x):
            assert arr.min() >= 0.0 and arr.max() <= 1.0

    def test_balanced_within_one(self):
        ds = make_dataset(DatasetConfig(n_train=100, n_test=50, seed=5))
        counts = np.bincount(ds.train_y, minlength=3)
        assert counts.max() - counts.min() <= 1

    def test_zero_noise_images_equal_class_templates(self):
        cfg = DatasetConfig(n_train=30, n_test=9, noise=0.0, seed=11)
        ds = make_dataset(cfg)
        masks = class_templates(cfg.height, cfg.width, cfg.num_classes).reshape(3, -1)
        rendered = 0.15 + 0.6 * masks
        for x, y in zip(ds.test_x, ds.test_y):
            assert np.array_equal(x, rendered[y])


def finite_difference(fn, x, h=1e-5):
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        up = fn()
        xf[i] = orig - h
        down = fn()
        xf[i] = orig
        flat[i] = (up - down) / (2 * h)
    return grad


def relative_error(a, n):
    return np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-4)


class TestGradients:
    def test_zero_weights_uniform_softmax(self):
        model = SandboxModel(w1=np.zeros((3, 4)), b1=np.zeros(3))
        x = np.array([0.3, 0.6, 0.1, 0.9])
        assert np.allclose(forward(model, x), 0.0)
        assert loss_value(model, x, 1)[0] == pytest.approx(np.log(3))

    def test_linear_input_gradient_closed_form(self, rng):
        model = init_model(6, 3, hidden_dim=0, rng=rng)
        x = rng.uniform(0, 1, size=(4, 6))
        y = rng.integers(0, 3, size=4)
        logits = forward(model, x)
        probs = np.exp(logits - logits.max(1, keepdims=True))
        probs /= probs.sum(1, keepdims=True)
        onehot = np.eye(3)[y]
        expected = (probs - onehot) @ model.w1
        _, _, dx = loss_and_grads(model, x, y)
        assert np.allclose(dx, expected, atol=1e-12)

    def test_parameter_and_input_grads_match_finite_differences(self, rng):
        ds = make_dataset(DatasetConfig(n_train=12, n_test=6, seed=2))
        worst = 0.0
        for trial in range(10):
            model = init_model(ds.input_dim, 3, hidden_dim=8, rng=rng)
            i = int(rng.integers(0, len(ds.test_y)))
            x = ds.test_x[i].copy()
            y = int(ds.test_y[i])
            _, grads, dx = loss_and_grads(model, x, y)
            num_dx = finite_difference(lambda: loss_value(model, x, y)[0], x)
            worst = max(worst, relative_error(dx[0], num_dx).max())
            for name, p in model.parameters().items():
                num = finite_difference(lambda: loss_value(model, x, y)[0], p)
                worst = max(worst, relative_error(grads[name], num).max())
        assert worst < 1e-4

    def test_batched_grads_are_mean_of_singletons(self, rng):
        model = init_model(5, 3, hidden_dim=4, rng=rng)
        x = rng.uniform(0, 1, size=(3, 5))
        y = np.array([0, 2, 1])
        _, grads, _ = loss_and_grads(model, x, y)
        singles = [loss_and_grads(model, x[i], y[i])[1] for i in range(3)]
        for name in grads:
            stacked = np.mean([s[name] for s in singles], axis=0)
            assert np.allclose(grads[name], stacked, atol=1e-12)

    def test_prediction_matches_argmax(self, rng):
        model = init_model(5, 3, hidden_dim=4, rng=rng)
        x = rng.uniform(0, 1, size=(10, 5))
        assert np.array_equal(predict(model, x), forward(model, x).argmax(1))
