"""
Tests for the two-layer MLP regressor.

Forward passes are checked against a naive loop oracle, gradients against
central finite differences, and training against problems with a known
answer.
"""

import math

import numpy as np
import pytest

from src.core import mlp
from src.core.mlp import MLPParams, Objective, TrainConfig
from src.utils.errors import DimensionMismatchError, DivergedTrainingError, EmptyInputError


def _params(w1, b1, w2, b2, activation='sigmoid'):
    return MLPParams(np.asarray(w1, dtype=float), np.asarray(b1, dtype=float),
                     np.asarray(w2, dtype=float), float(b2), activation)


def _constant_model(value, input_dim=2, hidden=3):
    return _params(np.zeros((hidden, input_dim)), np.zeros(hidden), np.zeros((1, hidden)), value)


def _loop_forward(params, x):
    """Naive triple-loop oracle."""
    out = params.b2
    for j in range(params.hidden):
        z = params.b1[j]
        for i in range(params.input_dim):
            z += params.w1[j][i] * x[i]
        a = 1.0 / (1.0 + math.exp(-z)) if params.activation == 'sigmoid' else max(z, 0.0)
        out += params.w2[0][j] * a
    return out


# =============================================================================
# Forward pass
# =============================================================================


class TestForward:

    def test_zero_weights_return_output_bias(self):
        params = _constant_model(3.0)
        assert mlp.forward(params, np.array([5.0, -2.0])) == 3.0

    def test_zero_output_head_ignores_hidden_layer(self):
        rng = np.random.default_rng(0)
        params = _params(rng.normal(size=(4, 3)), rng.normal(size=4), np.zeros((1, 4)), -1.5)
        assert mlp.forward(params, rng.normal(size=3)) == -1.5

    @pytest.mark.parametrize('activation', ['sigmoid', 'relu'])
    def test_matches_loop_oracle(self, activation):
        config = TrainConfig(hidden=7, seed=11, activation=activation)
        params = mlp.init_params(5, config)
        params = MLPParams(params.w1, np.linspace(-0.5, 0.5, 7), params.w2, 0.3, activation)
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.normal(size=5)
            assert mlp.forward(params, x) == pytest.approx(_loop_forward(params, x), abs=1e-10)

    def test_predict_matches_forward_row_by_row(self):
        params = mlp.init_params(3, TrainConfig(hidden=5, seed=2))
        X = np.random.default_rng(3).normal(size=(10, 3))
        expected = [mlp.forward(params, row) for row in X]
        np.testing.assert_allclose(mlp.predict(params, X), expected, rtol=0, atol=1e-12)

    def test_dimension_mismatch_names_dimensions(self):
        params = mlp.init_params(3, TrainConfig(hidden=2))
        with pytest.raises(DimensionMismatchError) as excinfo:
            mlp.forward(params, np.zeros(4))
        assert excinfo.value.expected == 3
        assert excinfo.value.actual == 4


# =============================================================================
# Loss values
# =============================================================================


class TestLossValue:

    def test_mse_zero_when_predictions_equal_labels(self):
        params = _constant_model(96.0)
        X = np.zeros((4, 2))
        assert mlp.loss_value(params, X, np.full(4, 96.0), Objective.mse()) == 0.0

    def test_lower_penalty_hinge_term(self):
        params = _constant_model(97.0)
        X = np.zeros((1, 2))
        # (97 - 94)^2 + max(0, 97 - 1 - 94)
        assert mlp.loss_value(params, X, [94.0], Objective.lower_penalty(), width=1.0) == pytest.approx(11.0)

    def test_lower_penalty_inactive_below_label(self):
        params = _constant_model(95.0)
        X = np.zeros((1, 2))
        assert mlp.loss_value(params, X, [94.5], Objective.lower_penalty(), width=1.0) == pytest.approx(0.25)

    def test_two_sided_penalty_adds_upper_hinge(self):
        params = _constant_model(90.0)
        X = np.zeros((1, 2))
        # (90 - 94)^2 + max(0, 94 - 90 - 1)
        assert mlp.loss_value(params, X, [94.0], Objective.two_sided_penalty(), width=1.0) == pytest.approx(19.0)

    @pytest.mark.parametrize('offset, expected', [(0.0, 0.0), (-1.0, 0.05), (1.0, 0.95)])
    def test_pinball_low_quantile(self, offset, expected):
        params = _constant_model(50.0 + offset)
        X = np.zeros((1, 2))
        assert mlp.loss_value(params, X, [50.0], Objective.pinball(0.05)) == pytest.approx(expected)

    @pytest.mark.parametrize('objective', [
        Objective.mse(), Objective.pinball(0.3), Objective.lower_penalty(), Objective.two_sided_penalty()
    ])
    def test_losses_are_non_negative(self, objective):
        rng = np.random.default_rng(5)
        params = mlp.init_params(3, TrainConfig(hidden=4, seed=5))
        for _ in range(20):
            X = rng.normal(size=(6, 3))
            y = rng.normal(size=6)
            assert mlp.loss_value(params, X, y, objective, width=abs(rng.normal())) >= 0.0

    def test_empty_batch_rejected(self):
        params = _constant_model(1.0)
        with pytest.raises(EmptyInputError):
            mlp.loss_value(params, np.zeros((0, 2)), [], Objective.mse())


# =============================================================================
# Gradients
# =============================================================================


GRADIENT_OBJECTIVES = [
    Objective.mse(),
    Objective.pinball(0.05),
    Objective.pinball(0.5),
    Objective.pinball(0.95),
    Objective.lower_penalty(),
    Objective.two_sided_penalty(),
]

KINK_MARGIN = 1e-3
FD_STEP = 1e-6


def _near_kink(params, X, y, objective, width):
    z = X @ params.w1.T + params.b1
    if params.activation == 'relu' and np.any(np.abs(z) < KINK_MARGIN):
        return True
    residual = mlp.predict(params, X) - y
    if objective.kind == 'pinball':
        return bool(np.any(np.abs(residual) < KINK_MARGIN))
    if objective.uses_width:
        return bool(np.any(np.abs(residual - width) < KINK_MARGIN)
                    or np.any(np.abs(residual + width) < KINK_MARGIN))
    return False


def _finite_difference(params, X, y, objective, width):
    flat = params.flatten()
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        step = np.zeros_like(flat)
        step[i] = FD_STEP
        up = mlp.loss_value(params.with_flat(flat + step), X, y, objective, width)
        down = mlp.loss_value(params.with_flat(flat - step), X, y, objective, width)
        numeric[i] = (up - down) / (2 * FD_STEP)
    return numeric


class TestGradient:

    @pytest.mark.parametrize('objective', GRADIENT_OBJECTIVES, ids=lambda o: o.describe())
    def test_matches_central_finite_differences(self, objective):
        rng = np.random.default_rng(2024)
        checked = 0
        attempts = 0
        while checked < 100:
            attempts += 1
            assert attempts < 2000, "too many configurations landed on a kink"
            d = int(rng.integers(1, 5))
            h = int(rng.integers(1, 6))
            n = int(rng.integers(1, 7))
            activation = 'sigmoid' if rng.random() < 0.7 else 'relu'
            params = MLPParams(rng.normal(size=(h, d)), rng.normal(size=h), rng.normal(size=(1, h)),
                               float(rng.normal()), activation)
            X = rng.normal(size=(n, d))
            y = rng.normal(size=n)
            width = float(abs(rng.normal()))
            if _near_kink(params, X, y, objective, width):
                continue
            analytic = mlp.grad(params, X, y, objective, width).flatten()
            numeric = _finite_difference(params, X, y, objective, width)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)
            checked += 1

    def test_zero_gradient_at_perfect_fit(self):
        params = mlp.init_params(2, TrainConfig(hidden=3, seed=1))
        X = np.random.default_rng(0).normal(size=(5, 2))
        y = mlp.predict(params, X)
        np.testing.assert_array_equal(mlp.grad(params, X, y, Objective.mse()).flatten(), 0.0)

    def test_duplicated_batch_gives_same_gradient(self):
        rng = np.random.default_rng(9)
        params = mlp.init_params(3, TrainConfig(hidden=4, seed=9))
        X = rng.normal(size=(5, 3))
        y = rng.normal(size=5)
        once = mlp.grad(params, X, y, Objective.mse()).flatten()
        twice = mlp.grad(params, np.vstack([X, X]), np.concatenate([y, y]), Objective.mse()).flatten()
        np.testing.assert_allclose(once, twice, rtol=1e-12, atol=1e-14)


# =============================================================================
# Configuration
# =============================================================================


class TestConfig:

    def test_defaults_follow_tuned_base_model(self):
        config = TrainConfig()
        assert (config.hidden, config.activation, config.epochs, config.learning_rate) == \
            (100, 'sigmoid', 1500, 0.01)

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError, match='epochs'):
            TrainConfig(epochs=0)

    @pytest.mark.parametrize('tau', [0.0, 1.0, None])
    def test_pinball_needs_tau_in_open_interval(self, tau):
        with pytest.raises(ValueError):
            Objective('pinball', tau)

    def test_quantile_levels_for_default_alpha(self):
        low, high = mlp.quantile_levels(0.1)
        assert low == pytest.approx(0.05)
        assert high == pytest.approx(0.95)


# =============================================================================
# Training
# =============================================================================


class TestTraining:

    def test_same_seed_gives_identical_parameters(self, small_train_config):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        first = mlp.train(X, y, small_train_config)
        second = mlp.train(X, y, small_train_config)
        np.testing.assert_array_equal(first.flatten(), second.flatten())

    def test_different_seeds_differ(self, small_train_config):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        first = mlp.train(X, y, small_train_config)
        other = mlp.train(X, y, TrainConfig(hidden=6, epochs=15, minibatch_size=16, seed=1))
        assert not np.array_equal(first.flatten(), other.flatten())

    def test_learns_linear_function(self, linear_data):
        X_train, y_train, X_test, y_test = linear_data
        config = TrainConfig(hidden=16, epochs=1000, learning_rate=0.02, minibatch_size=32,
                             seed=0, activation='relu')
        params = mlp.train(X_train, y_train, config)
        held_out_mse = np.mean((mlp.predict(params, X_test) - y_test) ** 2)
        assert held_out_mse < 1e-2

    def test_divergence_names_epoch(self):
        X = np.random.default_rng(0).normal(size=(8, 2))
        y = np.full(8, 1000.0)
        config = TrainConfig(hidden=3, epochs=50, learning_rate=1e6, minibatch_size=8)
        with np.errstate(all='ignore'):
            with pytest.raises(DivergedTrainingError) as excinfo:
                mlp.train(X, y, config)
        assert excinfo.value.epoch >= 1

    def test_train_rejects_penalty_objective(self):
        config = TrainConfig(hidden=2, epochs=1, objective=Objective.lower_penalty())
        with pytest.raises(ValueError):
            mlp.train(np.zeros((2, 1)), np.zeros(2), config)

    def test_width_provider_called_once_per_step(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        y = np.zeros(10)
        config = TrainConfig(hidden=2, epochs=3, minibatch_size=4, objective=Objective.lower_penalty())
        result = mlp.fit(X, y, config, width_fn=lambda params: 0.5)
        assert result.steps_per_epoch == 3
        assert result.widths == (0.5,) * 9


class TestQuantilePair:

    @pytest.mark.parametrize('tau', [0.05, 0.5, 0.95])
    def test_constant_labels_converge_to_constant(self, tau):
        X = 0.01 * np.random.default_rng(1).normal(size=(20, 2))
        y = np.full(20, 0.5)
        config = TrainConfig(hidden=4, epochs=4000, learning_rate=0.01, minibatch_size=20,
                             objective=Objective.pinball(tau))
        params = mlp.train(X, y, config)
        np.testing.assert_allclose(mlp.predict(params, X), 0.5, atol=0.1)

    def test_low_head_below_high_head_on_symmetric_noise(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(200, 2))
        y = rng.normal(size=200)
        config = TrainConfig(hidden=4, epochs=200, learning_rate=0.01, minibatch_size=32)
        q_low, q_high = mlp.train_quantile_pair(X, y, config, alpha=0.1)
        assert mlp.predict(q_low, X).mean() < mlp.predict(q_high, X).mean()

    def test_alpha_out_of_range(self, small_train_config):
        with pytest.raises(ValueError):
            mlp.train_quantile_pair(np.zeros((2, 1)), np.zeros(2), small_train_config, alpha=1.0)
