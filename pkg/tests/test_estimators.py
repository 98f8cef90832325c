"""Uncertainty estimators: single pass, ensembles, MC dropout and TTA."""

import numpy as np
import pytest

from mixboot.augment import PerturbationPolicy
from mixboot.errors import InvalidInputError
from mixboot.estimators import (
    ensemble_predict,
    mc_dropout_predict,
    single_forward,
    tta_predict,
)
from mixboot.mlp import kaiming_init
from mixboot.prob_metrics import predictive_entropy


class FixedLogitsModel:
    """Duck-typed stand-in emitting one constant logits row per call.

    rows cycles across calls, so MC-dropout passes can be scripted exactly.
    """

    dropout = 0.5

    def __init__(self, rows, k=2):
        self.rows = [np.asarray(r, dtype=np.float64) for r in rows]
        self.dims = (2, 1, 1, k)
        self.calls = 0

    def predict_logits(self, inputs, dropout_active=False, rng=None):
        row = self.rows[self.calls % len(self.rows)]
        self.calls += 1
        return np.tile(row, (inputs.shape[0], 1))


def example_inputs(n=5, seed=0):
    return np.random.default_rng(seed).normal(size=(n, 2))


class TestSingleForward:
    def test_deterministic(self):
        model = kaiming_init((2, 16, 16, 2), seed=0)
        x = example_inputs()
        a, b = single_forward(model, x), single_forward(model, x)
        assert (a.mean_probs == b.mean_probs).all()
        assert (a.uncertainty == b.uncertainty).all()

    def test_zero_logits_give_ln2(self):
        model = kaiming_init((2, 16, 16, 2), seed=1)  # zero biases
        out = single_forward(model, np.zeros((3, 2)))
        np.testing.assert_allclose(out.uncertainty, np.log(2.0), atol=1e-15)

    def test_entropy_bounds(self):
        model = kaiming_init((2, 16, 16, 3), seed=2)
        out = single_forward(model, example_inputs(50, 3))
        assert (out.uncertainty >= 0.0).all()
        assert (out.uncertainty <= np.log(3.0) + 1e-12).all()

    def test_uncertainty_matches_scalar_entropy(self):
        model = kaiming_init((2, 8, 8, 2), seed=3)
        out = single_forward(model, example_inputs(10, 4))
        for row, h in zip(out.mean_probs, out.uncertainty):
            assert predictive_entropy(row) == h

    def test_single_row_input(self):
        model = kaiming_init((2, 8, 8, 2), seed=4)
        out = single_forward(model, np.array([0.1, -0.2]))
        assert out.mean_probs.shape == (1, 2)

    def test_no_variance_reported(self):
        model = kaiming_init((2, 8, 8, 2), seed=5)
        assert single_forward(model, example_inputs()).variance is None


class TestEnsemble:
    def test_single_member_identical_to_single_forward(self):
        model = kaiming_init((2, 16, 16, 2), seed=6)
        x = example_inputs(8, 5)
        a = ensemble_predict([model], x)
        b = single_forward(model, x)
        assert (a.mean_probs == b.mean_probs).all()
        assert (a.uncertainty == b.uncertainty).all()

    def test_identical_members_collapse(self):
        model = kaiming_init((2, 16, 16, 2), seed=7)
        x = example_inputs(6, 6)
        a = ensemble_predict([model, model.copy(), model.copy()], x)
        b = single_forward(model, x)
        np.testing.assert_allclose(a.mean_probs, b.mean_probs, atol=1e-15)

    def test_maximal_disagreement(self):
        peaked_0 = FixedLogitsModel([[500.0, 0.0]])
        peaked_1 = FixedLogitsModel([[0.0, 500.0]])
        out = ensemble_predict([peaked_0, peaked_1], example_inputs(4, 7))
        np.testing.assert_allclose(out.mean_probs, 0.5, atol=1e-12)
        np.testing.assert_allclose(out.uncertainty, np.log(2.0), atol=1e-12)

    def test_empty_ensemble_rejected(self):
        with pytest.raises(InvalidInputError):
            ensemble_predict([], example_inputs())

    def test_mismatched_dims_rejected(self):
        a = kaiming_init((2, 8, 8, 2), seed=8)
        b = kaiming_init((2, 8, 8, 3), seed=9)
        with pytest.raises(InvalidInputError):
            ensemble_predict([a, b], example_inputs())

    def test_mean_entropy_at_least_member_mean(self):
        # entropy of the mean >= mean of member entropies (concavity)
        models = [kaiming_init((2, 16, 16, 2), seed=s) for s in range(10, 15)]
        x = example_inputs(20, 8)
        out = ensemble_predict(models, x)
        member_h = np.mean([single_forward(m, x).uncertainty for m in models], axis=0)
        assert (out.uncertainty >= member_h - 1e-12).all()


class TestMcDropout:
    def test_alternating_passes_oracle(self):
        model = FixedLogitsModel([[500.0, 0.0], [0.0, 500.0]])
        out = mc_dropout_predict(
            model, example_inputs(3, 9), passes=4, rng=np.random.default_rng(0)
        )
        np.testing.assert_allclose(out.mean_probs, 0.5, atol=1e-12)
        np.testing.assert_allclose(out.variance, 0.25, atol=1e-12)
        assert model.calls == 4

    def test_identical_passes_variance_is_tau_inv(self):
        model = kaiming_init((2, 16, 16, 2), seed=16, dropout=0.0)
        x = example_inputs(5, 10)
        out = mc_dropout_predict(model, x, passes=6, tau_inv=0.37)
        np.testing.assert_allclose(out.variance, 0.37, atol=1e-12)

    def test_identical_passes_zero_tau_inv(self):
        model = kaiming_init((2, 16, 16, 2), seed=17, dropout=0.0)
        out = mc_dropout_predict(model, example_inputs(5, 11), passes=3)
        np.testing.assert_allclose(out.variance, 0.0, atol=1e-12)

    def test_seeded_reproducibility(self):
        model = kaiming_init((2, 32, 32, 2), seed=18, dropout=0.3)
        x = example_inputs(6, 12)
        a = mc_dropout_predict(model, x, passes=10, rng=np.random.default_rng(42))
        b = mc_dropout_predict(model, x, passes=10, rng=np.random.default_rng(42))
        assert (a.mean_probs == b.mean_probs).all()
        assert (a.variance == b.variance).all()

    def test_requires_rng_when_dropout_positive(self):
        model = kaiming_init((2, 8, 8, 2), seed=19, dropout=0.2)
        with pytest.raises(InvalidInputError):
            mc_dropout_predict(model, example_inputs(), passes=2)

    def test_validates_arguments(self):
        model = kaiming_init((2, 8, 8, 2), seed=20, dropout=0.0)
        with pytest.raises(InvalidInputError):
            mc_dropout_predict(model, example_inputs(), passes=0)
        with pytest.raises(InvalidInputError):
            mc_dropout_predict(model, example_inputs(), passes=2, tau_inv=-1.0)

    def test_variance_nonnegative(self):
        model = kaiming_init((2, 32, 32, 2), seed=21, dropout=0.5)
        out = mc_dropout_predict(
            model, example_inputs(20, 13), passes=20, rng=np.random.default_rng(1)
        )
        assert (out.variance >= -1e-12).all()


class TestTta:
    def test_zero_repeats_identical_to_single_forward(self):
        model = kaiming_init((2, 16, 16, 2), seed=22)
        x = example_inputs(7, 14)
        policy = PerturbationPolicy(noise_sigma=0.1)
        a = tta_predict(model, x, policy, repeats=0, rng=np.random.default_rng(0))
        b = single_forward(model, x)
        assert (a.mean_probs == b.mean_probs).all()
        assert (a.uncertainty == b.uncertainty).all()

    def test_identity_policy_any_repeats(self):
        model = kaiming_init((2, 16, 16, 2), seed=23)
        x = example_inputs(7, 15)
        out = tta_predict(model, x, PerturbationPolicy(), repeats=5)
        ref = single_forward(model, x)
        np.testing.assert_allclose(out.mean_probs, ref.mean_probs, atol=1e-15)

    def test_seeded_reproducibility(self):
        model = kaiming_init((2, 16, 16, 2), seed=24)
        x = example_inputs(6, 16)
        policy = PerturbationPolicy(noise_sigma=0.2, scale_jitter=0.1)
        a = tta_predict(model, x, policy, repeats=8, rng=np.random.default_rng(7))
        b = tta_predict(model, x, policy, repeats=8, rng=np.random.default_rng(7))
        assert (a.mean_probs == b.mean_probs).all()

    def test_noise_policy_requires_rng(self):
        model = kaiming_init((2, 8, 8, 2), seed=25)
        with pytest.raises(InvalidInputError):
            tta_predict(model, example_inputs(), PerturbationPolicy(0.1), repeats=2)

    def test_negative_repeats_rejected(self):
        model = kaiming_init((2, 8, 8, 2), seed=26)
        with pytest.raises(InvalidInputError):
            tta_predict(model, example_inputs(), PerturbationPolicy(), repeats=-1)

    def test_rows_remain_distributions(self):
        model = kaiming_init((2, 16, 16, 3), seed=27)
        policy = PerturbationPolicy(noise_sigma=0.3)
        out = tta_predict(
            model, example_inputs(10, 17), policy, repeats=4, rng=np.random.default_rng(3)
        )
        np.testing.assert_allclose(out.mean_probs.sum(axis=1), 1.0, atol=1e-12)
        assert (out.mean_probs >= 0.0).all()
