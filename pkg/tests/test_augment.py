"""Mixup coefficient sampling, pair construction and input perturbation."""

import numpy as np
import pytest
from scipy import stats

from mixboot.augment import PerturbationPolicy, mixup_batch, perturb, sample_gamma
from mixboot.errors import InvalidInputError

# closed form std of Beta(a, a): sqrt(1 / (4 (2a + 1)))
GAMMA_STD_ALPHA_32 = 0.06201736729460423


def draw_gammas(alpha, n, seed):
    rng = np.random.default_rng(seed)
    return np.array([sample_gamma(alpha, rng) for _ in range(n)])


class TestSampleGamma:
    def test_open_interval(self):
        g = draw_gammas(0.3, 2000, 0)
        assert g.min() > 0.0
        assert g.max() < 1.0

    def test_mean_half_any_alpha(self):
        for i, alpha in enumerate((0.3, 1.0, 8.0, 32.0)):
            g = draw_gammas(alpha, 100_000, 10 + i)
            assert abs(g.mean() - 0.5) <= 0.005

    def test_alpha_one_is_uniform(self):
        g = draw_gammas(1.0, 100_000, 20)
        ks = stats.kstest(g, "uniform").statistic
        assert ks < 0.01

    def test_alpha_32_std_oracle(self):
        g = draw_gammas(32.0, 100_000, 30)
        assert abs(g.std() - GAMMA_STD_ALPHA_32) <= 0.005

    def test_small_alpha_spreads_wide(self):
        # Beta(0.3, 0.3) is bimodal near the endpoints
        g = draw_gammas(0.3, 100_000, 40)
        assert g.std() > draw_gammas(8.0, 100_000, 41).std()

    def test_alpha_positive_required(self):
        with pytest.raises(InvalidInputError):
            sample_gamma(0.0, np.random.default_rng(0))

    def test_seeded_stream_reproduces(self):
        assert draw_gammas(0.3, 50, 5).tolist() == draw_gammas(0.3, 50, 5).tolist()


class TestMixupBatch:
    def test_fixed_gamma_one_returns_inputs(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(6, 2))
        pairs = mixup_batch(x, np.zeros(6, dtype=int), 0.3, rng, fixed_gamma=1.0)
        for i, p in enumerate(pairs):
            assert (p.mixed_input == x[i]).all()

    def test_identical_inputs_fixed_point(self):
        x = np.tile(np.array([1.5, -2.0]), (5, 1))
        rng = np.random.default_rng(1)
        for p in mixup_batch(x, np.zeros(5, dtype=int), 0.3, rng):
            np.testing.assert_allclose(p.mixed_input, [1.5, -2.0], atol=1e-15)

    def test_convex_combination_hand_case(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0]])
        rng = np.random.default_rng(2)
        pairs = mixup_batch(x, np.array([0, 1]), 0.3, rng, fixed_gamma=0.25)
        for p in pairs:
            i, j = p.source_indices
            np.testing.assert_allclose(
                p.mixed_input, 0.25 * x[i] + 0.75 * x[j], atol=1e-15
            )

    def test_labels_track_sources(self):
        rng = np.random.default_rng(3)
        labels = np.array([0, 1, 1, 0, 1])
        x = rng.normal(size=(5, 2))
        for p in mixup_batch(x, labels, 0.3, rng):
            i, j = p.source_indices
            assert p.label_i == labels[i]
            assert p.label_j == labels[j]

    def test_partner_is_permutation(self):
        rng = np.random.default_rng(4)
        pairs = mixup_batch(np.zeros((8, 2)), np.zeros(8, dtype=int), 0.3, rng)
        partners = sorted(p.source_indices[1] for p in pairs)
        assert partners == list(range(8))

    def test_needs_two_samples(self):
        with pytest.raises(InvalidInputError):
            mixup_batch(np.zeros((1, 2)), np.zeros(1, dtype=int), 0.3, np.random.default_rng(0))


class TestPerturb:
    def test_identity_policy(self):
        x = np.random.default_rng(0).normal(size=(10, 3))
        out = perturb(x, PerturbationPolicy(), np.random.default_rng(1))
        assert (out == x).all()
        assert out is not x  # a copy, never a view

    def test_noise_std_oracle(self):
        x = np.zeros(100_000)
        policy = PerturbationPolicy(noise_sigma=0.1, scale_jitter=0.0)
        out = perturb(x, policy, np.random.default_rng(5))
        assert abs((out - x).std() - 0.1) <= 0.002

    def test_scale_jitter_on_zeros_is_identity(self):
        x = np.zeros((50, 4))
        policy = PerturbationPolicy(noise_sigma=0.0, scale_jitter=0.3)
        out = perturb(x, policy, np.random.default_rng(6))
        assert (out == 0.0).all()

    def test_jitter_bounded(self):
        x = np.ones(10_000)
        policy = PerturbationPolicy(noise_sigma=0.0, scale_jitter=0.2)
        out = perturb(x, policy, np.random.default_rng(7))
        assert out.min() >= 0.8
        assert out.max() <= 1.2

    def test_unbiased(self):
        x = np.full(200_000, 2.0)
        policy = PerturbationPolicy(noise_sigma=0.1, scale_jitter=0.1)
        out = perturb(x, policy, np.random.default_rng(8))
        assert abs(out.mean() - 2.0) <= 0.005

    def test_negative_parameters_rejected(self):
        with pytest.raises(InvalidInputError):
            PerturbationPolicy(noise_sigma=-0.1)

    def test_seeded_reproducibility(self):
        x = np.linspace(-1, 1, 64).reshape(8, 8)
        policy = PerturbationPolicy(noise_sigma=0.05, scale_jitter=0.1)
        a = perturb(x, policy, np.random.default_rng(9))
        b = perturb(x, policy, np.random.default_rng(9))
        assert (a == b).all()
