"""Hot-path kernels: reference agreement and numba/numpy backend parity."""

import os
import subprocess
import sys

import numpy as np
import pytest

from mixboot import _kernels
from mixboot.losses import loss_from_target
from mixboot.noise_model import beta_pdf


def random_logits_targets(seed, n=200, k=4):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(n, k)) * 3.0
    targets = rng.dirichlet(np.ones(k), size=n)
    return logits, targets


def random_losses(seed, n=500):
    return np.random.default_rng(seed).uniform(1e-4, 1.0 - 1e-4, size=n)


class TestLossKernelReference:
    def test_matches_scalar_losses(self):
        logits, targets = random_logits_targets(0, n=50)
        values, grads = _kernels.loss_from_targets(logits, targets)
        for r in range(50):
            ref = loss_from_target(logits[r], targets[r])
            assert abs(values[r] - ref.value) <= 1e-12
            np.testing.assert_allclose(grads[r], ref.grad_logits, atol=1e-12)

    def test_grad_rows_sum_to_zero(self):
        # softmax and a normalized target both sum to 1
        logits, targets = random_logits_targets(1)
        _, grads = _kernels.loss_from_targets(logits, targets)
        np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-12)

    def test_extreme_logits_finite(self):
        logits = np.array([[800.0, 0.0, -800.0]])
        targets = np.full((1, 3), 1 / 3)
        values, grads = _kernels.loss_from_targets(logits, targets)
        assert np.isfinite(values).all()
        assert np.isfinite(grads).all()


class TestEStepReference:
    def test_memberships_match_density_formula(self):
        x = random_losses(2)
        a1, b1, a2, b2, pi = 2.0, 8.0, 8.0, 2.0, 0.4
        r1, loglik = _kernels.bmm_e_step(x, a1, b1, a2, b2, pi)
        f1 = beta_pdf(x, a1, b1)
        f2 = beta_pdf(x, a2, b2)
        expected_r1 = pi * f1 / (pi * f1 + (1.0 - pi) * f2)
        np.testing.assert_allclose(r1, expected_r1, atol=1e-12)
        expected_ll = float(np.log(pi * f1 + (1.0 - pi) * f2).sum())
        assert abs(loglik - expected_ll) <= 1e-8 * max(1.0, abs(expected_ll))

    def test_memberships_are_probabilities(self):
        x = random_losses(3)
        r1, _ = _kernels.bmm_e_step(x, 1.5, 6.0, 7.0, 1.5, 0.25)
        assert (r1 >= 0.0).all()
        assert (r1 <= 1.0).all()

    def test_stable_for_extreme_shapes(self):
        # near-degenerate components must not overflow the density ratio
        x = np.array([1e-4, 0.5, 1.0 - 1e-4])
        r1, loglik = _kernels.bmm_e_step(x, 100.0, 0.01, 0.01, 100.0, 0.5)
        assert np.isfinite(r1).all()
        assert np.isfinite(loglik)


class TestDistanceKernelReference:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        queries = rng.normal(size=(20, 6))
        bank = rng.normal(size=(40, 6))
        out = _kernels.min_cosine_distances(queries, bank)
        qn = np.linalg.norm(queries, axis=1)
        bn = np.linalg.norm(bank, axis=1)
        sims = (queries @ bank.T) / np.outer(qn, bn)
        np.testing.assert_allclose(out, 1.0 - sims.max(axis=1), atol=1e-12)


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba backend unavailable")
class TestBackendParity:
    def test_loss_kernel_agrees(self):
        logits, targets = random_logits_targets(5, n=300)
        v_np, g_np = _kernels.loss_from_targets_numpy(logits, targets)
        v_nb, g_nb = _kernels.loss_from_targets_numba(logits, targets)
        np.testing.assert_allclose(v_nb, v_np, atol=1e-13)
        np.testing.assert_allclose(g_nb, g_np, atol=1e-13)

    def test_e_step_agrees(self):
        x = random_losses(6, n=1000)
        args = (x, 1.7, 7.3, 6.1, 1.2, 0.33)
        r_np, ll_np = _kernels.bmm_e_step_numpy(*args)
        r_nb, ll_nb = _kernels.bmm_e_step_numba(*args)
        np.testing.assert_allclose(r_nb, r_np, atol=1e-13)
        assert abs(ll_nb - ll_np) <= 1e-9 * max(1.0, abs(ll_np))

    def test_distance_kernel_agrees(self):
        rng = np.random.default_rng(7)
        queries = rng.normal(size=(50, 8))
        bank = rng.normal(size=(200, 8))
        d_np = _kernels.min_cosine_distances_numpy(queries, bank)
        d_nb = _kernels.min_cosine_distances_numba(queries, bank)
        np.testing.assert_allclose(d_nb, d_np, atol=1e-13)


class TestBackendSelection:
    def _backend_reported(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("MIXBOOT_KERNELS", None)
        else:
            env["MIXBOOT_KERNELS"] = env_value
        out = subprocess.run(
            [sys.executable, "-c", "from mixboot import _kernels; print(_kernels.BACKEND)"],
            env=env,
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0, out.stderr
        return out.stdout.strip()

    def test_numpy_forced(self):
        assert self._backend_reported("numpy") == "numpy"

    def test_auto_prefers_numba_when_available(self):
        expected = "numba" if _kernels.HAS_NUMBA else "numpy"
        assert self._backend_reported(None) == expected

    def test_invalid_choice_fails_import(self):
        env = dict(os.environ, MIXBOOT_KERNELS="cuda")
        out = subprocess.run(
            [sys.executable, "-c", "import mixboot._kernels"],
            env=env,
            capture_output=True,
            text=True,
        )
        assert out.returncode != 0
        assert "MIXBOOT_KERNELS" in out.stderr
