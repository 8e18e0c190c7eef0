import json
import math
import tempfile

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st

from app.core.constants import ModelKind
from app.core.types import SignalLayout, TransitionSample
from app.dynamics.fitting import DynamicsFitConfig, fit_model
from app.dynamics.gp import gp_fit, gp_predict, jitter_schedule
from app.dynamics.kernels import KernelParams, rbf, rbf_matrix
from app.dynamics.likelihood import LikelihoodConfig, gaussian_log_density, log_likelihood, log_likelihoods
from app.dynamics.mlp import MlpModel, MlpTrainConfig, mlp_fit, mlp_predict
from app.dynamics.storage import deserialize_model, load_model, model_to_dict, save_model, serialize_model
from app.environments.nav2d import Nav2dTask
from app.environments.rollout import collect_transitions
from app.environments.suites import make_env
from app.policies.controllers import NavController
from app.utils.exceptions import (
    DimensionMismatchError,
    IllConditionedKernelError,
    InvalidVarianceError,
    ModelFormatError,
    ModelVersionError,
    TrainingDivergedError,
    UnsupportedModelError,
)

SAR_1D = SignalLayout("SAR", 1, 1)


def echo_state_model(layout=SAR_1D):
    """Linear network whose output is the state coordinate of x = (s, a)."""
    return MlpModel([2, 1], [np.array([[1.0], [0.0]])], [np.zeros(1)], layout=layout)


class KernelTests(SimpleTestCase):
    def test_values(self):
        self.assertEqual(rbf([0.0], [0.0]), 1.0)
        self.assertAlmostEqual(rbf([0.0], [2.0]), math.exp(-0.5), places=15)
        self.assertAlmostEqual(rbf([0.0, 0.0], [1.0, 1.0], KernelParams(delta=2.0, l=1.0)), 4.0 * math.exp(-1.0), places=14)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            rbf([0.0, 1.0], [0.0])
        with self.assertRaises(ValueError):
            KernelParams(delta=0.0)

    @hsettings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 20), st.integers(1, 6))
    def test_matrix_symmetric_psd(self, seed, n, d):
        X = np.random.default_rng(seed).uniform(-5, 5, size=(n, d))
        K = rbf_matrix(X, X)
        np.testing.assert_allclose(K, K.T, atol=0)
        self.assertGreaterEqual(float(np.linalg.eigvalsh(K).min()), -1e-10)
        self.assertAlmostEqual(float(K[0, 0]), 1.0, places=15)


class GpTests(SimpleTestCase):
    def test_single_point(self):
        model = gp_fit([[0.0]], [[1.0]], noise=0.0, jitter=0.0)
        mean, var = gp_predict(model, [0.0])
        self.assertAlmostEqual(float(mean[0]), 1.0, places=12)
        self.assertAlmostEqual(float(var[0]), 0.0, places=12)
        mean, var = gp_predict(model, [2.0])
        self.assertAlmostEqual(float(mean[0]), math.exp(-0.5), places=12)
        self.assertAlmostEqual(float(var[0]), 1.0 - math.exp(-1.0), places=12)

    def test_single_point_with_noise(self):
        model = gp_fit([[0.0]], [[1.0]], noise=0.1, jitter=0.0)
        mean, var = gp_predict(model, [0.0])
        self.assertAlmostEqual(float(mean[0]), 1.0 / 1.1, places=12)
        self.assertAlmostEqual(float(var[0]), 1.0 - 1.0 / 1.1, places=12)

    def test_default_jitter_single_point(self):
        mean, var = gp_predict(gp_fit([[0.0]], [[1.0]], noise=0.0), [0.0])
        self.assertAlmostEqual(float(mean[0]), 1.0, delta=1e-5)
        self.assertAlmostEqual(float(var[0]), 0.0, delta=1e-5)

    @hsettings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 64), st.integers(1, 8), st.integers(1, 3))
    def test_matches_dense_solve(self, seed, n, d, out):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-3, 3, size=(n, d))
        Y = rng.normal(size=(n, out))
        X_star = rng.uniform(-3, 3, size=(5, d))
        model = gp_fit(X, Y, noise=0.1, jitter=0.0)
        mean, var = model.predict_batch(X_star)

        K = rbf_matrix(X, X) + 0.1 * np.eye(n)
        k_star = rbf_matrix(X_star, X)
        expected_mean = k_star @ np.linalg.solve(K, Y)
        expected_var = 1.0 - np.einsum("ij,ji->i", k_star, np.linalg.solve(K, k_star.T))
        np.testing.assert_allclose(mean, expected_mean, atol=1e-8)
        np.testing.assert_allclose(var[:, 0], expected_var, atol=1e-8)
        self.assertEqual(var.shape, (5, out))

    def test_interpolates_training_points(self):
        X = (np.arange(6, dtype=float) * 6.0)[:, None]
        Y = np.sin(X)
        model = gp_fit(X, Y, noise=0.0, jitter=1e-9)
        mean, var = model.predict_batch(X)
        np.testing.assert_allclose(mean, Y, atol=1e-6)
        self.assertTrue(np.all(var <= 1e-6))

    def test_variance_never_negative(self):
        X = np.linspace(0, 1, 30)[:, None]
        model = gp_fit(X, np.cos(X), noise=0.0)
        _, var = model.predict_batch(np.linspace(-1, 2, 50)[:, None])
        self.assertTrue(np.all(var >= 0.0))

    def test_jitter_escalation(self):
        with self.assertLogs("app.dynamics.gp", level="WARNING"):
            model = gp_fit([[1.0], [1.0]], [[0.5], [0.5]], noise=0.0, jitter=0.0)
        self.assertEqual(model.jitter, 1e-6)

    def test_jitter_schedule(self):
        np.testing.assert_allclose(list(jitter_schedule(0.0, 1e-4)), [0.0, 1e-6, 1e-5, 1e-4], rtol=1e-12, atol=0)

    def test_ill_conditioned(self):
        with self.assertRaises(IllConditionedKernelError):
            gp_fit([[1.0], [1.0]], [[0.5], [0.5]], noise=0.0, jitter=0.0, max_jitter=1e-8)

    def test_cap_subsamples(self):
        X = np.linspace(0, 10, 30)[:, None]
        model = gp_fit(X, X, cap=10, rng=np.random.default_rng(3))
        self.assertEqual(model.n_train, 10)

    def test_standardized_targets_revert_to_data_mean(self):
        X = np.array([[0.0], [1.0], [2.0]])
        Y = np.array([[-10.0, 5.0], [-12.0, 5.0], [-11.0, 5.0]])
        raw = gp_fit(X, Y)
        scaled = gp_fit(X, Y, normalize_y=True)
        self.assertFalse(raw.normalize_y)
        self.assertTrue(scaled.normalize_y)
        np.testing.assert_array_equal(scaled.Y, Y)

        far = np.array([[1e3]])
        mean, var = raw.predict_batch(far)
        np.testing.assert_allclose(mean, [[0.0, 0.0]], atol=1e-12)
        np.testing.assert_allclose(var, [[1.0, 1.0]], atol=1e-12)
        mean, var = scaled.predict_batch(far)
        np.testing.assert_allclose(mean, [[-11.0, 5.0]], atol=1e-9)
        np.testing.assert_allclose(var, [[Y[:, 0].std() ** 2, 1.0]], atol=1e-9)

        near, _ = scaled.predict_batch(X)
        np.testing.assert_allclose(near, Y, atol=5e-2)

    def test_held_out_transitions_within_three_sigma(self):
        task = Nav2dTask(goal=(10, 10))
        layout = SignalLayout("SAR", 2, 2)
        train, held_out = (
            collect_transitions(make_env(task), NavController(task.goal), n, np.random.default_rng(seed))
            for seed, n in ((0, 300), (1, 200))
        )
        model = fit_model(train, layout)
        mean, var = model.predict_batch(layout.inputs(held_out))
        sigma = np.sqrt(var + LikelihoodConfig().eps2_gp)
        inside = np.abs(layout.outputs(held_out) - mean) <= 3.0 * sigma
        self.assertGreaterEqual(inside.mean(), 0.9)

    def test_rejects_bad_data(self):
        with self.assertRaises(DimensionMismatchError):
            gp_fit(np.zeros((3, 2)), np.zeros((2, 1)))
        with self.assertRaises(DimensionMismatchError):
            gp_fit([[np.nan]], [[1.0]])
        model = gp_fit(np.zeros((2, 2)), np.ones((2, 1)), noise=0.1)
        with self.assertRaises(DimensionMismatchError):
            model.predict([0.0, 0.0, 0.0])


class MlpTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(11)
        self.X = rng.uniform(-1, 1, size=(500, 2))
        self.Y = self.X @ np.array([[1.0], [-2.0]]) + 0.5

    def test_untrained_predicts_training_mean(self):
        model = mlp_fit(self.X, self.Y, MlpTrainConfig(epochs=0))
        mean, var = mlp_predict(model, [0.3, -0.2])
        np.testing.assert_allclose(mean, self.Y.mean(axis=0), atol=1e-12)
        np.testing.assert_array_equal(var, [0.1])

    def test_constant_target(self):
        model = mlp_fit(self.X, np.full((500, 1), 4.0), MlpTrainConfig(epochs=3))
        mean, _ = model.predict_batch(self.X[:10])
        np.testing.assert_allclose(mean, 4.0, atol=1e-12)

    def test_identity_network(self):
        model = echo_state_model()
        mean, var = mlp_predict(model, [1.25, 0.7], eps2_nn=0.3)
        np.testing.assert_array_equal(mean, [1.25])
        np.testing.assert_array_equal(var, [0.3])

    def test_learns_linear_map(self):
        config = MlpTrainConfig(hidden=(32,), epochs=200, learning_rate=1e-2, batch_size=32, seed=5)
        model = mlp_fit(self.X, self.Y, config)
        self.assertLess(model.final_loss, 1e-2)

    def test_same_seed_same_weights(self):
        config = MlpTrainConfig(hidden=(8, 8), epochs=5, batch_size=50, seed=9)
        a = mlp_fit(self.X, self.Y, config)
        b = mlp_fit(self.X, self.Y, config)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_divergence(self):
        config = MlpTrainConfig(hidden=(8,), epochs=50, learning_rate=1e6, batch_size=10)
        with np.errstate(all="ignore"):
            with self.assertRaises(TrainingDivergedError):
                mlp_fit(self.X[:100], self.Y[:100], config)

    def test_batch_size_bounds(self):
        with self.assertRaises(DimensionMismatchError):
            mlp_fit(self.X[:10], self.Y[:10], MlpTrainConfig(batch_size=64))


class LikelihoodTests(SimpleTestCase):
    def sample(self, s, r):
        return TransitionSample(s=[s], a=[0.0], r=r, s_next=[s])

    def test_exact_prediction(self):
        model = echo_state_model()
        ll = log_likelihood(model, [self.sample(0.5, 0.5)], SAR_1D, LikelihoodConfig(eps2_nn=0.1))
        self.assertAlmostEqual(ll, -0.5 * math.log(2 * math.pi * 0.1), places=12)
        self.assertAlmostEqual(ll, 0.23235, places=5)

    def test_three_sigma(self):
        model = echo_state_model()
        ll = log_likelihood(model, [self.sample(0.0, 3.0 * math.sqrt(0.1))], SAR_1D)
        self.assertAlmostEqual(ll, -0.5 * math.log(2 * math.pi * 0.1) - 4.5, delta=1e-9)

    def test_additive_over_samples(self):
        model = echo_state_model()
        one = self.sample(0.5, 0.9)
        self.assertEqual(log_likelihood(model, [one, one], SAR_1D), 2 * log_likelihood(model, [one], SAR_1D))
        batch = [self.sample(s, r) for s, r in [(0.1, 0.4), (-0.3, 0.0), (1.0, 2.5), (0.2, 0.2)]]
        singles = [log_likelihood(model, [b], SAR_1D) for b in batch]
        self.assertAlmostEqual(log_likelihood(model, batch, SAR_1D), math.fsum(singles), places=12)

    def test_empty_signal(self):
        self.assertEqual(log_likelihood(echo_state_model(), [], SAR_1D), 0.0)

    def test_gp_adds_eps2(self):
        model = gp_fit([[0.0, 0.0]], [[1.0]], noise=0.0, jitter=0.0, layout=SAR_1D)
        ll = log_likelihood(model, [TransitionSample([0.0], [0.0], 1.0, [0.0])], SAR_1D, LikelihoodConfig(eps2_gp=0.2))
        self.assertAlmostEqual(ll, -0.5 * math.log(2 * math.pi * 0.2), places=9)

    def test_layout_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            log_likelihood(echo_state_model(), [self.sample(0.0, 0.0)], SignalLayout("SAS", 1, 1))

    def test_invalid_variance(self):
        with self.assertRaises(InvalidVarianceError):
            LikelihoodConfig(eps2_gp=0.0)
        with self.assertRaises(InvalidVarianceError):
            gaussian_log_density([0.0], [0.0], [0.0])

    def test_one_value_per_model(self):
        models = [echo_state_model(), MlpModel([2, 1], [np.zeros((2, 1))], [np.zeros(1)], layout=SAR_1D)]
        lls = log_likelihoods(models, [self.sample(0.0, 0.0)], SAR_1D)
        self.assertEqual(lls.shape, (2,))
        self.assertEqual(lls[0], lls[1])


class StorageTests(SimpleTestCase):
    layout = SignalLayout("SARS", 2, 1)

    def samples(self, n=10, seed=0):
        rng = np.random.default_rng(seed)
        return [
            TransitionSample(s=rng.normal(size=2), a=rng.normal(size=1), r=rng.normal(), s_next=rng.normal(size=2))
            for _ in range(n)
        ]

    def test_gp_round_trip(self):
        model = fit_model(self.samples(), self.layout)
        loaded = deserialize_model(serialize_model(model))
        X = np.random.default_rng(1).normal(size=(7, 3))
        for a, b in zip(model.predict_batch(X), loaded.predict_batch(X)):
            np.testing.assert_array_equal(a, b)
        self.assertEqual(loaded.layout, self.layout)
        self.assertTrue(loaded.normalize_y)
        np.testing.assert_array_equal(loaded.y_mean, model.y_mean)
        raw = fit_model(self.samples(), self.layout, DynamicsFitConfig(normalize_y=False))
        self.assertFalse(deserialize_model(serialize_model(raw)).normalize_y)

    def test_mlp_round_trip(self):
        config = DynamicsFitConfig(kind="mlp", mlp=MlpTrainConfig(hidden=(4,), epochs=3, batch_size=5))
        model = fit_model(self.samples(), self.layout, config)
        self.assertIs(model.kind, ModelKind.MLP)
        with tempfile.TemporaryDirectory() as tmp:
            loaded = load_model(save_model(model, f"{tmp}/m.json"))
        X = np.random.default_rng(2).normal(size=(7, 3))
        np.testing.assert_array_equal(model.predict_batch(X)[0], loaded.predict_batch(X)[0])

    def test_truncated_file(self):
        data = serialize_model(fit_model(self.samples(3), self.layout))
        with self.assertRaises(ModelFormatError):
            deserialize_model(data[: len(data) // 2])

    def test_version_and_kind(self):
        payload = model_to_dict(fit_model(self.samples(3), self.layout))
        with self.assertRaises(ModelVersionError):
            deserialize_model(json.dumps({**payload, "version": 2}).encode())
        with self.assertRaises(UnsupportedModelError):
            deserialize_model(json.dumps({**payload, "kind": "forest"}).encode())

    def test_schema_violation(self):
        payload = model_to_dict(fit_model(self.samples(3), self.layout))
        payload["Y"] = payload["Y"][:-1]
        with self.assertRaises(ModelFormatError):
            deserialize_model(json.dumps(payload).encode())

    def test_needs_layout(self):
        with self.assertRaises(ModelFormatError):
            serialize_model(gp_fit([[0.0]], [[1.0]]))
