import numpy as np
from django.test import SimpleTestCase

from app.environments.cartpole import CartPoleTask
from app.environments.nav2d import Nav2dTask
from app.environments.rollout import rollout_episode
from app.environments.suites import make_env
from app.policies.base import policy_from_dict
from app.policies.cem import CemConfig, CrossEntropyLearner, cem_learn
from app.policies.controllers import (
    CartPoleController,
    NavController,
    cartpole_controller_act,
    nav_controller_act,
    scripted_policy_for,
)
from app.policies.learners import OracleScriptedLearner, make_learner
from app.policies.linear import (
    LinearGaussianPolicy,
    LinearGaussianPolicyClass,
    LinearScorePolicy,
    LinearScorePolicyClass,
    policy_class_for,
)
from app.utils.exceptions import LearnerFailedError, ModelFormatError, UnknownDomainError


class ControllerTests(SimpleTestCase):
    def test_nav_controller_saturates(self):
        np.testing.assert_array_equal(nav_controller_act([0, 0], [10, 10]), [1.0, 1.0])
        np.testing.assert_allclose(nav_controller_act([9.8, 10.0], [10, 10]), [0.2, 0.0], atol=1e-12)
        np.testing.assert_allclose(nav_controller_act([0, 0], [-9, 9], gain=0.1), [-0.9, 0.9], atol=1e-12)

    def test_cartpole_pushes_under_the_pole(self):
        self.assertEqual(cartpole_controller_act([0.0, 0.0, 0.05, 0.0], 0.0), 1)
        self.assertEqual(cartpole_controller_act([0.0, 0.0, -0.05, 0.0], 0.0), 0)

    def test_cartpole_mirror(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            state = rng.uniform(-0.1, 0.1, size=4)
            self.assertEqual(cartpole_controller_act(state, 5.0), 1 - cartpole_controller_act(-state, -5.0))

    def test_cartpole_controllers_balance(self):
        for force in (5.0, -5.0, 4.5, -5.5):
            steps = []
            for seed in range(10):
                env = make_env(CartPoleTask(disturbance=force, reset_noise=0.05), np.random.default_rng(seed))
                policy = CartPoleController(5.0 if force > 0 else -5.0)
                steps.append(rollout_episode(env, policy, np.random.default_rng(seed)).steps)
            self.assertGreaterEqual(np.mean(steps), 95, msg=f"F'={force}: {steps}")

    def test_scripted_policy_for(self):
        self.assertEqual(scripted_policy_for(Nav2dTask(goal=(0, 10))).goal, (0.0, 10.0))
        self.assertEqual(scripted_policy_for(CartPoleTask(disturbance=-5.0)).disturbance, -5.0)
        with self.assertRaises(UnknownDomainError):
            scripted_policy_for("nav2d")


class LinearPolicyTests(SimpleTestCase):
    def test_gaussian_policy_clips(self):
        policy = LinearGaussianPolicy(np.eye(2), np.zeros(2))
        np.testing.assert_array_equal(policy.act([0.5, 2.0]), [0.5, 1.0])
        self.assertTrue(policy.deterministic)
        self.assertFalse(LinearGaussianPolicy(np.eye(2), np.zeros(2), stddev=0.1).deterministic)

    def test_score_policy_ties(self):
        self.assertEqual(LinearScorePolicy(np.zeros((2, 4)), np.zeros(2)).act(np.ones(4)), 0)
        self.assertEqual(LinearScorePolicy(np.zeros((2, 4)), [0.0, 1.0]).act(np.ones(4)), 1)

    def test_policy_classes(self):
        nav = policy_class_for(make_env(Nav2dTask(goal=(1, 1))))
        self.assertIsInstance(nav, LinearGaussianPolicyClass)
        self.assertEqual(nav.n_params, 6)
        cart = policy_class_for(make_env(CartPoleTask()))
        self.assertIsInstance(cart, LinearScorePolicyClass)
        self.assertEqual(cart.n_params, 10)
        policy = nav.build(np.arange(6.0))
        np.testing.assert_array_equal(policy.W, [[0.0, 1.0], [2.0, 3.0]])
        np.testing.assert_array_equal(policy.b, [4.0, 5.0])

    def test_dict_round_trip(self):
        state = np.array([0.3, -0.7])
        for policy in (NavController((2, 3), gain=0.5), LinearGaussianPolicy([[0.1, 0.2], [0.3, 0.4]], [0.0, 0.1])):
            restored = policy_from_dict(policy.to_dict())
            np.testing.assert_array_equal(restored.act(state), policy.act(state))
        restored = policy_from_dict(CartPoleController(5.0).to_dict())
        self.assertEqual(restored.gains, CartPoleController(5.0).gains)
        with self.assertRaises(ModelFormatError):
            policy_from_dict({"kind": "neural"})


class CemTests(SimpleTestCase):
    def nav_env(self, goal=(0, 10)):
        return make_env(Nav2dTask(goal=goal))

    def test_same_seed_same_policy(self):
        a = cem_learn(self.nav_env(), iterations=3, population=8, seed=3)
        b = cem_learn(self.nav_env(), iterations=3, population=8, seed=3)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(a.b, b.b)

    def test_single_candidate_budget(self):
        policy = cem_learn(self.nav_env(), iterations=1, population=1, seed=7)
        theta = np.random.default_rng(7).standard_normal((1, 6))[0]
        np.testing.assert_array_equal(policy.W, theta[:4].reshape(2, 2))
        np.testing.assert_array_equal(policy.b, theta[4:])

    def test_history_never_decreases(self):
        result = CrossEntropyLearner(CemConfig(iterations=6, population=10, seed=1)).learn(self.nav_env())
        self.assertEqual(len(result.history), 6)
        self.assertTrue(all(b >= a for a, b in zip(result.history, result.history[1:])))
        self.assertEqual(result.best_return, result.history[-1])
        self.assertTrue(result.samples)

    def test_learns_novel_goal(self):
        env = self.nav_env()
        rng = np.random.default_rng(0)
        library_returns = [rollout_episode(env, NavController(goal), rng).episode_return()
                           for goal in ((10, 10), (-9, 9), (-7, -7), (8, -8))]
        learned = []
        for seed in range(6):
            result = CrossEntropyLearner(CemConfig(seed=seed)).learn(env)
            replay = rollout_episode(env, result.policy, rng).episode_return()
            self.assertAlmostEqual(replay, result.best_return, places=9)
            self.assertGreater(replay, max(library_returns), msg=f"seed {seed}")
            learned.append(replay)
        self.assertGreaterEqual(sum(r >= -150.0 for r in learned), 5, msg=str(learned))

    def test_extra_noise_decays(self):
        config = CemConfig(iterations=4, extra_noise=0.5)
        self.assertEqual([config.extra_variance(i) for i in range(4)], [0.1875, 0.125, 0.0625, 0.0])
        self.assertEqual(CemConfig(extra_noise=0.0).extra_variance(0), 0.0)
        with self.assertRaises(ValueError):
            CemConfig(extra_noise=-1.0)

    def test_discrete_domain(self):
        env = make_env(CartPoleTask(disturbance=5.0), np.random.default_rng(0))
        result = CrossEntropyLearner(CemConfig(iterations=2, population=6, seed=2)).learn(env)
        self.assertIsInstance(result.policy, LinearScorePolicy)
        self.assertIn(result.policy.act(np.zeros(4)), (0, 1))

    def test_budget_exhausted(self):
        config = CemConfig(iterations=2, population=4, target_return=1e9)
        with self.assertRaises(LearnerFailedError) as ctx:
            CrossEntropyLearner(config).learn(self.nav_env())
        self.assertIsNotNone(ctx.exception.best_policy)
        self.assertLess(ctx.exception.best_return, 1e9)

    def test_config_bounds(self):
        with self.assertRaises(ValueError):
            CemConfig(population=0)
        with self.assertRaises(ValueError):
            CemConfig(elite_fraction=0.0)
        self.assertEqual(CemConfig(population=32, elite_fraction=0.25).n_elite, 8)


class LearnerTests(SimpleTestCase):
    def test_oracle_learner(self):
        result = OracleScriptedLearner().learn(make_env(Nav2dTask(goal=(0, 10))))
        self.assertIsInstance(result.policy, NavController)
        self.assertEqual(result.policy.goal, (0.0, 10.0))
        self.assertAlmostEqual(result.best_return, -46.0, places=9)
        self.assertEqual(len(result.samples), 10)

    def test_make_learner(self):
        self.assertIsInstance(make_learner("cem"), CrossEntropyLearner)
        self.assertIsInstance(make_learner("oracle-scripted"), OracleScriptedLearner)
        with self.assertRaises(ValueError):
            make_learner("ppo")
