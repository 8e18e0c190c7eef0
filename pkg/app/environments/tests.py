import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st

from app.environments.cartpole import CartPoleEnv, CartPoleTask, applied_force, cartpole_accelerations, cartpole_step
from app.environments.nav2d import Nav2dEnv, Nav2dTask, nav2d_step
from app.environments.rollout import collect_transitions, rollout_episode
from app.environments.suites import (
    env_dims,
    make_env,
    make_source_suite,
    make_suite,
    make_target_suite,
    task_from_dict,
)
from app.policies.controllers import NavController
from app.utils.exceptions import InvalidActionError, UnknownDomainError


class RandomPolicy:
    def __init__(self, env):
        self.env = env

    def act(self, state, rng=None):
        return self.env.sample_action(rng)


class Nav2dTests(SimpleTestCase):
    def test_first_step_reward(self):
        next_state, reward, done = nav2d_step([0.0, 0.0], [1.0, 1.0], Nav2dTask(goal=(10, 10)))
        np.testing.assert_array_equal(next_state, [1.0, 1.0])
        self.assertAlmostEqual(reward, -math.sqrt(162) - 0.2, places=12)
        self.assertFalse(done)

    def test_action_is_clipped(self):
        next_state, reward, _ = nav2d_step([0.0, 0.0], [5.0, -3.0], Nav2dTask(goal=(10, 10)))
        np.testing.assert_array_equal(next_state, [1.0, -1.0])
        self.assertAlmostEqual(reward, -math.hypot(9.0, 11.0) - 0.2, places=12)

    def test_goal_reached(self):
        _, reward, done = nav2d_step([9.0, 10.0], [1.0, 0.0], Nav2dTask(goal=(10, 10)))
        self.assertTrue(done)
        self.assertAlmostEqual(reward, -0.1, places=12)

    def test_episode_budget(self):
        env = Nav2dEnv(Nav2dTask(goal=(50, 50), max_steps=7))
        episode = rollout_episode(env, NavController((-50, -50)), np.random.default_rng(0))
        self.assertEqual(episode.steps, 7)
        self.assertFalse(episode.reached_goal)

    def test_step_before_reset(self):
        with self.assertRaises(RuntimeError):
            Nav2dEnv(Nav2dTask(goal=(1, 1))).step([0.0, 0.0])

    def test_task_ids(self):
        self.assertEqual(Nav2dTask(goal=(10.5, 10)).task_id, "nav2d@10.5:10")
        self.assertEqual(Nav2dTask(goal=(-7, -7)).task_id, "nav2d@-7:-7")
        with self.assertRaises(ValueError):
            Nav2dTask(goal=(1, 2, 3))


class CartPoleTests(SimpleTestCase):
    def test_accelerations_match_equations_of_motion(self):
        task = CartPoleTask(disturbance=5.0)
        state = (0.0, 0.0, 0.1, 0.2)
        force = applied_force(1, task)
        self.assertEqual(force, 15.0)
        xacc, thetaacc = cartpole_accelerations(state, force, task)

        temp = (15.0 + 0.05 * 0.04 * math.sin(0.1)) / 1.1
        expected_theta = (9.8 * math.sin(0.1) - math.cos(0.1) * temp) / (
            0.5 * (4.0 / 3.0 - 0.1 * math.cos(0.1) ** 2 / 1.1)
        )
        expected_x = temp - 0.05 * expected_theta * math.cos(0.1) / 1.1
        self.assertAlmostEqual(thetaacc, expected_theta, places=12)
        self.assertAlmostEqual(xacc, expected_x, places=12)

    def test_euler_step(self):
        task = CartPoleTask()
        state = np.array([0.1, -0.2, 0.05, 0.3])
        xacc, thetaacc = cartpole_accelerations(state, 10.0, task)
        next_state, reward, done = cartpole_step(state, 1, task)
        np.testing.assert_allclose(
            next_state, [0.1 - 0.004, -0.2 + 0.02 * xacc, 0.05 + 0.006, 0.3 + 0.02 * thetaacc], atol=1e-15
        )
        self.assertEqual(reward, 1.0)
        self.assertFalse(done)

    @hsettings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=-0.2, max_value=0.2), min_size=4, max_size=4), st.sampled_from([0, 1]))
    def test_mirror_symmetry_without_disturbance(self, state, action):
        task = CartPoleTask(disturbance=0.0)
        mirrored = [-v for v in state]
        a, ra, da = cartpole_step(state, action, task)
        b, rb, db = cartpole_step(mirrored, 1 - action, task)
        np.testing.assert_array_equal(a, -b)
        self.assertEqual((ra, da), (rb, db))

    def test_fallen_pole(self):
        _, reward, done = cartpole_step([0.0, 0.0, 0.3, 0.0], 0, CartPoleTask())
        self.assertEqual(reward, 0.0)
        self.assertTrue(done)

    def test_invalid_action(self):
        env = CartPoleEnv(CartPoleTask())
        env.reset()
        with self.assertRaises(InvalidActionError):
            env.step(2)
        with self.assertRaises(InvalidActionError):
            env.encode_action(-1)
        np.testing.assert_array_equal(env.encode_action(1), [0.0, 1.0])

    def test_episode_never_exceeds_budget(self):
        for seed in range(5):
            env = CartPoleEnv(CartPoleTask(disturbance=5.0), np.random.default_rng(seed))
            rng = np.random.default_rng(seed + 100)
            episode = rollout_episode(env, RandomPolicy(env), rng)
            self.assertLessEqual(episode.steps, 100)
            self.assertGreaterEqual(episode.steps, 1)

    def test_reset_noise(self):
        env = CartPoleEnv(CartPoleTask(reset_noise=0.05), np.random.default_rng(1))
        state = env.reset()
        self.assertTrue(np.all(np.abs(state) <= 0.05))
        self.assertFalse(env.deterministic)

    def test_default_reset_is_deterministic(self):
        self.assertEqual(CartPoleTask().reset_noise, 0.0)
        env = CartPoleEnv(CartPoleTask(), np.random.default_rng(1))
        self.assertTrue(env.deterministic)
        np.testing.assert_array_equal(env.reset(), np.zeros(4))
        np.testing.assert_array_equal(env.reset(), np.zeros(4))

    def test_task_ids(self):
        self.assertEqual(CartPoleTask(disturbance=5.0).task_id, "cartpole@5")
        self.assertEqual(CartPoleTask(disturbance=-4.5).task_id, "cartpole@-4.5")


class SuiteTests(SimpleTestCase):
    def test_sources(self):
        goals = [t.goal for t in make_source_suite("nav2d")]
        self.assertEqual(goals, [(10.0, 10.0), (-9.0, 9.0), (-7.0, -7.0), (8.0, -8.0)])
        forces = [t.disturbance for t in make_source_suite("cartpole")]
        self.assertEqual(forces, [5.0, -5.0])

    def test_targets(self):
        near = [t.task_id for t in make_target_suite("nav2d")]
        self.assertIn("nav2d@10.5:10", near)
        self.assertEqual(len(set(near)), len(near))
        novel = [t.task_id for t in make_target_suite("nav2d", "novel")]
        self.assertIn("nav2d@0:10", novel)
        self.assertEqual([t.disturbance for t in make_target_suite("cartpole", "novel")], [8.0, -8.0])
        with self.assertRaises(ValueError):
            make_target_suite("nav2d", "source")

    def test_overrides(self):
        tasks = make_suite("cartpole", "near", reset_noise=0.02, max_steps=50)
        self.assertTrue(all(t.max_steps == 50 and t.reset_noise == 0.02 for t in tasks))

    def test_unknown_domain(self):
        with self.assertRaises(UnknownDomainError):
            make_source_suite("mujoco")
        with self.assertRaises(UnknownDomainError):
            make_env(object())
        with self.assertRaises(UnknownDomainError):
            task_from_dict({"domain": "atari"})

    def test_task_dict_round_trip(self):
        for task in make_source_suite("nav2d") + make_source_suite("cartpole"):
            self.assertEqual(task_from_dict(task.to_dict()), task)

    def test_dims(self):
        self.assertEqual(env_dims("nav2d"), {"state_dim": 2, "action_dim": 2})
        self.assertEqual(env_dims("cartpole"), {"state_dim": 4, "action_dim": 2})


class RolloutTests(SimpleTestCase):
    def test_collect_exact_count(self):
        env = make_env(Nav2dTask(goal=(3, 3)))
        samples = collect_transitions(env, NavController((3, 3)), 25, np.random.default_rng(0))
        self.assertEqual(len(samples), 25)
        for sample in samples:
            np.testing.assert_allclose(sample.s_next, sample.s + sample.a, atol=1e-12)

    def test_controller_reaches_goal(self):
        env = make_env(Nav2dTask(goal=(0, 10)))
        episode = rollout_episode(env, NavController((0, 10)), np.random.default_rng(0), collect=True)
        self.assertTrue(episode.reached_goal)
        self.assertEqual(episode.steps, 10)
        self.assertAlmostEqual(episode.episode_return(), -46.0, places=9)
        self.assertEqual(len(episode.samples), 10)
