import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st

from app.baselines.agents import BprReturnAgent, OpsDrlAgent, PrDrlAgent, run_baseline_episode
from app.baselines.ops_drl import OpsState, ops_scores, ops_select, ops_update
from app.baselines.pr_drl import PrDrlState, pr_probabilities, pr_select, pr_update
from app.baselines.return_bpr import (
    ReturnObservationTable,
    bpr_return_select,
    bpr_return_update,
    default_return_variance,
    fit_return_table,
)
from app.core.belief import belief_init
from app.core.types import Belief
from app.engine import events as ev
from app.engine.events import EventLog
from app.environments.nav2d import Nav2dTask
from app.environments.suites import make_env, make_source_suite
from app.policies.controllers import NavController, scripted_policy_for
from app.utils.exceptions import DimensionMismatchError, InvalidVarianceError


class ReturnBprTests(SimpleTestCase):
    def test_equidistant_return(self):
        table = ReturnObservationTable(mean=[[0.0, 0.0], [10.0, 0.0]], variance=np.ones((2, 2)))
        posterior = bpr_return_update(belief_init(2), 5.0, 0, table)
        np.testing.assert_allclose(posterior.weights, [0.5, 0.5], atol=1e-15)

    def test_matching_return(self):
        table = ReturnObservationTable(mean=[[0.0, 0.0], [10.0, 0.0]], variance=np.ones((2, 2)))
        posterior = bpr_return_update(belief_init(2), 10.0, 0, table)
        self.assertGreater(posterior[1], 0.999)

    def test_select(self):
        table = ReturnObservationTable(mean=[[1.0, 0.0], [0.0, 2.0]], variance=np.ones((2, 2)))
        self.assertEqual(bpr_return_select(Belief([0.5, 0.5]), table), 1)
        self.assertEqual(bpr_return_select(Belief([1.0, 0.0]), table), 0)
        dominated = ReturnObservationTable(mean=[[1.0, 3.0], [0.0, 2.0]], variance=np.ones((2, 2)))
        self.assertEqual(bpr_return_select(belief_init(2), dominated), 1)

    def test_table_validation(self):
        with self.assertRaises(DimensionMismatchError):
            ReturnObservationTable(mean=np.zeros((2, 3)), variance=np.ones((2, 3)))
        with self.assertRaises(InvalidVarianceError):
            ReturnObservationTable(mean=np.zeros((2, 2)), variance=np.zeros((2, 2)))
        table = ReturnObservationTable(mean=np.zeros((2, 2)), variance=np.ones((2, 2)))
        with self.assertRaises(IndexError):
            bpr_return_update(belief_init(2), 0.0, 2, table)

    def test_default_variance(self):
        self.assertAlmostEqual(default_return_variance(np.array([[-100.0, -50.0], [-20.0, 0.0]])), 100.0, places=9)
        self.assertEqual(default_return_variance(np.full((2, 2), 3.0)), 1.0)

    def test_fit_table_on_nav2d(self):
        tasks = make_source_suite("nav2d")
        policies = [scripted_policy_for(t) for t in tasks]
        table = fit_return_table(tasks, policies, episodes=100, variance=25.0)
        self.assertEqual(table.n, 4)
        self.assertTrue(np.all(table.variance == 25.0))
        for j in range(4):
            self.assertEqual(table.mean[j].argmax(), j)
        # the controller for (10, 10) walks the diagonal: distances 9√2 ... 0
        expected = -math.fsum(math.sqrt(2) * k for k in range(10)) - 0.2 * 10
        self.assertAlmostEqual(table.mean[0, 0], expected, places=9)

    def test_fit_table_alignment(self):
        with self.assertRaises(DimensionMismatchError):
            fit_return_table(make_source_suite("nav2d"), [NavController((0, 0))])


class PrDrlTests(SimpleTestCase):
    def test_zero_temperature_is_uniform(self):
        state = PrDrlState.start(4)
        np.testing.assert_allclose(pr_probabilities(state), [0.25] * 4, atol=1e-15)

    def test_first_update(self):
        state = pr_update(PrDrlState.start(3), 0, 10.0)
        np.testing.assert_array_equal(state.W, [10.0, 0.0, 0.0])
        np.testing.assert_array_equal(state.V, [1, 0, 0])
        self.assertAlmostEqual(state.nu, 0.05, places=15)

    def test_softmax_example(self):
        state = PrDrlState(W=np.array([10.0, 0.0, 0.0]), V=np.array([1, 0, 0]), nu=0.05)
        p = pr_probabilities(state)
        self.assertAlmostEqual(p[0], math.exp(0.5) / (math.exp(0.5) + 2), places=12)
        self.assertAlmostEqual(p[0], 0.4519, places=4)

    @hsettings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=-1000, max_value=1000), min_size=1, max_size=8),
           st.floats(min_value=0, max_value=5), st.floats(min_value=-1000, max_value=1000))
    def test_probabilities_normalized_and_shift_invariant(self, W, nu, shift):
        W = np.asarray(W)
        state = PrDrlState(W=W, V=np.zeros(W.size, dtype=int), nu=nu)
        shifted = PrDrlState(W=W + shift, V=np.zeros(W.size, dtype=int), nu=nu)
        p = pr_probabilities(state)
        self.assertAlmostEqual(float(p.sum()), 1.0, delta=1e-12)
        np.testing.assert_allclose(p, pr_probabilities(shifted), atol=1e-9)

    def test_running_mean(self):
        rng = np.random.default_rng(0)
        state = PrDrlState.start(3)
        totals = np.zeros(3)
        for _ in range(2000):
            arm = pr_select(state, rng)
            U = float(rng.normal(-50, 20))
            totals[arm] += U
            state = pr_update(state, arm, U)
        np.testing.assert_allclose(state.W * state.V, totals, atol=1e-9 * max(1.0, np.abs(totals).max()))
        self.assertEqual(int(state.V.sum()), 2000)

    def test_validation(self):
        with self.assertRaises(ValueError):
            PrDrlState.start(0)
        with self.assertRaises(ValueError):
            PrDrlState.start(2, nu=-1.0)


class OpsDrlTests(SimpleTestCase):
    def test_initial_tie(self):
        state = OpsState.start(3)
        np.testing.assert_array_equal(ops_scores(state), [0.0, 0.0, 0.0])
        self.assertEqual(ops_select(state), 0)

    def test_after_one_pull(self):
        state = ops_update(OpsState.start(3), 0, 5.0)
        scores = ops_scores(state)
        expected = [5 + math.sqrt(2 * math.log(2) / 2), math.sqrt(2 * math.log(2)), math.sqrt(2 * math.log(2))]
        np.testing.assert_allclose(scores, expected, atol=1e-12)
        np.testing.assert_allclose(scores, [5.8326, 1.1774, 1.1774], atol=1e-4)
        self.assertEqual(ops_select(state), 0)

    def test_prefers_least_pulled(self):
        state = OpsState(W=np.array([1.0, 1.0, 1.0]), V=np.array([4, 1, 2]))
        self.assertEqual(ops_select(state), 1)


class AgentTests(SimpleTestCase):
    def nav_setup(self):
        tasks = make_source_suite("nav2d")
        return tasks, [scripted_policy_for(t) for t in tasks]

    def test_selection_once_per_episode(self):
        tasks, policies = self.nav_setup()
        env = make_env(Nav2dTask(goal=(10.5, 10)))
        rng = np.random.default_rng(0)
        for agent in (PrDrlAgent(4), OpsDrlAgent(4)):
            events = EventLog(trial=0)
            result = run_baseline_episode(agent, env, policies, rng, events=events)
            self.assertEqual(len(set(result.selected_policy_trace)), 1)
            steps = [r for r in events if r["event"] == ev.STEP]
            self.assertEqual(len(steps), result.steps)
            self.assertEqual(events.events[-1]["event"], ev.EPISODE_END)

    def test_bpr_agent_updates_once(self):
        tasks, policies = self.nav_setup()
        table = fit_return_table(tasks, policies, variance=100.0)
        agent = BprReturnAgent(table)
        env = make_env(tasks[2])
        events = EventLog(trial=0)
        result = run_baseline_episode(agent, env, policies, np.random.default_rng(0), events=events)
        self.assertEqual(result.selected_policy_trace[0], bpr_return_select(belief_init(4), table))
        beliefs = {tuple(r["belief"]) for r in events if r["event"] == ev.STEP}
        self.assertEqual(beliefs, {(0.25, 0.25, 0.25, 0.25)})
        self.assertGreater(agent.belief[2], 0.99)

    def test_ops_agent_explores_every_arm(self):
        _, policies = self.nav_setup()
        agent = OpsDrlAgent(4)
        env = make_env(Nav2dTask(goal=(0, 10)))
        chosen = [run_baseline_episode(agent, env, policies, np.random.default_rng(0)).selected_policy_trace[0]
                  for _ in range(4)]
        self.assertEqual(sorted(chosen), [0, 1, 2, 3])
