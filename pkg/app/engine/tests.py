import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from app.core.constants import ModelKind
from app.core.types import SignalLayout
from app.dynamics.fitting import fit_model
from app.dynamics.mlp import MlpModel
from app.engine import events as ev
from app.engine.events import EventLog, write_events_jsonl
from app.engine.learning import expand_library, learning_phase
from app.engine.library import LibraryEntry, PolicyLibrary, load_library, read_manifest, save_library
from app.engine.novelty import NoveltyConfig, detect_novel
from app.engine.reuse import PolicyReuseEngine, ReuseConfig, ReusePhaseState, run_reuse_episode
from app.environments.nav2d import Nav2dTask
from app.environments.rollout import collect_transitions, rollout_episode
from app.environments.suites import make_env, make_source_suite
from app.policies.controllers import NavController
from app.policies.learners import OracleScriptedLearner
from app.utils.exceptions import (
    DuplicateTaskError,
    EmptyLibraryError,
    LayoutMismatchError,
    MissingLibraryError,
)

NAV_LAYOUT = SignalLayout("SAR", 2, 2)


def nav_entry(task, n_samples=200, seed=0):
    policy = NavController(task.goal)
    rng = np.random.default_rng(seed)
    samples = collect_transitions(make_env(task, rng), policy, n_samples, rng, explore_fraction=0.5)
    return LibraryEntry(task=task, policy=policy, model=fit_model(samples, NAV_LAYOUT), n_samples=n_samples)


def first_step_above(events, index, level=0.9):
    for record in events:
        if record["event"] == ev.STEP and record["belief"][index] > level:
            return record["step"]
    return None


class NavLibraryMixin:
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.sources = make_source_suite("nav2d")
        cls.library = PolicyLibrary(tuple(nav_entry(t, seed=i) for i, t in enumerate(cls.sources)), NAV_LAYOUT)


class NoveltyTests(SimpleTestCase):
    def test_detection(self):
        cfg = NoveltyConfig(k=3, threshold=-500.0)
        self.assertTrue(detect_novel([-600.0, -700.0, -550.0], cfg))
        self.assertFalse(detect_novel([-100.0, -600.0, -700.0], cfg))
        self.assertFalse(detect_novel([-900.0, -900.0], cfg))
        self.assertFalse(detect_novel([-500.0, -500.0, -500.0], cfg))
        self.assertTrue(detect_novel([0.0, -600.0, -700.0, -550.0], cfg))

    def test_window_size(self):
        with self.assertRaises(ValueError):
            NoveltyConfig(k=0)


class LibraryTests(NavLibraryMixin, SimpleTestCase):
    def test_basics(self):
        self.assertEqual(self.library.n, 4)
        self.assertEqual(self.library.task_ids, ["nav2d@10:10", "nav2d@-9:9", "nav2d@-7:-7", "nav2d@8:-8"])
        with self.assertRaises(DuplicateTaskError):
            PolicyLibrary((self.library[0], self.library[0]), NAV_LAYOUT)
        with self.assertRaises(EmptyLibraryError):
            PolicyLibrary((), NAV_LAYOUT).require_entries()

    def test_layout_mismatch(self):
        wrong = MlpModel([6, 2], [np.zeros((6, 2))], [np.zeros(2)], layout=SignalLayout("SAS", 2, 4))
        entry = LibraryEntry(Nav2dTask(goal=(0, 10)), NavController((0, 10)), wrong)
        with self.assertRaises(LayoutMismatchError):
            self.library.with_entry(entry)

    def test_expansion_keeps_existing_models(self):
        X = np.random.default_rng(5).uniform(-10, 10, size=(20, 4))
        before = [m.predict_batch(X) for m in self.library.models]
        extra = nav_entry(Nav2dTask(goal=(0, 10)), n_samples=50)
        expanded, belief = expand_library(self.library, extra.policy, extra.model, extra.task, 50)
        self.assertEqual(expanded.n, 5)
        self.assertEqual(belief.as_list(), [0.2] * 5)
        self.assertEqual(self.library.n, 4)
        for (mean, var), model in zip(before, expanded.models[:4]):
            after_mean, after_var = model.predict_batch(X)
            np.testing.assert_array_equal(mean, after_mean)
            np.testing.assert_array_equal(var, after_var)
        with self.assertRaises(DuplicateTaskError):
            expand_library(expanded, extra.policy, extra.model, extra.task)

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            items = [{"task": e.task, "policy": e.policy, "models": {ModelKind.GP: e.model}, "n_samples": e.n_samples}
                     for e in self.library.entries]
            path = save_library(items, NAV_LAYOUT, tmp, seed=3)
            manifest = json.loads(path.read_text())
            self.assertEqual(manifest["seed"], 3)
            self.assertEqual(manifest["entries"][0]["model_files"], {"gp": "models/00-nav2d_10_10-gp.json"})
            self.assertEqual(read_manifest(tmp)["version"], 1)

            loaded = load_library(tmp, "gp", batch_size=2)
            self.assertEqual(loaded.task_ids, self.library.task_ids)
            self.assertEqual(loaded.layout.batch_size, 2)
            X = np.zeros((1, 4))
            np.testing.assert_array_equal(loaded.models[1].predict_batch(X)[0], self.library.models[1].predict_batch(X)[0])
            with self.assertRaises(MissingLibraryError):
                load_library(tmp, "mlp")

    def test_missing_manifest(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(MissingLibraryError):
                load_library(Path(tmp) / "nowhere")


class ReuseTests(NavLibraryMixin, SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        # one library and one first episode per (seed, source)
        cls.seeded_steps = {}
        for seed in range(10):
            library = PolicyLibrary(
                tuple(nav_entry(t, seed=10 * seed + i) for i, t in enumerate(cls.sources)), NAV_LAYOUT
            )
            for index, task in enumerate(cls.sources):
                events = EventLog(trial=seed)
                state = ReusePhaseState.start(library.n)
                run_reuse_episode(state, make_env(task), library, NAV_LAYOUT, ReuseConfig(),
                                  np.random.default_rng(seed), events)
                cls.seeded_steps[seed, index] = [r for r in events if r["event"] == ev.STEP]

    def test_belief_concentrates_on_source_task(self):
        for index, task in enumerate(self.sources):
            hits = []
            for seed in range(10):
                step = first_step_above(self.seeded_steps[seed, index], index)
                hits.append(step is not None and step < 20)
            self.assertGreaterEqual(sum(hits), 9, msg=f"{task.task_id}: {hits}")

    def test_belief_on_source_task_rarely_drops(self):
        rises = total = 0
        for (seed, index), steps in self.seeded_steps.items():
            trail = [0.25] + [r["belief"][index] for r in steps]
            rises += sum(b >= a - 1e-9 for a, b in zip(trail, trail[1:]))
            total += len(trail) - 1
        self.assertGreaterEqual(rises / total, 0.9)

    def test_sources_are_never_flagged_novel(self):
        rng = np.random.default_rng(0)
        native = [rollout_episode(make_env(t), NavController(t.goal), rng).episode_return() for t in self.sources]
        novelty = NoveltyConfig(k=3, threshold=2.0 * min(native))
        config = ReuseConfig(novelty=novelty)
        for task in self.sources:
            engine = PolicyReuseEngine(self.library, NAV_LAYOUT, config, np.random.default_rng(1),
                                       learner=OracleScriptedLearner())
            run = engine.run_target(make_env(task), 5, continual=True)
            self.assertIsNone(run.detected_at, msg=task.task_id)
            self.assertEqual(run.library.n, 4)
            for end in range(novelty.k, 6):
                self.assertFalse(detect_novel(run.returns[:end], novelty))

    def test_reuse_matches_native_return_on_source(self):
        task = self.sources[0]
        native = rollout_episode(make_env(task), NavController(task.goal), np.random.default_rng(0)).episode_return()
        engine = PolicyReuseEngine(self.library, NAV_LAYOUT, ReuseConfig(), np.random.default_rng(0))
        for reused in engine.run_target(make_env(task), 3).returns:
            self.assertLessEqual(abs(reused - native), 0.1 * abs(native))

    def test_identical_models_keep_uniform_belief(self):
        model = self.library.models[0]
        tasks = self.sources[:3]
        library = PolicyLibrary(tuple(LibraryEntry(t, NavController(t.goal), model) for t in tasks), NAV_LAYOUT)
        events = EventLog(trial=0)
        state = ReusePhaseState.start(3)
        run_reuse_episode(state, make_env(Nav2dTask(goal=(3, 4))), library, NAV_LAYOUT, ReuseConfig(),
                          np.random.default_rng(0), events)
        for record in events:
            self.assertEqual(record["belief"], [1 / 3] * 3)

    def test_zero_budget(self):
        state = ReusePhaseState.start(self.library.n)
        result = run_reuse_episode(state, make_env(self.sources[0]), self.library, NAV_LAYOUT, max_steps=0)
        self.assertEqual(result.return_U, 0.0)
        self.assertEqual(result.steps, 0)
        self.assertEqual(state.belief.as_list(), [0.25] * 4)

    def test_goal_at_start(self):
        home = Nav2dTask(goal=(0, 0))
        library = PolicyLibrary((LibraryEntry(home, NavController((0, 0)), self.library.models[0]),), NAV_LAYOUT)
        result = run_reuse_episode(ReusePhaseState.start(1), make_env(home), library, NAV_LAYOUT)
        self.assertEqual(result.steps, 1)
        self.assertTrue(result.reached_goal)

    def test_batched_updates(self):
        layout = SignalLayout("SAR", 2, 2, batch_size=5)
        events = EventLog(trial=0)
        state = ReusePhaseState.start(self.library.n)
        run_reuse_episode(state, make_env(self.sources[1]), self.library, layout, ReuseConfig(),
                          np.random.default_rng(0), events)
        steps = [r for r in events if r["event"] == ev.STEP]
        # belief moves only once a window of five samples is complete
        for record in steps[:4]:
            self.assertEqual(record["belief"], [0.25] * 4)
        self.assertNotEqual(steps[4]["belief"], [0.25] * 4)
        for start in range(0, len(steps), 5):
            window = {r["selected_policy"] for r in steps[start:start + 5]}
            self.assertEqual(len(window), 1)

    def test_same_seed_same_trace(self):
        traces = []
        for _ in range(2):
            engine = PolicyReuseEngine(self.library, NAV_LAYOUT, ReuseConfig(selection="sample"), np.random.default_rng(9))
            run = engine.run_target(make_env(Nav2dTask(goal=(10.5, 10))), 2)
            traces.append([e.selected_policy_trace for e in run.episodes])
        self.assertEqual(traces[0], traces[1])

    def test_run_target_validation(self):
        engine = PolicyReuseEngine(self.library, NAV_LAYOUT)
        with self.assertRaises(ValueError):
            engine.run_target(make_env(self.sources[0]), 0)
        with self.assertRaises(ValueError):
            engine.run_target(make_env(self.sources[0]), 1, continual=True)


class ContinualTests(NavLibraryMixin, SimpleTestCase):
    def test_novel_target_grows_library(self):
        # both sources lie right of the origin, so no mix of their policies gets near the target
        library = PolicyLibrary((self.library[0], self.library[3]), NAV_LAYOUT)
        config = ReuseConfig(novelty=NoveltyConfig(k=3, threshold=-500.0))
        engine = PolicyReuseEngine(library, NAV_LAYOUT, config, np.random.default_rng(0),
                                   learner=OracleScriptedLearner())
        events = EventLog(trial=0)
        target = Nav2dTask(goal=(-8, 0))
        run = engine.run_target(make_env(target), 6, continual=True, events=events)

        self.assertEqual(run.detected_at, 2)
        self.assertEqual(run.expansions, ["nav2d@-8:0"])
        self.assertEqual(run.library.n, 3)
        self.assertEqual(library.n, 2)
        self.assertTrue(all(r < -500 for r in run.returns[:3]))
        self.assertGreater(run.returns[-1], -100)

        tags = [r["event"] for r in events if r["event"] != ev.STEP]
        self.assertIn(ev.EXPANSION, tags)
        expansion = next(r for r in events if r["event"] == ev.EXPANSION)
        self.assertEqual(expansion["library_size"], 3)
        after = [r for r in events if r["event"] == ev.STEP and r["episode"] == run.detected_at + 1]
        self.assertLess(first_step_above(after, 2), 20)

    def test_learning_phase(self):
        env = make_env(Nav2dTask(goal=(0, -9)))
        outcome = learning_phase(env, OracleScriptedLearner(), NAV_LAYOUT, n_samples=120, rng=np.random.default_rng(1))
        self.assertEqual(len(outcome.samples), 120)
        self.assertEqual(outcome.policy.goal, (0.0, -9.0))
        self.assertEqual(outcome.model.input_dim, 4)


class EventTests(SimpleTestCase):
    def test_jsonl(self):
        log = EventLog(trial=1, method="ours-gp", target_task="nav2d@0:10")
        log.emit(ev.STEP, episode=0, step=0, selected_policy=2, belief=[0.5, 0.5], reward=-1.5, phase="reuse")
        log.emit(ev.EPISODE_END, episode=0, step=1, selected_policy=None, belief=None, reward=-1.5, phase="reuse")
        with tempfile.TemporaryDirectory() as tmp:
            path = write_events_jsonl(log.events, Path(tmp) / "events.jsonl")
            lines = path.read_text().splitlines()
        self.assertEqual(len(lines), 2)
        first = json.loads(lines[0])
        self.assertEqual(first["method"], "ours-gp")
        self.assertEqual(first["selected_policy"], 2)
        self.assertIsNone(json.loads(lines[1])["belief"])
