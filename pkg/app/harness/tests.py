import json
import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from app.core.constants import Domain, Method, ModelKind, SignalMode
from app.engine.events import STEP
from app.harness import config as config_module
from app.harness.ablation import ABLATION_NAME, ABLATION_SUMMARY_NAME, run_ablation
from app.harness.config import default_experiment, experiment_config_from_dict, load_experiment_config
from app.harness.continual import CONTINUAL_NAME, GROWTH_COLUMNS, GROWTH_NAME, run_continual
from app.harness.management.base import parse_sizes
from app.harness.plots import emit_plots
from app.harness.results import (
    CI_Z,
    ResultRow,
    read_results_csv,
    read_results_frame,
    rows_to_frame,
    summarize_results,
    write_results_csv,
)
from app.harness.runner import RESULTS_NAME, run_experiment
from app.harness.seeding import derive_seed, env_rng, method_rng
from app.harness.sources import fit_sources
from app.utils.exceptions import ConfigError, MalformedResultsError, NoDataError, UnknownDomainError


def small_nav_config(**extra):
    data = {
        "domain": "nav2d",
        "methods": ["ours-gp", "bpr-return", "pr-drl"],
        "target_goals": [[10.5, 10.0]],
        "episodes": 2,
        "trials": 1,
        "samples": 30,
        "return_table": {"episodes": 1},
    }
    data.update(extra)
    return experiment_config_from_dict(data)


class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = experiment_config_from_dict({"domain": "nav2d"})
        self.assertIs(config.domain, Domain.NAV2D)
        self.assertNotIn(Method.OURS_MLP, config.methods)
        self.assertIn(Method.OURS_GP, config.methods)
        self.assertEqual(config.model_kinds, (ModelKind.GP,))
        self.assertIs(config.layout.mode, SignalMode.SAR)
        self.assertEqual((config.layout.state_dim, config.layout.action_dim), (2, 2))
        self.assertEqual(config.reuse.novelty.threshold, -500.0)
        self.assertEqual(config.kernel.l, 2.0)
        self.assertEqual(len(config.source_tasks), 4)
        self.assertEqual(config.controller["controller_gain"], 1.0)

        cartpole = experiment_config_from_dict({"domain": "cartpole"})
        self.assertIs(cartpole.layout.mode, SignalMode.SAS)
        self.assertEqual(cartpole.reuse.novelty.threshold, 30.0)
        self.assertEqual([t.disturbance for t in cartpole.source_tasks], [5.0, -5.0])
        self.assertTrue(all(t.reset_noise == 0.0 for t in cartpole.source_tasks + cartpole.target_tasks))

    def test_overrides_merge_sections(self):
        config = experiment_config_from_dict({"domain": "nav2d", "kernel": {"l": 1.5}}, {"episodes": 3})
        self.assertEqual(config.episodes, 3)
        self.assertEqual(config.kernel.l, 1.5)
        self.assertEqual(config.kernel.delta, 1.0)

    def test_custom_task_lists(self):
        config = experiment_config_from_dict({"domain": "cartpole", "source_forces": [3.0], "target_forces": [6.0, -6.0]})
        self.assertEqual([t.task_id for t in config.source_tasks], ["cartpole@3"])
        self.assertEqual(len(config.target_tasks), 2)
        nav = experiment_config_from_dict({"domain": "nav2d", "target_goals": [[0, 10]]})
        self.assertEqual([t.task_id for t in nav.target_tasks], ["nav2d@0:10"])

    def test_validation_errors(self):
        bad = [
            {"methods": ["ours-gp"]},
            {"domain": "nav2d", "epsiodes": 3},
            {"domain": "nav2d", "source_forces": [5.0]},
            {"domain": "cartpole", "target_goals": [[1, 1]]},
            {"domain": "nav2d", "methods": ["ours-gp", "ours-gp"]},
            {"domain": "nav2d", "methods": ["dqn"]},
            {"domain": "nav2d", "episodes": 0},
            {"domain": "nav2d", "kernel": {"l": -1.0}},
            {"domain": "nav2d", "target_goals": [[1, 1], [1, 1]]},
        ]
        for data in bad:
            with self.assertRaises(ConfigError, msg=data):
                experiment_config_from_dict(data)

    def test_unknown_nested_keys(self):
        bad = [
            {"domain": "nav2d", "task": {"start": [1.0, 1.0]}},
            {"domain": "cartpole", "task": {"goal_radius": 0.5}},
            {"domain": "nav2d", "cem": {"popsize": 8}},
            {"domain": "nav2d", "gp": {"normalise_y": False}},
        ]
        for data in bad:
            with self.assertRaises(ConfigError, msg=data) as ctx:
                experiment_config_from_dict(data)
            self.assertIn("Unrecognised key", str(ctx.exception))
        with self.assertRaises(ConfigError) as ctx:
            experiment_config_from_dict(bad[0])
        self.assertIn("Start", str(ctx.exception))
        config = experiment_config_from_dict({"domain": "nav2d", "task": {"goal_radius": 0.25}})
        self.assertEqual(config.source_tasks[0].goal_radius, 0.25)

    def test_unknown_domain(self):
        with self.assertRaises(UnknownDomainError):
            default_experiment("mujoco")

    def test_toml_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            good = Path(tmp) / "exp.toml"
            good.write_text('name = "tiny"\ndomain = "nav2d"\nepisodes = 4\n\n[signal]\nbatch_size = 5\n')
            config = load_experiment_config(good)
            self.assertEqual(config.name, "tiny")
            self.assertEqual(config.episodes, 4)
            self.assertEqual(config.layout.batch_size, 5)

            broken = Path(tmp) / "broken.toml"
            broken.write_text('domain = "nav2d\n')
            with self.assertRaises(ConfigError):
                load_experiment_config(broken)
            with self.assertRaises(ConfigError):
                load_experiment_config(Path(tmp) / "absent.toml")

    def test_toml_parser_matches_interpreter(self):
        expected = "tomllib" if sys.version_info >= (3, 11) else "tomli"
        self.assertEqual(config_module.tomllib.__name__, expected)
        requirements = Path(__file__).resolve().parents[2].joinpath("requirements.txt").read_text()
        self.assertIn('tomli>=2.0; python_version < "3.11"', requirements)

    def test_shipped_experiments_load(self):
        for path in sorted(Path(__file__).resolve().parents[2].joinpath("experiments").glob("*.toml")):
            config = load_experiment_config(path)
            self.assertTrue(config.methods, msg=path.name)


class ResultsTests(SimpleTestCase):
    def rows(self):
        return [
            ResultRow(trial, "ours-gp", "nav2d@0:10", episode, -10.0 * (trial + 1) - episode)
            for trial in range(3)
            for episode in range(2)
        ]

    def test_csv_round_trip(self):
        rows = self.rows() + [ResultRow(0, "pr-drl", "nav2d@0:10", 0, -math.sqrt(162) - 0.2, 1.25)]
        with tempfile.TemporaryDirectory() as tmp:
            path = write_results_csv(rows, Path(tmp) / "results.csv")
            text = path.read_bytes()
            self.assertTrue(text.startswith(b"trial,method,target_task,episode,return,wall_time_ms\n"))
            self.assertNotIn(b"\r\n", text)
            self.assertEqual(read_results_csv(path), rows)

    def test_header_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_results_csv([], Path(tmp) / "results.csv")
            self.assertEqual(read_results_csv(path), [])
            with self.assertRaises(NoDataError):
                emit_plots(path, Path(tmp) / "plots")

    def test_unreadable_inputs(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(NoDataError):
                read_results_frame(Path(tmp) / "missing.csv")
            empty = Path(tmp) / "empty.csv"
            empty.write_text("")
            with self.assertRaises(NoDataError):
                read_results_frame(empty)
            lacking = Path(tmp) / "lacking.csv"
            lacking.write_text("trial,method,episode\n0,a,0\n")
            with self.assertRaises(MalformedResultsError):
                read_results_frame(lacking)
            garbled = Path(tmp) / "garbled.csv"
            garbled.write_text("trial,method,target_task,episode,return,wall_time_ms\n0,a,t,0,oops,0\n")
            with self.assertRaises(MalformedResultsError):
                read_results_frame(garbled)

    def test_summary(self):
        summary = summarize_results(self.rows())
        first = summary.per_episode[summary.per_episode["episode"] == 0].iloc[0]
        self.assertAlmostEqual(first["mean"], -20.0, places=12)
        self.assertEqual(first["n"], 3)
        self.assertAlmostEqual(first["stderr"], 10.0 / math.sqrt(3), places=12)
        self.assertAlmostEqual(first["ci95"], CI_Z * 10.0 / math.sqrt(3), places=12)
        method = summary.per_method.iloc[0]
        self.assertAlmostEqual(method["mean"], -20.5, places=12)
        self.assertEqual(len(summary.per_target), 2)
        with self.assertRaises(NoDataError):
            summarize_results([])


class SeedingTests(SimpleTestCase):
    def test_derivation_is_stable(self):
        a = derive_seed(0, 1, "ours-gp", "nav2d@0:10").generate_state(4)
        b = derive_seed(0, 1, "ours-gp", "nav2d@0:10").generate_state(4)
        np.testing.assert_array_equal(a, b)
        other = derive_seed(0, 1, "pr-drl", "nav2d@0:10").generate_state(4)
        self.assertFalse(np.array_equal(a, other))

    def test_streams(self):
        self.assertEqual(method_rng(3, 0, "ours-gp", "t").random(), method_rng(3, 0, "ours-gp", "t").random())
        self.assertNotEqual(env_rng(3, 0, "t").random(), env_rng(3, 1, "t").random())


class SourceFittingTests(SimpleTestCase):
    def test_same_seed_same_files(self):
        config = small_nav_config()
        with tempfile.TemporaryDirectory() as tmp:
            first = fit_sources(config, Path(tmp) / "a", samples=20)
            second = fit_sources(config, Path(tmp) / "b", samples=20)
            self.assertEqual(first.read_bytes(), second.read_bytes())
            manifest = json.loads(first.read_text())
            self.assertEqual(len(manifest["entries"]), 4)
            for entry in manifest["entries"]:
                self.assertEqual(entry["n_samples"], 20)
                relative = entry["model_files"]["gp"]
                self.assertEqual((first.parent / relative).read_bytes(), (second.parent / relative).read_bytes())

    def test_sample_count(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValueError):
                fit_sources(small_nav_config(), tmp, samples=0)


class ExperimentRunTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.config = small_nav_config()
        cls.library_dir = Path(cls.tmp.name) / "library"
        fit_sources(cls.config, cls.library_dir)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_results_are_reproducible(self):
        out = Path(self.tmp.name)
        first = run_experiment(self.config, self.library_dir, out / "run-a", workers=1, timing=False)
        second = run_experiment(self.config, self.library_dir, out / "run-b", workers=1, timing=False)
        self.assertEqual((out / "run-a" / RESULTS_NAME).read_bytes(), (out / "run-b" / RESULTS_NAME).read_bytes())
        self.assertEqual(len(first.rows), 3 * 2)
        self.assertEqual([r.method for r in first.rows], sorted(r.method for r in first.rows))
        self.assertTrue(all(r.wall_time_ms == 0.0 for r in second.rows))
        self.assertTrue(first.paths["events"].is_file())
        self.assertTrue(first.paths["summary_per_method"].is_file())

    def test_missing_library(self):
        with self.assertRaises(ConfigError):
            run_experiment(self.config, Path(self.tmp.name) / "nowhere", Path(self.tmp.name) / "out", timing=False)

    def test_plots(self):
        out = Path(self.tmp.name) / "plot-run"
        run_experiment(self.config, self.library_dir, out, workers=1, timing=False)
        rows = read_results_csv(out / RESULTS_NAME)
        rows += [ResultRow(0, "ours-gp", "cartpole@4.5", e, 50.0 + e) for e in range(2)]
        mixed = write_results_csv(rows, out / "mixed.csv")
        paths = emit_plots(mixed, out / "plots")
        self.assertEqual([p.name for p in paths], ["cartpole.svg", "nav2d.svg"])
        again = emit_plots(mixed, out / "plots-again")
        for a, b in zip(paths, again):
            self.assertTrue(a.read_text().lstrip().startswith("<?xml"))
            self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_ablation(self):
        out = Path(self.tmp.name) / "ablation"
        summary = run_ablation(self.config, [10, 20], out, workers=1, timing=False)
        self.assertEqual(list(summary["sample_size"]), [10, 20])
        self.assertEqual(set(summary["method"]), {"ours-gp"})
        frame = pd.read_csv(out / ABLATION_NAME)
        self.assertEqual(frame.columns[0], "sample_size")
        self.assertEqual(len(frame), 2 * 2)
        self.assertTrue((out / ABLATION_SUMMARY_NAME).is_file())
        with self.assertRaises(ConfigError):
            run_ablation(self.config, [], out)


class ContinualRunTests(SimpleTestCase):
    def test_continual_outputs(self):
        config = experiment_config_from_dict({
            "domain": "nav2d",
            "methods": ["ours-gp"],
            "source_goals": [[10, 10], [8, -8]],
            "target_goals": [[-8, 0]],
            "episodes": 4,
            "trials": 1,
            "samples": 100,
            "learning": {"learner": "oracle-scripted", "samples": 100},
            "return_table": {"episodes": 1},
        })
        with tempfile.TemporaryDirectory() as tmp:
            fit_sources(config, Path(tmp) / "library")
            paths = run_continual(config, Path(tmp) / "library", Path(tmp) / "out", workers=1, timing=False)
            self.assertEqual(paths["results"].name, CONTINUAL_NAME)
            rows = read_results_csv(paths["results"])
            self.assertEqual(len(rows), 2 * 4)
            self.assertEqual({r.method for r in rows}, {"ours-gp", "bpr-return"})
            growth = pd.read_csv(Path(tmp) / "out" / GROWTH_NAME)
            self.assertEqual(list(growth.columns), GROWTH_COLUMNS)
            self.assertEqual(len(growth), 1)
            self.assertIn(int(growth["library_size"][0]), (2, 3))


class MethodComparisonTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        config = experiment_config_from_dict({
            "domain": "nav2d",
            "methods": ["ours-gp", "bpr-return", "pr-drl", "ops-drl"],
            "episodes": 10,
            "trials": 2,
            "samples": 200,
            "return_table": {"episodes": 1},
        })
        library_dir = Path(cls.tmp.name) / "library"
        fit_sources(config, library_dir)
        output = run_experiment(config, library_dir, Path(cls.tmp.name) / "run", workers=1, timing=False)
        cls.frame = rows_to_frame(output.rows)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_first_episode_beats_return_signal(self):
        first = self.frame[self.frame["episode"] == 0].groupby("method")["return"].mean()
        self.assertGreater(first["ours-gp"], first["bpr-return"])

    def test_ten_episode_ordering(self):
        means = self.frame.groupby("method")["return"].mean()
        self.assertGreater(means["ours-gp"], means["bpr-return"])
        self.assertGreater(means["bpr-return"], means["pr-drl"])
        self.assertGreater(means["bpr-return"], means["ops-drl"])


class SampleSizeAblationTests(SimpleTestCase):
    def test_more_samples_narrow_or_keep_the_interval(self):
        config = experiment_config_from_dict({
            "domain": "nav2d",
            "methods": ["ours-gp"],
            "target_goals": [[10, 9.6], [-7, -7], [8, -8]],
            "episodes": 2,
            "trials": 4,
            "return_table": {"episodes": 1},
        })
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "ablation"
            summary = run_ablation(config, [100, 200, 2000], out, workers=1, timing=False).set_index("sample_size")
            self.assertEqual(list(summary["n"]), [4, 4, 4])
            self.assertGreaterEqual(summary.loc[100, "ci95"] + 1e-9, summary.loc[2000, "ci95"])
            gap = abs(summary.loc[200, "mean"] - summary.loc[2000, "mean"])
            self.assertLessEqual(gap, max(2.0, summary.loc[200, "ci95"] + summary.loc[2000, "ci95"]))
            first = (out / "libraries" / "size-100" / "trial-0" / "models").iterdir()
            second = out / "libraries" / "size-100" / "trial-1" / "models"
            differs = [p.read_bytes() != (second / p.name).read_bytes() for p in first if p.is_file()]
            self.assertTrue(any(differs))


class CartPoleComparisonTests(SimpleTestCase):
    def test_state_signal_keeps_up_with_return_signal(self):
        config = experiment_config_from_dict({
            "domain": "cartpole",
            "methods": ["ours-gp", "bpr-return"],
            "episodes": 10,
            "trials": 2,
            "return_table": {"episodes": 1},
        })
        with tempfile.TemporaryDirectory() as tmp:
            fit_sources(config, Path(tmp) / "library")
            output = run_experiment(config, Path(tmp) / "library", Path(tmp) / "run", workers=1, timing=False)
        per_method = summarize_results(output.rows).per_method.set_index("method")
        self.assertGreaterEqual(per_method.loc["ours-gp", "mean"], per_method.loc["bpr-return", "mean"] - 1e-9)
        self.assertLessEqual(per_method.loc["ours-gp", "stderr"], per_method.loc["bpr-return", "stderr"] + 1e-9)


class ContinualGrowthTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.config = experiment_config_from_dict({
            "domain": "nav2d",
            "methods": ["ours-gp"],
            "target_suite": "novel",
            "episodes": 6,
            "trials": 1,
            "samples": 200,
            "learning": {"learner": "cem", "samples": 200},
            "return_table": {"episodes": 1},
        })
        library_dir = Path(cls.tmp.name) / "library"
        fit_sources(cls.config, library_dir)
        cls.paths = run_continual(cls.config, library_dir, Path(cls.tmp.name) / "out", workers=1, timing=False)
        cls.frame = read_results_frame(cls.paths["results"])
        cls.growth = pd.read_csv(cls.paths["growth"])
        with cls.paths["events"].open(encoding="utf-8") as handle:
            cls.events = [json.loads(line) for line in handle if line.strip()]

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_every_novel_target_grows_the_library(self):
        k = self.config.reuse.novelty.k
        self.assertEqual(len(self.growth), 4)
        self.assertTrue(self.growth["expanded"].all())
        self.assertTrue(((self.growth["detected_at"] >= 0) & (self.growth["detected_at"] <= k + 1)).all())
        self.assertEqual(list(self.growth["library_size"]), [5, 6, 7, 8])

    def test_belief_moves_to_the_new_entry(self):
        for _, row in self.growth.iterrows():
            steps = [
                e for e in self.events
                if e["event"] == STEP and e["method"] == "ours-gp" and e["target_task"] == row["target_task"]
                and e["episode"] == row["detected_at"] + 1
            ]
            self.assertTrue(steps)
            self.assertTrue(any(e["belief"][-1] > 0.9 for e in steps[:20]), row["target_task"])

    def test_final_returns_beat_frozen_library(self):
        final = self.frame[self.frame["episode"] == self.config.episodes - 1].groupby("method")["return"].mean()
        self.assertLessEqual(5.0 * abs(final["ours-gp"]), abs(final["bpr-return"]))


class CommandTests(SimpleTestCase):
    def test_parse_sizes(self):
        self.assertEqual(parse_sizes("100, 200,,500"), [100, 200, 500])
        with self.assertRaises(ConfigError):
            parse_sizes("a,b")

    def test_config_error_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command("run_experiment", config=str(Path(tmp) / "absent.toml"), library=tmp, out=tmp)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_runtime_error_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command("plot", results=str(Path(tmp) / "absent.csv"), out=tmp)
        self.assertEqual(ctx.exception.returncode, 2)
