"""
Run every trial x method x target of an experiment against a fitted library.
Run: python manage.py run_experiment --config experiments/nav2d_gp.toml --library runs/nav2d/library --out runs/nav2d
"""

from app.harness.config import load_experiment_config
from app.harness.management.base import BprxCommand
from app.harness.runner import run_experiment


class Command(BprxCommand):
    help = 'Run a policy-reuse experiment and write results.csv, events.jsonl and summaries'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment TOML file')
        parser.add_argument('--library', required=True, help='Library directory from fit_sources')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--seed', type=int, default=None, help='Override the experiment seed')

    def run(self, **options):
        config = load_experiment_config(options['config'])
        output = run_experiment(config, options['library'], options['out'], seed=options['seed'])
        self.stdout.write(self.style.SUCCESS(f"{len(output.rows)} rows written to {output.paths['results']}"))
