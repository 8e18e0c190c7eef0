"""
Fit the source library: scripted policies, transition samples and dynamics models.
Run: python manage.py fit_sources --config experiments/nav2d_gp.toml --out runs/nav2d/library
"""

from app.harness.config import load_experiment_config
from app.harness.management.base import BprxCommand
from app.harness.sources import fit_sources


class Command(BprxCommand):
    help = 'Fit one dynamics model per source task and write the library directory'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment TOML file')
        parser.add_argument('--out', required=True, help='Library directory to write')
        parser.add_argument('--seed', type=int, default=None, help='Override the experiment seed')
        parser.add_argument('--samples', type=int, default=None, help='Transition samples per source task')

    def run(self, **options):
        config = load_experiment_config(options['config'])
        self.stdout.write(f"Fitting {len(config.source_tasks)} source tasks ({config.domain.value})...")
        manifest = fit_sources(config, options['out'], samples=options['samples'], seed=options['seed'])
        self.stdout.write(self.style.SUCCESS(f'Library written: {manifest}'))
