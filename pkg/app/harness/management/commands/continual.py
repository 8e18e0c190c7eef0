"""
Continual run on targets far from the sources, with library growth.
Run: python manage.py continual --config experiments/nav2d_continual.toml --library runs/nav2d/library --out runs/continual
"""

from app.harness.config import load_experiment_config
from app.harness.continual import run_continual
from app.harness.management.base import BprxCommand


class Command(BprxCommand):
    help = 'Detect novel targets, learn new policies and expand the library online'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment TOML file')
        parser.add_argument('--library', required=True, help='Library directory from fit_sources')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--seed', type=int, default=None, help='Override the experiment seed')

    def run(self, **options):
        config = load_experiment_config(options['config'])
        paths = run_continual(config, options['library'], options['out'], seed=options['seed'])
        self.stdout.write(self.style.SUCCESS(f"Results: {paths['results']}, growth log: {paths['growth']}"))
