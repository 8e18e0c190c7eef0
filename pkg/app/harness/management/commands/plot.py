"""
Plot mean return per episode with 95% confidence bands.
Run: python manage.py plot --results runs/nav2d/results.csv --out runs/nav2d/plots
"""

from app.harness.management.base import BprxCommand
from app.harness.plots import emit_plots


class Command(BprxCommand):
    help = 'Write one SVG per domain from a results CSV'

    def add_arguments(self, parser):
        parser.add_argument('--results', required=True, help='results.csv from run_experiment or continual')
        parser.add_argument('--out', required=True, help='Directory for the SVG files')

    def run(self, **options):
        for path in emit_plots(options['results'], options['out']):
            self.stdout.write(f'  {path}')
        self.stdout.write(self.style.SUCCESS('Plots written'))
