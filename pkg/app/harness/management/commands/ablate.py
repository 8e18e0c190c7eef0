"""
Sample-size ablation of the model-based methods.
Run: python manage.py ablate --config experiments/nav2d_gp.toml --sizes 100,200,500,1000,2000 --out runs/ablation
"""

from app.harness.ablation import run_ablation
from app.harness.config import load_experiment_config
from app.harness.management.base import BprxCommand, parse_sizes


class Command(BprxCommand):
    help = 'Refit the library at each sample size and rerun the model-based methods'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment TOML file')
        parser.add_argument('--sizes', default=None, help='Comma-separated sample sizes (default: from config)')
        parser.add_argument('--out', required=True, help='Output directory')

    def run(self, **options):
        config = load_experiment_config(options['config'])
        sizes = parse_sizes(options['sizes']) if options['sizes'] is not None else None
        summary = run_ablation(config, sizes, options['out'])
        for _, row in summary.iterrows():
            self.stdout.write(
                f"  n={int(row['sample_size'])} {row['method']}: {row['mean']:.2f} ± {row['ci95']:.2f}"
            )
        self.stdout.write(self.style.SUCCESS(f"Ablation written to {options['out']}"))
