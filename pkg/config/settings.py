"""
Django settings for the bprx project.

bprx has no web surface: Django provides the settings layer, the app
registry, management commands (the CLI) and the test runner.
"""
import os
import logging

from pathlib import Path

from dotenv import load_dotenv
load_dotenv()

logger = logging.getLogger(__name__)

BASE_DIR = Path(__file__).resolve().parent.parent

# Nothing is signed or served; the key only satisfies Django's startup checks.
SECRET_KEY = os.environ.get('SECRET_KEY', 'bprx-local-only-not-secret')

DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []

# ─────────────────────────────────────────
# App registry (mirrors the toolkit layers)
# ─────────────────────────────────────────
DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

TOOLKIT_APPS = [
    'app.core',                      # belief / return arithmetic + domain types
    'app.dynamics',                  # GP + MLP transition models, likelihoods
    'app.environments',              # nav2d + cart-pole simulators, task suites
    'app.policies',                  # scripted controllers + CEM learner
    'app.engine',                    # reuse phase, novelty, learning, expansion
    'app.baselines',                 # return-signal BPR, PR-DRL, OPS-DRL
    'app.harness',                   # experiments, CSV, plots, CLI commands
]

INSTALLED_APPS = (
    DJANGO_APPS
    + THIRD_PARTY_APPS
    + TOOLKIT_APPS
)

# Only Django's own bookkeeping would ever touch this; the toolkit stores
# everything as files.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'bprx.sqlite3',
    }
}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ─────────────────────────────────────────
# Logging
# ─────────────────────────────────────────
BPRX_LOG_LEVEL = os.environ.get('BPRX_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s [%(name)s] %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'app': {'handlers': ['console'], 'level': BPRX_LOG_LEVEL, 'propagate': False},
        'bprx': {'handlers': ['console'], 'level': BPRX_LOG_LEVEL, 'propagate': False},
    },
}

# ─────────────────────────────────────────
# Runtime knobs (environment)
# ─────────────────────────────────────────
BPRX_WORKERS = int(os.environ.get('BPRX_WORKERS', '1'))
BPRX_OUTPUT_DIR = Path(os.environ.get('BPRX_OUTPUT_DIR', BASE_DIR / 'runs'))
# When false every wall_time_ms is written as 0 so result files are byte-reproducible
BPRX_TIMING = os.environ.get('BPRX_TIMING', 'true').lower() == 'true'

if BPRX_WORKERS < 1:
    logger.warning(f"BPRX_WORKERS={BPRX_WORKERS} is not a valid pool size, falling back to 1")
    BPRX_WORKERS = 1

# ─────────────────────────────────────────
# Hyperparameter defaults
# Experiment files override any of these per run.
# ─────────────────────────────────────────
BPRX = {
    "kernel": {
        "delta": 1.0,
        "l": 2.0,
    },
    "gp": {
        "noise": 1e-4,          # measurement noise inside the posterior
        "jitter": 1e-6,
        "max_jitter": 1e-2,
        "cap": 2000,
        "normalize_y": True,    # fit standardized targets
    },
    "likelihood": {
        "eps2_gp": 0.1,         # widening added outside the posterior
        "eps2_nn": 0.1,
    },
    "mlp": {
        "hidden": [64, 64],
        "activation": "tanh",
        "learning_rate": 1e-3,
        "momentum": 0.9,
        "epochs": 200,
        "batch_size": 64,
    },
    "signal": {
        "nav2d": "SAR",
        "cartpole": "SAS",
        "batch_size": 1,
    },
    "reuse": {
        "selection": "greedy",
        "gamma": 1.0,
    },
    "novelty": {
        "k": 3,
        "thresholds": {
            "nav2d": -500.0,
            "cartpole": 30.0,
        },
    },
    "cem": {
        "population": 32,
        "elite_fraction": 0.25,
        "iterations": 30,
        "init_std": 1.0,
        "min_std": 1e-3,
        "extra_noise": 0.5,     # decays to 0 over the run
    },
    "learning": {
        "samples": 200,
    },
    "experiment": {
        "episodes": 10,
        "trials": 10,
        "seed": 0,
        "samples": 200,
        "ablation_sizes": [100, 200, 500, 1000, 2000],
    },
    "return_table": {
        "episodes": 100,
    },
    "pr_drl": {
        "nu": 0.0,
        "delta_nu": 0.05,
    },
    "nav2d": {
        "control_cost": 0.1,
        "goal_radius": 0.5,
        "max_steps": 100,
    },
    "cartpole": {
        "gravity": 9.8,
        "masscart": 1.0,
        "masspole": 0.1,
        "length": 0.5,
        "force_mag": 10.0,
        "tau": 0.02,
        "reward_angle_deg": 12.0,
        "theta_threshold_deg": 12.0,
        "x_threshold": 2.4,
        "max_steps": 100,
        "reset_noise": 0.0,      # >0 draws start states uniformly from [-r, r]^4
        # Bang-bang feedback on (x, x_dot, theta, theta_dot), frozen once tuned.
        "controller_gains": [1.0, 1.5, 18.0, 3.0],
        "controller_bias_per_newton": -0.02,
    },
}
