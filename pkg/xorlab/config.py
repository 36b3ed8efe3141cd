import os
import logging
from pathlib import Path

import numpy as np
import psutil

logger = logging.getLogger(__name__)

# Environment variable capping the worker processes used by batch experiments
THREADS_ENV_VAR = "XORLAB_THREADS"

# Default output location for every command
DEFAULT_OUT_DIR = Path("out")

# Training defaults (three configurations, Adam, MSE, 300 epochs, 100 trials)
DEFAULT_EPOCHS = 300
DEFAULT_CURVE_EPOCHS = 150
DEFAULT_TRIALS = 100
DEFAULT_LR = 0.05
# GCU on {0,1} leaves a few trials unsolved at DEFAULT_LR; every trial solves here
GCU_LR = 0.1
DEFAULT_SEED = 0
DEFAULT_WEIGHT_BOUND = 1.0

# Adam defaults
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8

# Learning-rate sweep grid
LR_GRID_MIN = 1e-4
LR_GRID_MAX = 2.0
LR_GRID_POINTS = 25

# Landscape / raster grids
DEFAULT_GRID_STEPS = 201
DEFAULT_QUADRANT_TRIALS = 50

# Benchmark
DEFAULT_BENCH_REPETITIONS = 20
MIN_BENCH_REPETITIONS = 5


def default_lr_grid(
    lr_min: float = LR_GRID_MIN, lr_max: float = LR_GRID_MAX, points: int = LR_GRID_POINTS
) -> list[float]:
    """Logarithmically spaced learning rates, strictly increasing"""
    return [float(lr) for lr in np.logspace(np.log10(lr_min), np.log10(lr_max), points)]


def resolve_threads(override: int | None = None) -> int:
    """
    Number of worker processes for batch experiments

    Args:
        override (int | None): Explicit value from the command line, wins over the env var

    Returns:
        int: At least 1
    """
    if override is not None:
        return max(1, int(override))

    raw = os.environ.get(THREADS_ENV_VAR)
    if raw:
        try:
            threads = int(raw)
            if threads >= 1:
                return threads
            logger.warning(f"Ignoring {THREADS_ENV_VAR}={raw!r}: must be >= 1")
        except ValueError:
            logger.warning(f"Ignoring {THREADS_ENV_VAR}={raw!r}: not an integer")

    return psutil.cpu_count(logical=True) or 1
