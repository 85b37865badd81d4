"""Global configuration for aniflow.

This module loads environment variables from a .env file and provides
centralized numerical and runtime defaults for the whole package.
"""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
# Look for .env in the project root directory
env_path = Path(__file__).parent / ".env"
load_dotenv(dotenv_path=env_path)


# ============================================================================
# Newton Solver Configuration
# ============================================================================

# Max-norm tolerance on the Newton increment; node and mu blocks are each relative to max(1, block max-norm)
NEWTON_TOLERANCE: float = float(os.getenv("ANIFLOW_NEWTON_TOLERANCE", "1e-12"))

# Guard on the residual of the accepted iterate, relative to each row's term magnitudes
RESIDUAL_TOLERANCE: float = float(os.getenv("ANIFLOW_RESIDUAL_TOLERANCE", "1e-10"))

NEWTON_MAX_ITERATIONS: int = int(os.getenv("ANIFLOW_NEWTON_MAX_ITERATIONS", "20"))

# Start each step from the linear extrapolation of the last two steps
NEWTON_PREDICTOR: bool = os.getenv("ANIFLOW_NEWTON_PREDICTOR", "true").lower() in ("1", "true", "yes")


# ============================================================================
# Stabilizing Function Configuration
# ============================================================================

# Number of uniformly spaced normals at which k0 is tabulated
K0_POINTS: int = int(os.getenv("ANIFLOW_K0_POINTS", "20"))

# Resolution of the inner n-hat sweep used for the supremum in k0
K0_GRID: int = int(os.getenv("ANIFLOW_K0_GRID", "1024"))

# k0 samples per table cell used to lift the table above k0 between nodes (0: nodes only)
K0_SUBSAMPLES: int = int(os.getenv("ANIFLOW_K0_SUBSAMPLES", "8"))

# Multiplier applied to every tabulated k0 value
K0_SAFETY: float = float(os.getenv("ANIFLOW_K0_SAFETY", "1.0"))

# Angular resolution for checking 3*gamma(n) > gamma(-n)
CONDITION_GRID: int = int(os.getenv("ANIFLOW_CONDITION_GRID", "4096"))


# ============================================================================
# Run Configuration
# ============================================================================

SNAPSHOT_EVERY: int = int(os.getenv("ANIFLOW_SNAPSHOT_EVERY", "100"))

# Cap on independent runs executed concurrently (convergence studies)
THREADS: int = max(1, int(os.getenv("ANIFLOW_THREADS", "4")))

LOG_LEVEL: str = os.getenv("ANIFLOW_LOG_LEVEL", "INFO").upper()

# Optional default output root used when a config omits output_dir
OUTPUT_ROOT: Optional[str] = os.getenv("ANIFLOW_OUTPUT_ROOT")


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once for command-line use."""
    resolved = (level or LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, resolved, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
