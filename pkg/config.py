"""
Configuration module for the selection toolkit.
"""
import os
import logging

logger = logging.getLogger(__name__)

# Try to import dotenv, but handle the case where it's not installed
try:
    from dotenv import load_dotenv

    # Check for .env.selection file first, then fall back to .env
    if os.path.exists('.env.selection'):
        logger.info("Loading environment variables from .env.selection")
        load_dotenv('.env.selection')
    else:
        load_dotenv()

except ImportError:
    logger.warning("python-dotenv package not installed. Cannot load .env files.")
    logger.info("Using environment variables directly.")

# Series evaluation
SERIES_TOL = float(os.getenv("SELECTION_TOL", "1e-12"))
SERIES_K_MAX = int(os.getenv("SELECTION_K_MAX", "200"))

# Monte Carlo
DEFAULT_TRIALS = int(os.getenv("SELECTION_TRIALS", "1000000"))
DEFAULT_SEED = int(os.getenv("SELECTION_SEED", "42"))
MC_BLOCK_SIZE = int(os.getenv("SELECTION_BLOCK_SIZE", "4096"))  # Trials per RNG block
MC_WORKERS = int(os.getenv("SELECTION_WORKERS", "1"))  # >1 dispatches blocks to a process pool

# Contention-load optimization
DEFAULT_BRACKET = (
    float(os.getenv("SELECTION_BRACKET_LOW", "0.5")),
    float(os.getenv("SELECTION_BRACKET_HIGH", "2.0")),
)
DEFAULT_XTOL = float(os.getenv("SELECTION_XTOL", "1e-4"))

# Tangent point of the upper bound
DEFAULT_K0 = float(os.getenv("SELECTION_K0", "2.0"))

# Logging
LOG_LEVEL = os.getenv("SELECTION_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("SELECTION_LOG_FILE", "")  # Empty means console only
