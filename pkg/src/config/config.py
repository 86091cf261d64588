# src/config/config.py
import os

# --- Configuration ---
# Environment values are read at import time; the CLI calls load_dotenv() first.

DEFAULT_N = 7
DEFAULT_S = 2
DEFAULT_SEED = 0
DEFAULT_BACKEND = "frame"
DEFAULT_LEVELS = 2

STATEVECTOR_CAPACITY = int(os.getenv("MPQC_SV_CAPACITY", "22"))
SWEEP_WORKERS = int(os.getenv("MPQC_WORKERS", "5"))
REPORT_DIR = os.getenv("MPQC_REPORT_DIR", "reports")
LOG_DIR = os.getenv("MPQC_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("MPQC_LOG_LEVEL", "INFO").upper()

REPORT_SCHEMA_VERSION = "1.0"

# Numerical tolerances shared by backends and comparators.
NORM_TOLERANCE = 1e-12
FIDELITY_TOLERANCE = 1e-10


def get_report_file(name: str, digest: str, suffix: str = "json") -> str:
    """
    Constructs the path for a run report file.

    Args:
        name (str): Scenario name.
        digest (str): Content digest of the run configuration.
        suffix (str): File extension.

    Returns:
        str: The full path to the report file.
    """
    report_dir = os.path.join(REPORT_DIR, name)
    os.makedirs(report_dir, exist_ok=True)
    return os.path.join(report_dir, f"{digest[:16]}.{suffix}")


def get_template_dir() -> str:
    """Location of the jinja2 templates shipped at the repository root."""
    return os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "templates")
