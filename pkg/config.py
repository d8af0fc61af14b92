"""Configuration of environment variables."""

import os

from dotenv import load_dotenv

load_dotenv()

VERSION = "0.1.0"

GROUPLAW_THREADS = int(os.getenv("GROUPLAW_THREADS", os.cpu_count() or 1))
GROUPLAW_SEED = int(os.getenv("GROUPLAW_SEED", 0))
GROUPLAW_OUT_DIR = os.getenv("GROUPLAW_OUT_DIR", "out")
GROUPLAW_LOG_LEVEL = os.getenv("GROUPLAW_LOG_LEVEL", "INFO")

# Hard limits for exhaustive work.
GROUPLAW_TUPLE_BUDGET = int(os.getenv("GROUPLAW_TUPLE_BUDGET", 10**8))
GROUPLAW_ELEMENT_BUDGET = int(os.getenv("GROUPLAW_ELEMENT_BUDGET", 2_000_000))

# Two-walk meeting runs are truncated at this many r^2 steps.
GROUPLAW_HORIZON_FACTOR = int(os.getenv("GROUPLAW_HORIZON_FACTOR", 50))

GROUPLAW_MANIFEST = os.getenv(
    "GROUPLAW_MANIFEST",
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "identities.txt"),
)

PORT = int(os.getenv("PORT", 5000))
