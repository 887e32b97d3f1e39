#!/usr/bin/env python3
"""
Configuration module for fastsketch.

Contains all constants, enumerations and the user settings dataclass,
following strict typing and PEP standards.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass
from enum import Enum, IntEnum
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as _metadata_version
from pathlib import Path
from typing import Any

from fastsketch.i18n import _

logger = logging.getLogger(__name__)

# =============================================================================
# Application Constants
# =============================================================================

APP_NAME = "fastsketch"
try:
    APP_VERSION = _metadata_version("fastsketch")
except PackageNotFoundError:
    APP_VERSION = "0.1.0"
APP_DESCRIPTION = _("Fast similarity sketches, MinHash baselines and LSH search")

LOG_LEVEL_ENV = "FASTSKETCH_LOG_LEVEL"

# =============================================================================
# Hashing Configuration
# =============================================================================

MASK64 = (1 << 64) - 1

# Keys are (round: 16 bits, element: 64 bits) split into 8-bit characters
CHAR_BITS = 8
ALPHABET_SIZE = 1 << CHAR_BITS
ELEMENT_CHARS = 8
ROUND_CHARS = 2
INPUT_CHARS = ELEMENT_CHARS + ROUND_CHARS
DERIVED_CHARS = 4
DERIVED_MASK = (1 << (CHAR_BITS * DERIVED_CHARS)) - 1
ROUND_CODE_LIMIT = 1 << (CHAR_BITS * ROUND_CHARS)

# Reserved round codes, never used by sketch rounds
OPH_CODE = ROUND_CODE_LIMIT - 2
PROBE_CODE = ROUND_CODE_LIMIT - 1

# Largest t such that every sketch round 0..2t-1 stays below the reserved codes
MAX_T = (OPH_CODE - 1) // 2

# Batches at least this large are hashed with numpy
VECTORIZE_THRESHOLD = 64

# Fixed seed used to turn string tokens into element ids
TOKEN_SEED = 0x5EED_70C3_A11C_E5E7

# =============================================================================
# Binary Formats
# =============================================================================

SKETCH_MAGIC = b"FSK1"
BASELINE_MAGIC = b"FSKB"
INDEX_MAGIC = b"FSLI"
INDEX_VERSION = 1
EMPTY_TAG = 0xFFFFFFFF

# =============================================================================
# Feature Vectors
# =============================================================================

BBIT_MIN = 1
BBIT_MAX = 16
BBIT_DEFAULT = 8

# =============================================================================
# LSH Configuration
# =============================================================================

LSH_C = 32
LSH_R = 16
T_SEP_FLOOR = 64
T_SEP_PER_BIT = 16

# Sub-seed streams derived from one index seed
STREAM_SKETCH = 0
STREAM_SEPARATION = 1
STREAM_SIGNATURES = 2
STREAM_QUERY = 3

# Runtime law constant for hash evaluation counts
HASH_EVAL_CONSTANT = 8

# =============================================================================
# CLI Defaults and Limits
# =============================================================================

T_DEFAULT = 16
TRIALS_DEFAULT = 2000
TRIALS_MAX = 10_000_000
SEED_DEFAULT = 0
J1_DEFAULT = 0.5
J2_DEFAULT = 0.25
JOBS_DEFAULT = 1
JOBS_MAX = 256

BENCH_SIZES_DEFAULT = [1, 10, 1_000, 100_000]
BENCH_TS_DEFAULT = [16, 256]
BENCH_SEEDS_DEFAULT = 10

CONCENTRATION_DELTAS_DEFAULT = [0.5, 1.0]
CONCENTRATION_MAX_UNION = 1_000_000

# User config paths
USER_CONFIG_DIR = Path.home() / ".config" / "fastsketch"
USER_SETTINGS_FILE = Path(
    os.environ.get("FASTSKETCH_CONFIG", str(USER_CONFIG_DIR / "settings.json"))
)

# =============================================================================
# Enumerations
# =============================================================================


class OutputFormat(Enum):
    """Result file formats."""

    CSV = "csv"
    JSON = "json"


class Method(Enum):
    """Sketching methods compared by the experiments."""

    FAST = "fast"
    MINHASH = "minhash"
    OPH_ROTATION = "oph-rotation"
    OPH_OPTIMAL = "oph-optimal"


METHOD_NAMES: dict[Method, str] = {
    Method.FAST: _("Fast similarity sketch"),
    Method.MINHASH: _("t x MinHash"),
    Method.OPH_ROTATION: _("OPH + rotation densification"),
    Method.OPH_OPTIMAL: _("OPH + optimal densification"),
}


class ExitCode(IntEnum):
    """Process exit codes."""

    OK = 0
    NOT_FOUND = 1
    USAGE = 2
    DATA = 3


# =============================================================================
# Dataclasses for Configuration
# =============================================================================


def _clamp(value: Any, low: int, high: int, default: int) -> int:
    try:
        number = int(value)
    except (TypeError, ValueError):
        return default
    return max(low, min(high, number))


@dataclass
class CliSettings:
    """User defaults applied before command-line flags."""

    t: int = T_DEFAULT
    seed: int = SEED_DEFAULT
    trials: int = TRIALS_DEFAULT
    j1: float = J1_DEFAULT
    j2: float = J2_DEFAULT
    b: int = BBIT_DEFAULT
    output_format: OutputFormat = OutputFormat.CSV
    jobs: int = JOBS_DEFAULT

    def to_dict(self) -> dict[str, Any]:
        """Convert settings to dictionary for JSON serialization."""
        data = asdict(self)
        data["output_format"] = self.output_format.value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CliSettings:
        """Create settings from dictionary, clamping out-of-range values."""
        settings = cls()
        settings.t = _clamp(data.get("t", T_DEFAULT), 1, MAX_T, T_DEFAULT)
        settings.seed = _clamp(data.get("seed", SEED_DEFAULT), 0, MASK64, SEED_DEFAULT)
        settings.trials = _clamp(
            data.get("trials", TRIALS_DEFAULT), 0, TRIALS_MAX, TRIALS_DEFAULT
        )
        settings.b = _clamp(data.get("b", BBIT_DEFAULT), BBIT_MIN, BBIT_MAX, BBIT_DEFAULT)
        settings.jobs = _clamp(data.get("jobs", JOBS_DEFAULT), 1, JOBS_MAX, JOBS_DEFAULT)

        j1 = data.get("j1", J1_DEFAULT)
        j2 = data.get("j2", J2_DEFAULT)
        if isinstance(j1, (int, float)) and isinstance(j2, (int, float)) and 0 < j2 < j1 < 1:
            settings.j1 = float(j1)
            settings.j2 = float(j2)
        else:
            logger.warning("Ignoring invalid j1/j2 in settings: %r, %r", j1, j2)

        try:
            settings.output_format = OutputFormat(data.get("output_format", "csv"))
        except ValueError:
            settings.output_format = OutputFormat.CSV
        return settings


# =============================================================================
# Settings Management Functions
# =============================================================================


def load_settings(path: Path = USER_SETTINGS_FILE) -> CliSettings:
    """Load CLI defaults from the user settings file."""
    if not path.exists():
        logger.debug("No settings file found, using defaults")
        return CliSettings()

    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        logger.error("Error parsing settings file: %s", e)
        return CliSettings()
    except OSError as e:
        logger.error("Error reading settings file: %s", e)
        return CliSettings()

    if not isinstance(data, dict):
        logger.error("Settings file %s does not hold a JSON object", path)
        return CliSettings()
    return CliSettings.from_dict(data)


def save_settings(settings: CliSettings, path: Path = USER_SETTINGS_FILE) -> bool:
    """Save CLI defaults to the user settings file."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(settings.to_dict(), f, indent=4)
        logger.debug("Settings saved to %s", path)
        return True
    except OSError as e:
        logger.error("Error saving settings: %s", e)
        return False
