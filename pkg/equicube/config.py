"""
Run configuration, supplied either as a dict or as a JSON file.
"""

import json
import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from equicube.exceptions import FormatError

logger = logging.getLogger(__name__)

THREADS_ENV = "EQUICUBE_THREADS"
CHECK_INVARIANTS_ENV = "EQUICUBE_CHECK_INVARIANTS"


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def default_threads() -> int:
    """Worker count from EQUICUBE_THREADS, 1 when unset or unusable."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        logger.warning(f"Ignoring {THREADS_ENV}={value!r}, not an integer")
        return 1
    return max(1, threads)


def invariant_checks_enabled() -> bool:
    """True when EQUICUBE_CHECK_INVARIANTS is set; the test suite sets it."""
    return _env_flag(CHECK_INVARIANTS_ENV)


@dataclass
class RunConfig:
    threads: int = field(default_factory=default_threads)
    long: bool = False
    checkpoint_dir: Optional[Path] = None
    output_dir: Path = Path("output")
    dataset: Optional[Path] = None
    check_invariants: bool = field(default_factory=invariant_checks_enabled)

    def __post_init__(self):
        if self.threads < 1:
            raise FormatError(f"threads must be at least 1, got {self.threads}", operation="config")
        for name in ("checkpoint_dir", "dataset"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, Path):
                setattr(self, name, Path(value))
        if not isinstance(self.output_dir, Path):
            self.output_dir = Path(self.output_dir)

    @classmethod
    def from_params(cls, params: dict) -> "RunConfig":
        """Build a config from a dict, e.g.

            {
                "threads": 4,
                "long": false,
                "checkpoint_dir": "checkpoints",
                "output_dir": "output",
                "dataset": "data/resilient-10.txt",
                "check_invariants": false
            }

        Args:
            params (dict): any subset of the keys above

        Raises:
            FormatError: on unknown keys
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise FormatError(f"Unknown config keys: {', '.join(unknown)}", operation="config")
        return cls(**params)

    @classmethod
    def read_config_file(cls, filepath: Path) -> "RunConfig":
        """Read a JSON run config file, same content as `from_params`.

        Args:
            filepath (Path): path to the config file
        """
        filepath = Path(filepath)
        if not filepath.exists():
            raise FormatError(f"Cannot find run config file: {filepath!s}", operation="config")

        with open(filepath) as f:
            try:
                params = json.load(f)
            except json.JSONDecodeError as excpt:
                raise FormatError(f"Run config file {filepath!s} is not valid JSON: {excpt}", operation="config") from excpt
        return cls.from_params(params)
