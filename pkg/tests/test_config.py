"""
Unit tests for equicube/config
"""

import unittest
from pathlib import Path
from unittest import mock

import pytest
from testfixtures import LogCapture

from equicube.config import RunConfig, default_threads, invariant_checks_enabled
from equicube.exceptions import FormatError

DATA_DIR = Path(__file__).parent / "data"


class RunConfigTest(unittest.TestCase):
    def test_read_config_file(self):
        config = RunConfig.read_config_file(DATA_DIR / "run-config.json")
        assert config.threads == 2
        assert config.long is False
        assert config.checkpoint_dir == Path("tests/output/checkpoints")
        assert config.output_dir == Path("tests/output")
        assert config.dataset is None

    def test_missing_file(self):
        with pytest.raises(FormatError) as excpt:
            RunConfig.read_config_file(DATA_DIR / "no-such-config.json")
        assert "Cannot find run config file" in excpt.value.error

    def test_unknown_keys(self):
        with pytest.raises(FormatError) as excpt:
            RunConfig.from_params({"threads": 1, "gpu": True})
        assert excpt.value.error == "Unknown config keys: gpu"

    def test_threads_must_be_positive(self):
        with pytest.raises(FormatError):
            RunConfig(threads=0)

    @mock.patch.dict("os.environ", {"EQUICUBE_THREADS": "6"})
    def test_threads_from_environment(self):
        assert default_threads() == 6
        assert RunConfig().threads == 6
        assert RunConfig.from_params({"threads": 3}).threads == 3

    @mock.patch.dict("os.environ", {"EQUICUBE_THREADS": "many"})
    def test_bad_threads_environment(self):
        with LogCapture() as log:
            assert default_threads() == 1
        log.check(("equicube.config", "WARNING", "Ignoring EQUICUBE_THREADS='many', not an integer"))

    @mock.patch.dict("os.environ", {"EQUICUBE_CHECK_INVARIANTS": "0"})
    def test_invariant_flag(self):
        assert not invariant_checks_enabled()
        with mock.patch.dict("os.environ", {"EQUICUBE_CHECK_INVARIANTS": "yes"}):
            assert invariant_checks_enabled()
            assert RunConfig().check_invariants
