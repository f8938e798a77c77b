import logging
import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

import pandas as pd

from src.data.export import export_table, format_table
from src.utils.env import get_data_dir, parse_bool_env, parse_int_env
from src.utils.errors import (
    ConfigurationError,
    ContractViolation,
    NetworkFormatError,
    ParseError,
    exit_status_for,
    handle_errors,
)
from src.utils.logging_helpers import LOGGER_NAME, TIMING_TAG, setup_logging, timed_step
from src.utils.utils import chunk_size, parallel_map, progress


def _square(x):
    return x * x


class TestErrors(unittest.TestCase):
    def test_exit_status(self):
        self.assertEqual(exit_status_for(ConfigurationError("bad")), 2)
        self.assertEqual(exit_status_for(FileNotFoundError("gone")), 2)
        self.assertEqual(exit_status_for(NetworkFormatError("bad")), 1)
        self.assertEqual(exit_status_for(ContractViolation("bad")), 1)

    def test_messages_carry_position(self):
        self.assertEqual(ConfigurationError("oops", 4).line, 4)
        self.assertIn("line 4", str(ConfigurationError("oops", 4)))
        self.assertIn("offset 12", str(ParseError("short", 12)))

    def test_handle_errors_maps_library_errors(self):
        @handle_errors(default_return=exit_status_for, log_error=False)
        def command():
            raise ConfigurationError("missing")

        self.assertEqual(command(), 2)

    def test_handle_errors_lets_bugs_through(self):
        @handle_errors(default_return=1, log_error=False)
        def command():
            raise KeyError("bug")

        with self.assertRaises(KeyError):
            command()

    def test_handle_errors_reraise(self):
        callback = MagicMock(side_effect=ContractViolation("bad"))
        wrapped = handle_errors(reraise=True, log_error=False)(callback)
        with self.assertRaises(ContractViolation):
            wrapped()
        callback.assert_called_once()


class TestEnv(unittest.TestCase):
    def test_int_and_bool_parsing(self):
        with patch.dict(os.environ, {"SNNSIM_WORKERS": "4", "SNNSIM_VERBOSE": "yes", "JUNK": "x"}):
            self.assertEqual(parse_int_env("SNNSIM_WORKERS"), 4)
            self.assertEqual(parse_int_env("JUNK", 7), 7)
            self.assertTrue(parse_bool_env("SNNSIM_VERBOSE"))
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(parse_int_env("SNNSIM_WORKERS"), 0)
            self.assertFalse(parse_bool_env("SNNSIM_VERBOSE"))

    def test_data_dir_override(self):
        with patch.dict(os.environ, {"SNNSIM_DATA_DIR": "/tmp/mnist-here"}):
            self.assertEqual(get_data_dir(), Path("/tmp/mnist-here").resolve())

    def test_data_dir_default(self):
        env = {k: v for k, v in os.environ.items() if k not in ("SNNSIM_DATA_DIR", "DATA_DIR")}
        with patch.dict(os.environ, env, clear=True):
            self.assertEqual(get_data_dir().name, "data")


class TestLoggingAndExport(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        logger = logging.getLogger(LOGGER_NAME)
        for handler in list(logger.handlers):
            if isinstance(handler, logging.FileHandler):
                handler.close()
                logger.removeHandler(handler)
        shutil.rmtree(self.test_dir)

    def test_daily_log_file_and_timing(self):
        logger = logging.getLogger(LOGGER_NAME)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
        setup_logging(verbose=True, log_dir=self.test_dir)
        with timed_step("unit"):
            pass
        for handler in logger.handlers:
            handler.flush()
        files = list(self.test_dir.glob("snnsim_*.log"))
        self.assertEqual(len(files), 1)
        self.assertIn(f"{TIMING_TAG} unit took", files[0].read_text(encoding="utf-8"))

    def test_export_by_extension(self):
        df = pd.DataFrame({"bits": [5, 6], "rate": [0.5, 1 / 3]})
        tsv = export_table(df, self.test_dir / "out")
        self.assertEqual(tsv.suffix, ".tsv")
        self.assertEqual(tsv.read_text(encoding="utf-8"), "bits\trate\n5\t0.5\n6\t0.333333\n")
        csv = export_table(df, self.test_dir / "nested" / "out.csv")
        self.assertEqual(csv.read_text(encoding="utf-8").splitlines()[0], "bits,rate")
        self.assertEqual(format_table(df.head(0)), "bits\trate\n")


class TestWorkers(unittest.TestCase):
    def test_chunk_size(self):
        self.assertEqual(chunk_size(100, 1), 100)
        self.assertEqual(chunk_size(0, 1), 1)
        self.assertEqual(chunk_size(1000, 4), 63)
        self.assertEqual(chunk_size(10, 4), 16)

    def test_parallel_map_keeps_order(self):
        self.assertEqual(parallel_map(_square, [3, 1, 2]), [9, 1, 4])
        self.assertEqual(parallel_map(_square, [3, 1, 2, 5], workers=2), [9, 1, 4, 25])

    def test_progress_disabled_returns_iterable(self):
        items = [1, 2]
        self.assertIs(progress(items, "x", enabled=False), items)


if __name__ == "__main__":
    unittest.main()
