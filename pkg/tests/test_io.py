"""
Unit tests for equicube/io
"""

import json
import unittest
from pathlib import Path

import pytest
from testfixtures import LogCapture, TempDirectory

from equicube.exceptions import FormatError
from equicube.hypercube import Coloring, linear_coloring, vertex_weights
from equicube.io import Checkpoint, parse_matrix, read_coloring, read_fibers, write_coloring, write_fibers

DATA_DIR = Path(__file__).parent / "data"


class FiberFileTest(unittest.TestCase):
    def setUp(self):
        self.tmp = TempDirectory()
        self.dir = Path(self.tmp.path)

    def tearDown(self):
        self.tmp.cleanup()

    def test_read_with_comments(self):
        fibers = read_fibers(DATA_DIR / "q7-codes-3fold.txt")
        assert len(fibers) == 9
        assert all(t.n == 7 for t in fibers)
        assert all(t.size == 48 for t in fibers)

    def test_inferred_dimension(self):
        fibers = read_fibers(DATA_DIR / "resilient-q4.txt")
        assert [t.to_hex() for t in fibers] == ["6969", "6996"]

    def test_line_number_reported(self):
        filepath = self.dir / "bad.txt"
        filepath.write_text("# header\n6969\n\n69x9\n")
        with pytest.raises(FormatError) as excpt:
            read_fibers(filepath)
        assert "line 4" in excpt.value.error

    def test_length_not_a_cube(self):
        filepath = self.dir / "odd.txt"
        filepath.write_text("696\n")
        with pytest.raises(FormatError):
            read_fibers(filepath)

    def test_missing_file(self):
        with pytest.raises(FormatError) as excpt:
            read_fibers(self.dir / "nothing.txt")
        assert "Cannot find fiber file" in excpt.value.error

    def test_write_and_read(self):
        fibers = read_fibers(DATA_DIR / "q7-codes-2fold.txt")
        filepath = write_fibers(self.dir / "out" / "codes.txt", fibers, header="two-fold codes")
        assert filepath.read_text().startswith("# two-fold codes\n")
        assert read_fibers(filepath, 7) == fibers


class ColoringFileTest(unittest.TestCase):
    def setUp(self):
        self.tmp = TempDirectory()
        self.dir = Path(self.tmp.path)

    def tearDown(self):
        self.tmp.cleanup()

    def test_read_json(self):
        f = read_coloring(DATA_DIR / "distance-q3.json")
        assert f == Coloring(3, vertex_weights(3))

    def test_hex_format(self):
        f = linear_coloring(3, [0, 2])
        filepath = write_coloring(self.dir / "f.txt", f, fmt="hex")
        assert len(filepath.read_text().split()) == 2
        assert read_coloring(filepath) == f

    def test_json_format(self):
        f = Coloring(3, vertex_weights(3))
        filepath = write_coloring(self.dir / "f.json", f)
        assert json.loads(filepath.read_text())["k"] == 4

    def test_bad_json(self):
        filepath = self.dir / "bad.json"
        filepath.write_text("{not json")
        with pytest.raises(FormatError) as excpt:
            read_coloring(filepath)
        assert "not valid JSON" in excpt.value.error

    def test_unknown_format(self):
        with pytest.raises(FormatError):
            write_coloring(self.dir / "f.csv", Coloring.constant(2), fmt="csv")


class MatrixShorthandTest(unittest.TestCase):
    def test_shorthand(self):
        assert parse_matrix("0,3;1,2").to_list() == [[0, 3], [1, 2]]
        assert parse_matrix("[[1, 2], [2, 1]]").to_list() == [[1, 2], [2, 1]]

    def test_malformed(self):
        for text in ("0,3;1", "a,b;c,d", "0,3;1,1"):
            with pytest.raises(FormatError):
                parse_matrix(text)


class CheckpointTest(unittest.TestCase):
    def setUp(self):
        self.tmp = TempDirectory()
        self.filepath = Path(self.tmp.path) / "state" / "run.json"

    def tearDown(self):
        self.tmp.cleanup()

    def test_resume(self):
        checkpoint = Checkpoint(self.filepath, "search", {"n": 5, "matrix": [[2, 3], [1, 4]]})
        assert checkpoint.load() is None
        checkpoint.save({"done": [1, 2]})
        with LogCapture() as log:
            state = Checkpoint(self.filepath, "search", {"n": 5, "matrix": [[2, 3], [1, 4]]}).load()
        assert state == {"done": [1, 2]}
        log.check_present(("equicube.io", "INFO", f"resuming from checkpoint {self.filepath!s}"))

    def test_header_mismatch(self):
        Checkpoint(self.filepath, "search", {"n": 5}).save({})
        with LogCapture() as log, pytest.raises(FormatError) as excpt:
            Checkpoint(self.filepath, "search", {"n": 6}).load()
        assert "header mismatch" in excpt.value.error
        assert any(record.levelname == "WARNING" for record in log.records)
        with pytest.raises(FormatError):
            Checkpoint(self.filepath, "classify", {"n": 5}).load()

    def test_corrupt_file(self):
        self.filepath.parent.mkdir(parents=True)
        self.filepath.write_text("{")
        with pytest.raises(FormatError):
            Checkpoint(self.filepath, "search", {}).load()
