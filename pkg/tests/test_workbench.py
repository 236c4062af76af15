"""
Unit tests for equicube/workbench
"""

import hashlib
import json
import unittest
from pathlib import Path

import pytest
from openpyxl import load_workbook
from testfixtures import LogCapture, TempDirectory

from equicube.classify import Constraint
from equicube.config import RunConfig
from equicube.exceptions import EquicubeError
from equicube.hypercube import Fiber, linear_coloring
from equicube.io import read_coloring
from equicube.spectral import QuotientMatrix
from equicube.workbench import Workbench, file_digest

DATA_DIR = Path(__file__).parent / "data"


class WorkbenchConfigTest(unittest.TestCase):
    def test_config_precedence(self):
        bench = Workbench(config=RunConfig(threads=3), config_params={"threads": 2})
        assert bench.config.threads == 3
        bench = Workbench(config_params={"threads": 2}, config_filepath=DATA_DIR / "nothing.json")
        assert bench.config.threads == 2
        bench = Workbench(config_filepath=DATA_DIR / "run-config.json")
        assert bench.config.output_dir == Path("tests/output")
        assert bench.config.checkpoint_dir == Path("tests/output/checkpoints")


class WorkbenchTest(unittest.TestCase):
    def setUp(self):
        self.tmp = TempDirectory()
        self.dir = Path(self.tmp.path)
        self.bench = Workbench(config_params={"threads": 1, "output_dir": self.dir / "out"})

    def tearDown(self):
        self.tmp.cleanup()

    def test_verify(self):
        payload = self.bench.verify(read_coloring(DATA_DIR / "distance-q3.json"))
        assert payload["perfect"]
        assert payload["k"] == 4
        assert payload["eigenvalues"] == [3, 1, -1, -3]

    def test_equiv_and_autorder(self):
        payload = self.bench.equiv(linear_coloring(3, [0]), linear_coloring(3, [2]))
        assert payload["equivalent"]
        assert payload["witness"] is not None
        payload = self.bench.autorder(Fiber.from_vertices(3, [0]))
        assert payload == {"n": 3, "kind": "fiber", "aut_order": 6, "orbit_size": 8}

    def test_construct(self):
        payload = self.bench.construct("distance", n=3)
        assert payload["count"] == 1
        assert payload["results"][0]["eigenvalues"] == [3, 1, -1, -3]
        payload = self.bench.construct("constr3", n=4, b=1, c=1)
        assert payload["results"][0]["coloring"]["n"] == 4

    def test_construct_g_based_q9(self):
        payload = self.bench.construct("q9", variant="g-based")
        (result,) = payload["results"]
        assert QuotientMatrix(result["matrix"]).equivalent(QuotientMatrix([[0, 3, 3, 3], [3, 0, 3, 3], [3, 3, 0, 3], [3, 3, 3, 0]]))
        assert result["eigenvalues"] == [9, -3, -3, -3]

    def test_construct_errors(self):
        with pytest.raises(EquicubeError) as excpt:
            self.bench.construct("nothing", n=3)
        assert "unknown construction" in excpt.value.error
        with pytest.raises(EquicubeError) as excpt:
            self.bench.construct("q9", variant="nothing")
        assert "unknown Q_9 variant" in excpt.value.error
        with pytest.raises(EquicubeError):
            self.bench.construct("coordinate")

    def test_kirienko(self):
        assert self.bench.kirienko(4) == {"values": {"0": 2, "1": 4, "2": 16, "3": 256, "4": 12870}}

    def test_library_and_classify(self):
        payload = self.bench.library(4, Constraint("degree", 1), dataset=DATA_DIR / "resilient-q4.txt")
        assert payload["table"]["rows"] == [[8, 1, "1"], [16, 1, "0"]]
        payload = self.bench.classify(2, Constraint("degree", 2))
        assert payload["counts_by_k"] == {"1": [1, 1], "2": [2, 1], "3": [1, 0], "4": [1, 0]}
        assert payload["table"]["rows"][-1] == ["k >= 2", "", "", "3(1)"]
        assert payload["table"]["text"].splitlines()[0].split() == ["k", "1", "2", "total"]

    def test_library_from_matrices(self):
        payload = self.bench.library(3, Constraint("ci", 2), matrices=[QuotientMatrix([[0, 3], [3, 0]])])
        assert payload["source"] == "search"
        assert payload["fibers"] == 2
        assert payload["table"]["rows"] == [[4, 1, "3"]]
        payload = self.bench.classify(3, Constraint("ci", 2), matrices=[QuotientMatrix([[0, 3], [3, 0]])])
        assert payload["counts_by_k"] == {"1": [1, 1], "2": [1, 1]}

    def test_export_xlsx(self):
        with LogCapture() as log:
            filepath = self.bench.export_xlsx(["ones", "classes"], [[8, 1], [16, 1]], "tallies")
        assert filepath == self.dir / "out" / "tallies.xlsx"
        log.check_present(("equicube.workbench", "INFO", f"table written to {filepath!s}"))
        sheet = load_workbook(filepath).active
        assert sheet.title == "tallies"
        assert [[cell.value for cell in row] for row in sheet.iter_rows()] == [["ones", "classes"], [8, 1], [16, 1]]

    def test_write_manifest(self):
        source = DATA_DIR / "resilient-q4.txt"
        filepath = self.bench.write_manifest("library", {"n": 4}, inputs=[source], outputs=[self.dir / "x.xlsx"], wall_time=1.23456)
        manifest = json.loads(filepath.read_text())
        assert filepath.name == "library-manifest.json"
        assert manifest["parameters"] == {"n": 4}
        assert manifest["inputs"] == {str(source): hashlib.sha256(source.read_bytes()).hexdigest()}
        assert manifest["wall_time"] == 1.235
        assert manifest["threads"] == 1
        assert file_digest(source) == manifest["inputs"][str(source)]

    def test_bench(self):
        payload = self.bench.bench(n=4, repeat=1)
        assert sorted(payload["seconds"]) == ["canonical_form", "refinement", "walsh"]
