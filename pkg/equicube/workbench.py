"""
High-level facade over the library: one method per command, each returning a JSON-ready
dict, plus xlsx export of report tables and the run manifest.
"""

import hashlib
import json
import logging
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from openpyxl import Workbook

from equicube import __version__
from equicube.canonical import are_equivalent, canonical_form, fiber_canonical_form
from equicube.classify import (
    Constraint,
    FiberLibrary,
    build_fiber_library,
    classify,
    kirienko_count,
    library_table,
    render_table,
    table_rows,
)
from equicube.config import CHECK_INVARIANTS_ENV, RunConfig
from equicube.constructions import (
    Q9_VARIANTS,
    coordinate_coloring,
    constr0,
    constr1,
    constr1_spec,
    constr3,
    constr3_spec,
    construction_catalog,
    distance_coloring,
    eight_coloring_q6,
    q9_colorings,
    reconstruct_fab,
    verify_construction,
)
from equicube.exceptions import EquicubeError
from equicube.hypercube import Coloring, Fiber, group_order, linear_coloring
from equicube.refinement import coarsest_equitable_refinement
from equicube.search import (
    MatrixConstraints,
    candidate_matrices,
    enumerate_codes,
    enumerate_partitions,
    enumerate_perfect_colorings,
)
from equicube.spectral import QuotientMatrix, eigenvalues, quotient_matrix, spectrum_report, walsh

logger = logging.getLogger(__name__)

CONSTRUCTIONS = ("distance", "coordinate", "constr0", "constr1", "constr3", "eight-q6", "fab", "q9", "catalog")


@dataclass
class RunManifest:
    """What was run, on which inputs, and where the outputs went."""

    command: str
    parameters: dict
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    threads: int = 1
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_dict(self) -> dict:
        return asdict(self)


def file_digest(filepath: Union[str, Path]) -> str:
    return hashlib.sha256(Path(filepath).read_bytes()).hexdigest()


class Workbench:
    """Runs the equicube operations under one RunConfig.

    Args:
        config (RunConfig, optional): used as is
        config_params (dict, optional): passed to RunConfig.from_params
        config_filepath (Path, optional): JSON file read by RunConfig.read_config_file

    With none of them the defaults apply (EQUICUBE_THREADS workers, output in ./output).
    """

    def __init__(
        self,
        config: Optional[RunConfig] = None,
        config_params: Optional[dict] = None,
        config_filepath: Optional[Path] = None,
    ) -> None:
        # an explicit config wins over params, params over the file
        if config is not None:
            self.config = config
        elif config_params:
            self.config = RunConfig.from_params(config_params)
        elif config_filepath:
            self.config = RunConfig.read_config_file(config_filepath)
        else:
            self.config = RunConfig()
        # joblib workers read the flag from the environment
        if self.config.check_invariants:
            os.environ[CHECK_INVARIANTS_ENV] = "1"

    def _checkpoint(self, name: str) -> Optional[Path]:
        if self.config.checkpoint_dir is None:
            return None
        return self.config.checkpoint_dir / f"{name}.json"

    # single colorings

    def verify(self, f: Coloring) -> dict:
        """Quotient matrix and eigenvalues; NotPerfectError with a witness pair otherwise."""
        matrix = quotient_matrix(f)
        return {"n": f.n, "k": f.k, "perfect": True, "matrix": matrix.to_list(), "eigenvalues": list(eigenvalues(matrix, f.n))}

    def spectrum(self, f: Coloring) -> dict:
        return spectrum_report(f).to_dict()

    def refine(self, f: Coloring) -> dict:
        refined, trace = coarsest_equitable_refinement(f, trace=True)
        return {"coloring": refined.to_dict(), "matrix": quotient_matrix(refined).to_list(), "trace": trace.to_dict()}

    def canon(self, f: Coloring) -> dict:
        return canonical_form(f).to_dict()

    def equiv(self, f: Coloring, g: Coloring) -> dict:
        equivalent, witness = are_equivalent(f, g)
        return {"equivalent": equivalent, "witness": witness.to_dict() if witness is not None else None}

    def autorder(self, f: Union[Coloring, Fiber]) -> dict:
        """Stabilizer order of a coloring (with color renaming) or of a vertex set."""
        if isinstance(f, Fiber):
            _, order = fiber_canonical_form(f)
            return {"n": f.n, "kind": "fiber", "aut_order": order, "orbit_size": group_order(f.n) // order}
        order = canonical_form(f).aut_order
        return {"n": f.n, "kind": "coloring", "aut_order": order, "orbit_size": group_order(f.n) // order}

    # enumeration

    def search(self, n: int, matrix: QuotientMatrix) -> dict:
        colorings = enumerate_perfect_colorings(
            n, matrix, threads=self.config.threads, checkpoint=self._checkpoint(f"search-n{n}-{matrix.shorthand()}")
        )
        return {"n": n, "matrix": matrix.to_list(), "class_count": len(colorings), "classes": [f.to_dict() for f in colorings]}

    def matrices(self, n: int, k: int, constraints: Optional[MatrixConstraints] = None) -> dict:
        return candidate_matrices(n, k, constraints).to_dict()

    def codes(self, n: int, mu: int) -> dict:
        result = enumerate_codes(n, mu, threads=self.config.threads, checkpoint=self._checkpoint(f"codes-n{n}-mu{mu}"))
        return result.to_dict()

    def partitions(self, spectrum: Sequence[int], n: int = 7) -> dict:
        result = enumerate_partitions(spectrum, n, threads=self.config.threads)
        payload = result.to_dict()
        payload["row"] = result.row()
        return payload

    def _fiber_library(
        self, n: int, constraint: Constraint, dataset: Optional[Path], matrices: Optional[Sequence[QuotientMatrix]]
    ) -> FiberLibrary:
        """Library from perfect colorings with the given matrices, a dataset, or exhaustive enumeration."""
        threads = self.config.threads
        if matrices:
            colorings = [f for m in matrices for f in enumerate_perfect_colorings(n, m, threads=threads)]
            return build_fiber_library(n, constraint, threads=threads, colorings=colorings)
        return build_fiber_library(n, constraint, dataset=dataset or self.config.dataset, threads=threads)

    def classify(
        self, n: int, constraint: Constraint, dataset: Optional[Path] = None, matrices: Optional[Sequence[QuotientMatrix]] = None
    ) -> dict:
        """Classification report as a dict with the rendered table under "table".

        With `matrices` the fiber library holds the fibers of every perfect coloring
        with one of those quotient matrices, as found by search.
        """
        library = self._fiber_library(n, constraint, dataset, matrices)
        name = f"classify-n{n}-{constraint.kind}{constraint.value}"
        report = classify(n, constraint, library=library, threads=self.config.threads, checkpoint=self._checkpoint(name))
        header, rows = table_rows(report)
        payload = report.to_dict()
        payload["table"] = {"header": header, "rows": rows, "text": render_table(report)}
        return payload

    def library(
        self, n: int, constraint: Constraint, dataset: Optional[Path] = None, matrices: Optional[Sequence[QuotientMatrix]] = None
    ) -> dict:
        """Fiber library summary with its tally table; works up to n = 10 with a dataset."""
        library = self._fiber_library(n, constraint, dataset, matrices)
        header, rows = library_table(library)
        return {**library.to_dict(), "table": {"header": header, "rows": rows}}

    # constructions

    def construct(self, name: str, n: Optional[int] = None, b: int = 1, c: int = 1, variant: str = "star-z2z2") -> dict:
        """Build one construction and verify its matrix.

        Args:
            name (str): one of CONSTRUCTIONS
            n (int): dimension, where the construction takes one
            b, c (int): constr1 / constr3 parameters
            variant (str): Q_9 variant, one of Q9_VARIANTS
        """
        colorings: list
        if name == "distance":
            colorings = [distance_coloring(self._need(n, name))]
        elif name == "coordinate":
            colorings = [coordinate_coloring(self._need(n, name))]
        elif name == "constr0":
            colorings = [constr0(distance_coloring(self._need(n, name) - 1))]
        elif name == "constr1":
            m = self._need(n, name) - 2
            f = Coloring.constant(m) if b == 0 else linear_coloring(m, range(b))
            g = Coloring.constant(m) if c == 0 else linear_coloring(m, range(c))
            colorings = [constr1(f, g, b, c)]
            verify_construction(colorings[0], constr1_spec(m + 2, b, c))
        elif name == "constr3":
            colorings = [constr3(b, c, self._need(n, name))]
            verify_construction(colorings[0], constr3_spec(self._need(n, name), b, c))
        elif name == "eight-q6":
            colorings = [eight_coloring_q6()]
        elif name == "fab":
            colorings = [f for _, f in sorted(reconstruct_fab().items())]
        elif name == "q9":
            if variant not in Q9_VARIANTS:
                raise EquicubeError(f"unknown Q_9 variant {variant!r}", operation="construct", n=9)
            base = linear_coloring(6, [0, 1, 2]) if variant == "g-based" else None
            colorings = [q9_colorings(variant, base)]
        elif name == "catalog":
            colorings = self._catalog(self._need(n, name))
        else:
            raise EquicubeError(f"unknown construction {name!r}, expected one of {', '.join(CONSTRUCTIONS)}", operation="construct")
        results = []
        for f in colorings:
            matrix = quotient_matrix(f)
            results.append({"coloring": f.to_dict(), "matrix": matrix.to_list(), "eigenvalues": list(eigenvalues(matrix, f.n))})
        return {"construction": name, "count": len(results), "results": results}

    @staticmethod
    def _need(n: Optional[int], name: str) -> int:
        if n is None:
            raise EquicubeError(f"construction {name!r} needs a dimension", operation="construct")
        return n

    @staticmethod
    def _catalog(n: int) -> list:
        previous: list = []
        for m in range(2, n + 1):
            lower = classify(m - 1, Constraint("degree", 2)).records
            previous = construction_catalog(m, [r.coloring for r in lower], previous)
        return previous

    # timings

    def bench(self, n: int = 8, repeat: int = 5, seed: int = 0) -> dict:
        """Wall time of the core kernels on random inputs of Q_n."""
        rng = np.random.default_rng(seed)
        t = Fiber.from_array(n, rng.integers(0, 2, size=1 << n))
        f = Coloring(n, t.array.astype(np.int64))
        small = Coloring(min(n, 6), rng.integers(0, 3, size=1 << min(n, 6)))
        kernels = {
            "walsh": lambda: walsh(t),
            "refinement": lambda: coarsest_equitable_refinement(f),
            "canonical_form": lambda: canonical_form(small),
        }
        timings = {}
        for label, kernel in kernels.items():
            best = float("inf")
            for _ in range(repeat):
                start = time.perf_counter()
                kernel()
                best = min(best, time.perf_counter() - start)
            timings[label] = round(best, 6)
        logger.info(f"bench on Q_{n}: {timings}")
        return {"n": n, "repeat": repeat, "seconds": timings}

    def kirienko(self, upto: int = 10) -> dict:
        return {"values": {str(n): kirienko_count(n) for n in range(upto + 1)}}

    # outputs

    def export_xlsx(self, header: list, rows: list, name: str) -> Path:
        """Write a table into `output_dir/<name>.xlsx` and return the path."""
        workbook = Workbook()
        sheet = workbook.active
        if sheet:
            sheet.title = name[:31]
            sheet.append(header)
            for row in rows:
                sheet.append(list(row))
        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        filepath = self.config.output_dir / f"{name}.xlsx"
        workbook.save(filepath)
        logger.info(f"table written to {filepath!s}")
        return filepath

    def write_manifest(
        self,
        command: str,
        parameters: dict,
        inputs: Sequence[Path] = (),
        outputs: Sequence[Path] = (),
        wall_time: float = 0.0,
    ) -> Path:
        manifest = RunManifest(
            command=command,
            parameters=parameters,
            inputs={str(p): file_digest(p) for p in inputs},
            outputs=[str(p) for p in outputs],
            wall_time=round(wall_time, 3),
            threads=self.config.threads,
        )
        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        filepath = self.config.output_dir / f"{command}-manifest.json"
        with open(filepath, "w") as f:
            json.dump(manifest.to_dict(), f, indent=2, default=str)
            f.write("\n")
        return filepath
