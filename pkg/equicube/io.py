"""
File formats: hex fiber lines, JSON colorings, matrix shorthand and resumable checkpoints.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from equicube.exceptions import EquicubeError, FormatError
from equicube.hypercube import Coloring, Fiber, emit_hex, parse_hex
from equicube.spectral import QuotientMatrix

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "equicube-checkpoint"
CHECKPOINT_VERSION = 1


def _dimension_from_hex(digits: int) -> int:
    size = digits * 4
    n = size.bit_length() - 1
    if size < 4 or 1 << n != size:
        raise FormatError(f"{digits} hex digits do not describe a hypercube truth table", operation="read_fibers")
    return n


def read_fibers(filepath: Union[str, Path], n: Optional[int] = None) -> list:
    """Read one hex truth table per line; blank lines and '#' comments are skipped.

    Args:
        filepath (Path): file to read
        n (int): dimension; inferred from the first line when omitted

    Raises:
        FormatError: unreadable file or malformed line (the line number is reported)
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FormatError(f"Cannot find fiber file: {filepath!s}", operation="read_fibers")
    fibers = []
    with open(filepath) as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if n is None:
                n = _dimension_from_hex(len(text))
            try:
                fibers.append(parse_hex(text, n))
            except FormatError as excpt:
                raise FormatError(f"{filepath!s} line {lineno}: {excpt.error}", operation="read_fibers", n=n) from excpt
    logger.debug(f"read {len(fibers)} fibers from {filepath!s}")
    return fibers


def write_fibers(filepath: Union[str, Path], fibers: Sequence[Fiber], header: Optional[str] = None) -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w") as f:
        if header:
            for line in header.splitlines():
                f.write(f"# {line}\n")
        for t in fibers:
            f.write(f"{emit_hex(t)}\n")
    return filepath


def read_coloring(filepath: Union[str, Path]) -> Coloring:
    """Read a coloring from JSON ({"n", "k", "colors"}) or from hex lines, one fiber per color."""
    filepath = Path(filepath)
    if not filepath.exists():
        raise FormatError(f"Cannot find coloring file: {filepath!s}", operation="read_coloring")
    text = filepath.read_text()
    if text.lstrip().startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as excpt:
            raise FormatError(f"{filepath!s} is not valid JSON: {excpt}", operation="read_coloring") from excpt
        return Coloring.from_dict(payload)
    return Coloring.from_fibers(read_fibers(filepath))


def write_coloring(filepath: Union[str, Path], f: Coloring, fmt: str = "json") -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(filepath, "w") as fh:
            json.dump(f.to_dict(), fh)
            fh.write("\n")
    elif fmt == "hex":
        write_fibers(filepath, f.fibers)
    else:
        raise FormatError(f"unknown coloring format {fmt!r}", operation="write_coloring")
    return filepath


def parse_matrix(text: str) -> QuotientMatrix:
    """Parse "a,b;c,d" shorthand or a JSON list of lists."""
    text = text.strip()
    try:
        if text.startswith("["):
            rows = json.loads(text)
        else:
            rows = [[int(x) for x in row.split(",")] for row in text.split(";") if row.strip()]
        return QuotientMatrix(rows)
    except (ValueError, TypeError, json.JSONDecodeError) as excpt:
        raise FormatError(f"cannot parse matrix {text!r}: {excpt}", operation="parse_matrix") from excpt
    except EquicubeError as excpt:
        raise FormatError(f"cannot parse matrix {text!r}: {excpt.error}", operation="parse_matrix") from excpt


class Checkpoint:
    """Resumable JSON state file with a self-describing header.

    The file holds {"format", "version", "kind", "params", "state"}; a file written for a
    different kind of run, or with different parameters, is refused on load.
    """

    def __init__(self, filepath: Union[str, Path], kind: str, params: dict) -> None:
        self.filepath = Path(filepath)
        self.kind = kind
        self.params = json.loads(json.dumps(params))

    def header(self) -> dict:
        return {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "kind": self.kind, "params": self.params}

    def load(self) -> Optional[Any]:
        if not self.filepath.exists():
            return None
        try:
            payload = json.loads(self.filepath.read_text())
        except json.JSONDecodeError as excpt:
            raise FormatError(f"checkpoint {self.filepath!s} is not valid JSON: {excpt}", operation="checkpoint") from excpt
        header = {key: payload.get(key) for key in ("format", "version", "kind", "params")}
        if header != self.header():
            logger.warning(f"checkpoint {self.filepath!s} was written for another run: {header}")
            raise FormatError(f"checkpoint header mismatch in {self.filepath!s}", operation="checkpoint")
        logger.info(f"resuming from checkpoint {self.filepath!s}")
        return payload.get("state")

    def save(self, state: Any) -> None:
        self.filepath.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.filepath.with_suffix(self.filepath.suffix + ".tmp")
        with open(tmp, "w") as f:
            json.dump({**self.header(), "state": state}, f)
        os.replace(tmp, self.filepath)
        logger.info(f"checkpoint written to {self.filepath!s}")
