"""
Unit tests for equicube/cli
"""

import json
from pathlib import Path

import pytest
from openpyxl import load_workbook
from testfixtures import TempDirectory

from equicube import __version__
from equicube.cli import create_parser, main
from equicube.spectral import QuotientMatrix

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def tmp():
    with TempDirectory() as d:
        yield Path(d.path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--coloring", str(DATA_DIR / "distance-q3.json"))
    assert code == 0
    payload = json.loads(out)
    assert payload["matrix"] == [[0, 3, 0, 0], [1, 0, 2, 0], [0, 2, 0, 1], [0, 0, 3, 0]]
    assert payload["eigenvalues"] == [3, 1, -1, -3]


def test_verify_text(capsys):
    code, out, _ = run(capsys, "verify", "--coloring", str(DATA_DIR / "distance-q3.json"), "--format", "text")
    assert code == 0
    assert out.splitlines()[0] == "0 3 0 0"


def test_not_perfect_exit_code(capsys):
    code, out, err = run(capsys, "verify", "--coloring", str(DATA_DIR / "not-perfect-q2.json"))
    assert code == 1
    assert out == ""
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "NotPerfectError"
    assert error["witness"] == [0, 1]


def test_missing_file(capsys):
    code, _, err = run(capsys, "spectrum", "--coloring", str(DATA_DIR / "nothing.json"))
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "FormatError"


def test_usage_errors(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 2
    assert "--coloring" in err
    code, _, _ = run(capsys, "construct", "--name", "nothing")
    assert code == 2
    code, _, _ = run(capsys, "classify", "--n", "3")
    assert code == 2


def test_long_runs_need_flag(capsys):
    code, _, err = run(capsys, "search", "--n", "8", "--matrix", "0,8;8,0")
    assert code == 2
    assert "pass --long" in err
    code, _, _ = run(capsys, "partitions", "--all")
    assert code == 2


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert __version__ in out


def test_construct_hex(capsys):
    code, out, _ = run(capsys, "construct", "--name", "distance", "--n", "2", "--format", "hex")
    assert code == 0
    assert out.split() == ["8", "6", "1"]


def test_construct_g_based_q9(capsys):
    code, out, _ = run(capsys, "construct", "--name", "q9", "--variant", "g-based")
    assert code == 0
    (result,) = json.loads(out)["results"]
    assert QuotientMatrix(result["matrix"]).equivalent(QuotientMatrix([[0, 3, 3, 3], [3, 0, 3, 3], [3, 3, 0, 3], [3, 3, 3, 0]]))


def test_construct_needs_dimension(capsys):
    code, _, err = run(capsys, "construct", "--name", "distance")
    assert code == 1
    assert "needs a dimension" in json.loads(err.strip().splitlines()[-1])["message"]


def test_autorder_fiber(capsys):
    code, out, _ = run(capsys, "autorder", "--fiber", "8")
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 2
    assert payload["aut_order"] == 2
    assert payload["orbit_size"] == 4


def test_search(capsys):
    code, out, _ = run(capsys, "search", "--n", "3", "--matrix", "0,3;3,0", "--format", "text")
    assert code == 0
    assert out.strip() == "1 classes"


def test_classify_exports(capsys, tmp):
    code, out, _ = run(
        capsys, "classify", "--n", "2", "--degree-max", "2", "--format", "text", "--output", str(tmp), "--xlsx", "q2", "--manifest"
    )
    assert code == 0
    assert out.splitlines()[-1].split() == ["k", ">=", "2", "3(1)"]
    sheet = load_workbook(tmp / "q2.xlsx").active
    assert sheet.title == "q2"
    assert [cell.value for cell in sheet[1]] == ["k", "1", "2", "total"]
    manifest = json.loads((tmp / "classify-manifest.json").read_text())
    assert manifest["command"] == "classify"
    assert manifest["outputs"] == [str(tmp / "q2.xlsx")]


def test_library_with_dataset(capsys):
    code, out, _ = run(capsys, "library", "--n", "4", "--degree-max", "1", "--library", str(DATA_DIR / "resilient-q4.txt"))
    assert code == 0
    payload = json.loads(out)
    assert payload["tallies"] == {"8": 1, "16": 1}
    assert payload["source"] == "dataset"


def test_library_from_matrix(capsys):
    code, out, _ = run(capsys, "library", "--n", "3", "--ci-min", "2", "--matrix", "0,3;3,0")
    assert code == 0
    payload = json.loads(out)
    assert payload["source"] == "search"
    assert payload["tallies"] == {"4": 1}
    code, _, err = run(capsys, "library", "--n", "8", "--ci-min", "4", "--matrix", "0,2,6;2,0,6;3,3,2")
    assert code == 2
    assert "pass --long" in err


def test_parser_commands():
    parser = create_parser()
    args = parser.parse_args(["codes", "--mu", "2"])
    assert args.n == 7
    assert args.threads is None
