"""
Unit tests for equicube/exceptions
"""

import unittest

from equicube.exceptions import CapExceededError, EquicubeError, FormatError, IrregularSpectrumError, NotPerfectError


class ExceptionsTest(unittest.TestCase):
    def test_message(self):
        error = EquicubeError("bad input", operation="verify", n=3, k=2, source="cli")
        assert str(error) == "EquicubeError: bad input, in operation verify for n=3 k=2 supplied with source=cli"
        assert str(FormatError("oops")) == "FormatError: oops"

    def test_to_dict(self):
        payload = CapExceededError("too large", cap=7, value=8, operation="classify").to_dict()
        assert payload == {"error": "CapExceededError", "message": "too large", "operation": "classify", "cap": 7, "value": 8}

    def test_witness_and_matrix(self):
        error = NotPerfectError("not perfect", witness=(0, 1), n=2, k=2)
        assert error.to_dict()["witness"] == [0, 1]
        assert error.operation == "quotient_matrix"
        error = IrregularSpectrumError("irregular", matrix=((0, 2), (1, 1)), n=2)
        assert error.to_dict()["matrix"] == [[0, 2], [1, 1]]

    def test_hierarchy(self):
        for cls in (CapExceededError, FormatError, IrregularSpectrumError, NotPerfectError):
            assert issubclass(cls, EquicubeError)
