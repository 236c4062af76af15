"""
equicube exception hierarchy.

Every domain failure raised by the library derives from EquicubeError, so callers
(and the command line) can catch one type and still print a useful message.
"""


# Setup

# Constants

# Data Structure Definitions

# Private Functions

# Public Classes and Functions


class EquicubeError(Exception):
    """Indicates errors raised by an equicube operation"""

    def __init__(self, error, operation=None, n=None, k=None, **kwargs):
        self.error = error
        self.operation = operation
        self.n = n
        self.k = k
        args = (error, operation, n, k)
        self.kwargs = kwargs
        super().__init__(*args)

    def __str__(self):
        msg = f"{self.__class__.__name__}: {self.error}"
        if self.operation:
            msg = f"{msg}, in operation {self.operation}"
        if self.n is not None:
            msg = f"{msg} for n={self.n}"
        if self.k is not None:
            msg = f"{msg} k={self.k}"
        if self.kwargs:
            arguments = ", ".join([f"{key!s}={val!s}" for key, val in self.kwargs.items()])
            msg = f"{msg} supplied with {arguments}"
        return msg

    def to_dict(self) -> dict:
        """Machine readable form, printed by the command line on stderr."""
        payload = {"error": self.__class__.__name__, "message": str(self.error)}
        if self.operation:
            payload["operation"] = self.operation
        if self.n is not None:
            payload["n"] = self.n
        if self.k is not None:
            payload["k"] = self.k
        for key, val in self.kwargs.items():
            payload[key] = val if isinstance(val, (int, str, bool, list, type(None))) else str(val)
        return payload


class NotPerfectError(EquicubeError):
    """Coloring is not perfect; `witness` holds two same-colored vertices with different neighbor profiles"""

    def __init__(self, error, witness=None, operation="quotient_matrix", n=None, k=None, **kwargs):
        self.witness = witness
        if witness is not None:
            kwargs["witness"] = list(witness)
        super().__init__(error, operation=operation, n=n, k=k, **kwargs)


class IrregularSpectrumError(EquicubeError):
    """Characteristic polynomial has roots outside {n - 2i}"""

    def __init__(self, error, matrix=None, n=None, **kwargs):
        self.matrix = matrix
        if matrix is not None:
            kwargs["matrix"] = [list(row) for row in matrix]
        super().__init__(error, operation="eigenvalues", n=n, **kwargs)


class CapExceededError(EquicubeError):
    """A documented practical cap was exceeded"""

    def __init__(self, error, cap=None, value=None, operation=None, **kwargs):
        self.cap = cap
        self.value = value
        super().__init__(error, operation=operation, cap=cap, value=value, **kwargs)


class MismatchError(EquicubeError):
    """Operands disagree on dimension or color count"""


class FormatError(EquicubeError):
    """Malformed hex string, JSON document, matrix shorthand, dataset line or checkpoint"""


class InvariantViolation(EquicubeError):
    """An internal consistency check failed"""
