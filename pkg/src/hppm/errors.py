"""Exception hierarchy.

The CLI maps each family to an exit status: configuration problems exit 2,
data problems exit 3 and numerical failures exit 4.
"""


class HppmError(Exception):
    exit_code = 1


class ConfigError(HppmError):
    exit_code = 2


class DataError(HppmError, ValueError):
    exit_code = 3


class MeshFormatError(DataError):
    """Malformed or unsupported OBJ content."""


class NumericError(HppmError, ArithmeticError):
    exit_code = 4


class DegenerateRotationError(NumericError, ValueError):
    """A 6D rotation whose two vectors are zero or parallel."""


class DegenerateGeometryError(NumericError, ValueError):
    """Point configuration too low-rank for the requested fit."""


class BehindCameraError(DataError):
    def __init__(self, indices):
        self.indices = [int(i) for i in indices]
        shown = self.indices[:10]
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(f"points with non-positive depth: {shown}{more}")


class FusionError(DataError):
    pass
