from __future__ import annotations

from pathlib import Path


class NetFactorError(Exception):
    """Base class for every error raised by netfactor."""


class DimensionError(NetFactorError, ValueError):
    """Operands do not conform (shape mismatch, wrong sizes)."""


class InputError(NetFactorError, ValueError):
    """Operand values are invalid: negative where nonnegative is required, NaN, asymmetric, empty."""


class MatrixParseError(InputError):
    def __init__(self, path: Path | str, line: int, reason: str):
        self.path = Path(path)
        self.line = int(line)
        self.reason = reason
        super().__init__(f"{self.path}:{self.line}: {reason}")


class SolverError(NetFactorError, RuntimeError):
    """A numerical subroutine failed (eigensolver did not converge, residual too large)."""


def shape_str(shape: tuple[int, ...]) -> str:
    return "x".join(str(int(s)) for s in shape)
