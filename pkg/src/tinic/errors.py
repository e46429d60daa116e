"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""

from __future__ import annotations


class TinicError(Exception):
    exit_code = 1


class InvalidArgument(TinicError, ValueError):
    exit_code = 2


class DegenerateChannel(InvalidArgument):
    """All four exponents equal; excluded from the regime taxonomy."""


class SchemeShapeError(InvalidArgument):
    pass


class SchemeParseError(InvalidArgument):
    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class RegimeMismatch(TinicError):
    exit_code = 3


class SizeLimitExceeded(TinicError):
    exit_code = 4


class InvalidSuperposition(InvalidArgument):
    pass


class DegenerateConstellation(TinicError):
    exit_code = 1
