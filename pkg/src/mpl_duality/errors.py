"""
Exception hierarchy shared by the library, the CLI and the tool server.

Every error carries the process exit code the CLI maps it to:

    2  usage / domain error   (bad index text, inadmissible index, |z| out of range, ...)
    3  non-convergence        (max_terms reached before the target tolerance)

A failed verification is never an exception: suites report it and the CLI exits 1.
"""

from __future__ import annotations

from typing import Any


class MPLError(RuntimeError):
    """Base class for every error raised by mpl_duality.

    Attributes:
        exit_code: process exit status the CLI uses for this error.
    """
    exit_code = 2

    def __init__(self, message: str, exit_code: int | None = None):
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code


class NotParseable(MPLError):
    """Text or a basis word that does not parse to an augmented index."""


class NotAdmissible(MPLError):
    """Augmented index whose last component is (1,1)."""


class NotInA0(MPLError):
    """Polynomial outside the subspace A0 on which L is defined."""


class InvalidIndex(MPLError):
    """Index violating the precondition of an operation (e.g. k_r = 1 with r not in I)."""


class DivergentSeries(MPLError):
    """Arguments outside the region where the requested series converges."""


class EmptyRightSide(MPLError):
    """A y1-move was requested with an empty receiving word."""


class NoConvergence(MPLError):
    """Truncation cap hit before the tolerance was met.

    Attributes:
        partial: the last EvalResult computed before giving up (may be None).
    """
    exit_code = 3

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial
