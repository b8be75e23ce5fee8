"""Exception hierarchy shared by the solver modules."""


class TMECorError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(TMECorError, ValueError):
    """Game generator called with parameters that cannot form a game."""


class InvalidGame(TMECorError, ValueError):
    """A game failed structural validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid game: " + "; ".join(str(v) for v in report))


class DimensionMismatch(TMECorError, ValueError):
    """A plan or vector does not match the size of the game object it indexes."""


class SolverFailure(TMECorError):
    """An LP/MILP solve ended without a usable optimal solution."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class NumericalFailure(SolverFailure):
    """The simplex basis could not be kept numerically stable."""


class ReconstructionMismatch(TMECorError):
    """A strategy read back from a MILP does not reproduce the MILP objective."""

    def __init__(self, expected, recomputed):
        self.expected = expected
        self.recomputed = recomputed
        super().__init__(
            f"recomputed value {recomputed!r} deviates from MILP objective {expected!r}"
        )


class DidNotConverge(TMECorError):
    """Column generation hit its iteration or time budget before closing the gap."""

    def __init__(self, message, result):
        self.result = result
        super().__init__(message)


class NumericalStall(TMECorError):
    """The oracle returned a column already present while the gap is still open."""

    def __init__(self, message, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(message)


class TooLarge(TMECorError):
    """An enumeration oracle was asked to enumerate more than its cap."""
