"""Exception hierarchy shared across the package."""


class QuadwalkError(Exception):
    """Base class for all package-specific failures."""


class ParseError(QuadwalkError):
    """A model file could not be parsed; carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(QuadwalkError):
    """A model failed validation; the full report is attached."""

    def __init__(self, report):
        super().__init__("model validation failed:\n" + report.as_text())
        self.report = report


class NoSecondRoot(QuadwalkError):
    """The one-variable kernel never re-crosses zero above 1.

    For a finite-support step distribution with negative drift this can
    only happen when no mass moves in the positive direction, which is a
    model defect rather than a numerical failure.
    """


class BranchLoss(QuadwalkError):
    """Newton continuation of an implicit branch left its basin."""


class NotConverged(QuadwalkError):
    """An adaptive truncation reached its size cap without stabilizing."""


class WindowExplosion(QuadwalkError):
    """A window solve exceeded the state budget before reaching tolerance."""


class QuadratureUnstable(QuadwalkError):
    """Contour quadrature produced a non-negligible imaginary part."""


class FitUnstable(QuadwalkError):
    """A regression window is too short to fit reliably."""


class ResidualFloor(QuadwalkError):
    """A residual series hit the truncation noise floor before decaying."""
