"""Exception hierarchy for the realized-weights toolkit."""

from __future__ import annotations

from collections.abc import Sequence
from datetime import date


class DCWError(Exception):
    """Base exception for all toolkit errors."""

    pass


class DataError(DCWError):
    """Raised when input data cannot be used (CLI exit code 3)."""

    pass


class NumericalError(DCWError):
    """Raised when a numerical routine cannot produce a valid result (CLI exit code 4)."""

    pass


class ConfigError(DCWError):
    """Raised when a configuration file or object is invalid (CLI exit code 2).

    Attributes:
        message: Description of the problem
        field: Dotted name of the offending field (optional)
    """

    def __init__(self, message: str, field: str | None = None) -> None:
        self.message = message
        self.field = field
        if field:
            super().__init__(f"Invalid configuration at {field!r}: {message}")
        else:
            super().__init__(f"Invalid configuration: {message}")


class ParseError(DataError):
    """Raised when a data file has a malformed row.

    Attributes:
        path: File being parsed
        line: 1-based line number of the offending row (None if not row-specific)
        reason: What was wrong with the row
    """

    def __init__(self, path: str, line: int | None, reason: str) -> None:
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format error message with location."""
        where = f"{self.path}:{self.line}" if self.line is not None else self.path
        return f"Cannot parse {where}: {self.reason}"


class EmptyInputError(DataError):
    """Raised when an input yields no usable records.

    Attributes:
        what: Description of the empty input
    """

    def __init__(self, what: str) -> None:
        self.what = what
        super().__init__(f"No usable records in {what}")


class InsufficientDataError(DataError):
    """Raised when a series or stream is too short for an operation.

    Attributes:
        subject: Asset ticker or series name lacking data
        count: Number of observations available
        required: Minimum number of observations needed
    """

    def __init__(self, subject: str, count: int, required: int) -> None:
        self.subject = subject
        self.count = count
        self.required = required
        super().__init__(
            f"Insufficient data for {subject!r}: {count} observations, need at least {required}"
        )


class MisalignedDatesError(DataError):
    """Raised when series that must share dates do not.

    Attributes:
        missing: Dates present in one series but not the other (first few)
    """

    def __init__(self, what: str, missing: Sequence[date] = ()) -> None:
        self.what = what
        self.missing = list(missing)
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format error message with a sample of the missing dates."""
        msg = f"Misaligned dates in {self.what}"
        if self.missing:
            sample = ", ".join(d.isoformat() for d in self.missing[:5])
            msg += f" (e.g. {sample})"
        return msg


class MetadataError(DataError):
    """Raised when an asset has no metadata record.

    Attributes:
        ticker: The ticker without metadata
        known: Tickers that do have metadata
    """

    def __init__(self, ticker: str, known: Sequence[str] = ()) -> None:
        self.ticker = ticker
        self.known = list(known)
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format error message with suggestions."""
        msg = f"No sector metadata for ticker {self.ticker!r}."
        suggestions = [k for k in self.known if k.lower().startswith(self.ticker[:2].lower())]
        if suggestions:
            msg += "\n\nDid you mean one of these?\n  " + "\n  ".join(suggestions[:5])
        return msg


class OutputError(DataError):
    """Raised when results cannot be written to the output directory.

    Attributes:
        path: Path that could not be written
        reason: Underlying error text
    """

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"Cannot write {path}: {reason}")


class DomainError(NumericalError):
    """Raised when an argument lies outside an operation's domain.

    Attributes:
        what: Description of the violated requirement
    """

    def __init__(self, what: str) -> None:
        self.what = what
        super().__init__(what)


class DegenerateVarianceError(NumericalError):
    """Raised when an asset's binned sum of squared returns is zero.

    Attributes:
        asset: Ticker of the degenerate asset
    """

    def __init__(self, asset: str) -> None:
        self.asset = asset
        super().__init__(f"Binned returns of {asset!r} have zero sum of squares")


class LagOutOfRangeError(NumericalError):
    """Raised when an autocovariance lag is not below the number of returns.

    Attributes:
        lag: Requested lag h
        n_returns: Number of intraday returns J
    """

    def __init__(self, lag: int, n_returns: int) -> None:
        self.lag = lag
        self.n_returns = n_returns
        super().__init__(f"Lag {lag} out of range for {n_returns} returns (|h| must be < J)")


class SingularMatrixError(NumericalError):
    """Raised when a matrix that must be inverted is singular or ill-conditioned.

    Attributes:
        condition: Estimated condition number (inf if exactly singular)
    """

    def __init__(self, condition: float, context: str = "matrix") -> None:
        self.condition = condition
        self.context = context
        super().__init__(f"Singular {context} (condition number {condition:.3g})")


class FitError(NumericalError):
    """Raised when a model cannot be estimated.

    Attributes:
        model: Model name (e.g. "HAR", "DCC", "DCW")
        reason: Why estimation failed
    """

    def __init__(self, model: str, reason: str) -> None:
        self.model = model
        self.reason = reason
        super().__init__(f"{model} fit failed: {reason}")


class AllocationError(NumericalError):
    """Raised when the exposure-constrained solver does not converge.

    Attributes:
        iterations: Iterations performed before giving up
    """

    def __init__(self, iterations: int, exposure: float) -> None:
        self.iterations = iterations
        self.exposure = exposure
        super().__init__(
            f"Active-set solver did not converge in {iterations} iterations (EC={exposure:g})"
        )


class DegenerateNormalizationError(NumericalError):
    """Raised when raw weight forecasts sum to (almost) zero.

    Attributes:
        total: The coordinate sum that could not be normalized
    """

    def __init__(self, total: float) -> None:
        self.total = total
        super().__init__(f"Cannot normalize weights with coordinate sum {total:.3g}")


class PipelineError(DCWError):
    """Raised when a module error occurs inside a backtest cell.

    Attributes:
        strategy: Strategy label of the failing cell
        day: Date being processed (None during fitting)
        cause: The underlying toolkit error
    """

    def __init__(self, strategy: str, day: date | None, cause: DCWError) -> None:
        self.strategy = strategy
        self.day = day
        self.cause = cause
        where = f"{strategy} on {day.isoformat()}" if day is not None else f"{strategy} (fit)"
        super().__init__(f"{where}: {cause}")
