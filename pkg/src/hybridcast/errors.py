"""Exception types shared across the pipeline.

Every error that callers are expected to catch lives here so that the CLI can
map them to exit codes in one place.
"""


class HybridcastError(Exception):
    """Base class for all package-specific errors."""


class DataError(HybridcastError, ValueError):
    """Malformed or unusable input data."""


class EmptyFile(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {detail}")


class NonPositivePrice(DataError):
    def __init__(self, line_no: int, value: float):
        self.line_no = line_no
        super().__init__(f"line {line_no}: close must be positive, got {value!r}")


class DuplicateDate(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"duplicate date {date}")


class TooShort(DataError):
    """Series shorter than an operation's minimum length."""


class NonConvergent(HybridcastError):
    """No candidate model produced a finite objective."""


class DimensionMismatch(HybridcastError, ValueError):
    """Feature matrix / target shapes do not line up."""


class DegenerateTarget(HybridcastError, ValueError):
    """Target has zero variance; the model cannot be scaled."""


class NonFiniteLoss(HybridcastError, FloatingPointError):
    """Training diverged to a non-finite loss."""


class MisalignedForecast(HybridcastError, ValueError):
    """Linear forecasts and learner features disagree on dates/length."""


class LengthMismatch(DimensionMismatch):
    """Paired arrays that must be equally long are not."""


class InsufficientSpan(HybridcastError, ValueError):
    """Series does not span the requested window plan."""


class AllCandidatesFailed(HybridcastError):
    """Every grid candidate raised during fitting or scoring."""


class MisalignedSeries(HybridcastError, ValueError):
    """Two series that must share dates do not."""


class LeakageDetected(HybridcastError, AssertionError):
    """A forecast consumed data dated on or after its target day."""


class ConfigError(HybridcastError, ValueError):
    """Unusable experiment configuration."""
