"""Exception hierarchy shared by the library and the CLI.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""


class PipelineError(Exception):
    exit_code = 1


class ConfigError(PipelineError):
    """Bad parameters, flags, or configuration documents."""

    exit_code = 2


class DataError(PipelineError):
    """Malformed, missing, or inconsistent input data."""

    exit_code = 3


class EmptyRegionError(DataError):
    """A region mask with zero pixels where downstream ops need a ROI."""


class NumericError(PipelineError):
    """Data-dependent numeric failure (degenerate range, divergence, ...)."""

    exit_code = 4
