class ToolkitError(Exception):
    """Base error. `exit_code` is what the CLI returns when it escapes a command."""

    exit_code: int = 1


class InputFormatError(ToolkitError, ValueError):
    # Event/series CSV problems: missing columns, bad dates, empty logs
    exit_code = 2


class DiagnosticError(ToolkitError, ValueError):
    exit_code = 3


class TransformError(ToolkitError, ValueError):
    exit_code = 3


class ModelError(ToolkitError):
    exit_code = 4


class DimensionError(ModelError, ValueError):
    pass


class ConfigError(ToolkitError, ValueError):
    exit_code = 5


class MetricError(ModelError, ValueError):
    # Metric undefined for the given targets (e.g. MAPE on all-zero targets)
    pass
