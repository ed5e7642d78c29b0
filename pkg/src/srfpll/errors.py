"""Exception hierarchy shared by the library and the CLI.

Each error class carries the process exit code the CLI maps it to.
"""


class SrfPllError(Exception):
    exit_code = 1


class ConfigError(SrfPllError, ValueError):
    """Invalid configuration. ``problems`` lists every violated constraint."""

    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class IngestError(SrfPllError, ValueError):
    exit_code = 3

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NumericalError(SrfPllError, ArithmeticError):
    """A step received non-finite input or produced a non-finite state."""

    exit_code = 4


class AnalysisError(SrfPllError, ArithmeticError):
    """Frequency-domain analysis could not produce a result (e.g. no crossover)."""

    exit_code = 4
