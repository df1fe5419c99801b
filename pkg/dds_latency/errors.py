class ModelError(Exception):
    """
    Base class for every error raised by the latency engine, the simulator and the reference loader.
    """


class ScenarioError(ModelError):
    """
    A scenario failed validation.

    Attributes:
        report (ValidationReport): The diagnostics that caused the rejection.
    """

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.errors) or "invalid scenario")


class DistributionError(ModelError):
    """
    An unacked-count distribution has negative entries or does not sum to one.
    """


class DomainError(ModelError):
    """
    A binomial failure count was requested outside 0 <= x <= y.
    """


class IncommensurableError(ModelError):
    """
    The publish and heartbeat periods do not share the 0.1 ms time grid.
    """


class CycleMismatchError(ModelError):
    """
    Two steady-state cycles of different length were compared.
    """


class ReferenceDataError(ModelError):
    """
    The reference table is malformed.

    Attributes:
        line (int or None): 1-based line number in the file, header included.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
