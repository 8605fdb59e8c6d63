"""Exception hierarchy shared by all movestab modules."""


class MovestabError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(MovestabError):
    """Failure of a numerical construction (CLI exit code 3)."""


class InvalidProfileError(MovestabError, ValueError):
    pass


class BracketError(NumericalError):
    """Target value lies outside the range of a monotone map on its bracket."""


class MonotonicityError(NumericalError):
    pass


class DomainError(NumericalError, ValueError):
    """Evaluation outside the domain of a map or of a computed field."""


class ResolutionError(NumericalError):
    """A sampled conjugacy came out non-monotone (grid too coarse or rho near-rational)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularFeedbackError(NumericalError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InadmissibleDataError(MovestabError, ValueError):
    pass


class WindowError(NumericalError):
    """Fit window contains non-positive energies (probably the extinction branch)."""


class ConfigurationError(MovestabError, ValueError):
    pass


class ScenarioError(MovestabError):
    """Scenario file failed to parse or validate (CLI exit code 2)."""


class PipelineError(MovestabError):
    """A module error re-raised with the name of the pipeline stage it came from."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
