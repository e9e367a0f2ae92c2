"""Exception hierarchy shared by every module of the toolkit."""


class SfstError(Exception):
    """Base class for domain errors (mapped to exit code 2 by the CLI)."""


class DivergentClosure(SfstError):
    """A cycle with weight >= 1 makes a closure sum infinite."""


class DivergentTotal(DivergentClosure):
    """The grand total of an automaton is infinite."""


class ZeroMassState(SfstError):
    """A state cannot reach termination, so it cannot be rescaled."""


class InvalidState(SfstError, IndexError):
    pass


class InvalidLabel(SfstError, ValueError):
    pass


class ParseError(SfstError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EpsilonAmbiguity(SfstError):
    """Both composition operands carry epsilons on the shared tape."""


class EmptyAutomaton(SfstError):
    pass


class NotNormalized(SfstError):
    pass


class EpsilonCyclic(SfstError):
    pass


class StepLimitExceeded(SfstError):
    pass


class InvalidPosterior(SfstError, ValueError):
    pass


class EmptySample(SfstError):
    pass
