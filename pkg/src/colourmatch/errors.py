"""Exception hierarchy shared by all solver modules."""


class ColourMatchError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ColourMatchError, ValueError):
    """Malformed instance, demand vector, file or argument."""


class PreconditionError(InvalidInputError):
    """Input is well formed but outside an operation's stated domain."""


class SizeLimitError(ColourMatchError):
    """Instance too large for an exact routine."""


class GroupUnderflowError(ColourMatchError):
    """A matching has fewer edges than the number of groups requested."""


class RegimeError(ColourMatchError):
    """Parameters fall outside the regime a constructive pipeline needs.

    ``check`` names the condition that failed so callers can log it.
    """

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}")
        self.check = check


class ConcentrationFailure(ColourMatchError):
    """No sampled vertex partition met the degree/size certificate."""


class SplitNotFound(ColourMatchError):
    """No fair necklace split within the cut bound could be produced."""


class CertificateFailure(ColourMatchError):
    """A runtime certificate of an intermediate pipeline stage failed."""


class EmbeddingFailure(ColourMatchError):
    """A hypergraph could not be embedded into the Steiner triple system."""


class InvariantViolation(ColourMatchError, AssertionError):
    """Internal consistency check failed; indicates a bug."""
