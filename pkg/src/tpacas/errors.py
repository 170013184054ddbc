"""Exception types shared across the package."""


class GroupError(ValueError):
    """Invalid or inconsistent public group parameters."""


class NoInverseError(ArithmeticError):
    """A negative power was requested of a non-invertible base."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class RoutingError(LookupError):
    """A message was addressed to or from an unregistered endpoint."""


class ProtocolError(RuntimeError):
    """A party received a message it did not expect, or lacks state it needs."""


class ComparisonFailed(ProtocolError):
    """A comparison proof did not verify."""

    def __init__(self, message: str, comparison: dict | None = None) -> None:
        super().__init__(message)
        self.comparison = comparison or {}


class OpeningRejected(ProtocolError):
    """A commitment opening did not match the published commitment."""

    def __init__(self, message: str, party: str | None = None) -> None:
        super().__init__(message)
        self.party = party


class SetupError(ValueError):
    """The auction cannot be set up with the supplied configuration."""


class BidRejected(ValueError):
    """A bid violates the bidding rules and was not published."""

    def __init__(self, message: str, agent: str | None = None) -> None:
        super().__init__(message)
        self.agent = agent


class InstanceError(ValueError):
    """Malformed auction instance input."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
