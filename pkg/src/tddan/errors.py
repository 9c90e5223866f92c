"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class InvalidConfiguration(ValueError):
    pass


class DegenerateSource(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    pass


class EmptySpeaker(ValueError):
    """A speaker has no bins selected by its IBM and the presence mask."""

    def __init__(self, speaker, message=None):
        self.speaker = speaker
        super().__init__(message or f"speaker {speaker} has no selected bins")


class InvalidState(RuntimeError):
    pass


class UnsupportedCondition(ValueError):
    pass


class WavParseError(ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")
