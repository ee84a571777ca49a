"""Exception types shared across modules."""


class PreconditionError(ValueError):
    """An operation was called outside its documented input range."""


class UnsupportedHypothesisError(PreconditionError):
    """A required hypothesis failed; ``check`` names the failed check."""

    def __init__(self, check: str, detail: str = ""):
        self.check = check
        super().__init__(f"{check}: {detail}" if detail else check)


class NotSeparableError(PreconditionError):
    """The requested certificate family cannot separate this point."""


class AmbiguousSideError(PreconditionError):
    pass


class SingularPointError(ValueError):
    """A defining function has vanishing gradient at a requested point."""
