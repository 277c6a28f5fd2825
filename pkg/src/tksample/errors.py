"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or configuration violates a stated contract.

    The CLI maps this class (and subclasses) to exit code 2; everything
    else exits 1.
    """


class ManifestError(ValidationError):
    """One or more manifest records failed to parse or validate.

    `failures` holds one message per failing record, prefixed with the
    1-based line number.
    """

    def __init__(self, failures: list[str]):
        self.failures = list(failures)
        super().__init__("\n".join(self.failures))


class ClipFormatError(ValueError):
    """A packed clip or packed-frames byte stream is malformed."""


class FrameSourceError(ValueError):
    """A requested frame cannot be retrieved from a frame source."""
