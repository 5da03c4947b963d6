"""Exception types shared across the package."""


class MelcondError(Exception):
    """Base class for all package errors."""


# --- ingest / parsing ---

class MalformedXml(MelcondError):
    pass


class PolyphonicInput(MalformedXml):
    """Two notes share an onset inside a single part."""


class UnsupportedTimeSignature(MelcondError):
    pass


class UnknownChordKind(MelcondError):
    pass


class EmptyScore(MelcondError):
    pass


class SchemaViolation(MelcondError):
    """Canonical JSON document does not match the schema.

    ``path`` points at the offending field, e.g. ``bars[2].notes[0].pitch``.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class MissingHarmony(MelcondError):
    """A bar has no chord and no preceding chord to inherit."""


class OutOfRangeError(MelcondError):
    """A pitch left the 88-key piano range [21, 108]."""


class InvalidArgument(MelcondError):
    pass


# --- numerics ---

class ShapeMismatch(MelcondError):
    pass


class IndexOutOfRange(MelcondError):
    pass


class DegenerateBatch(MelcondError):
    """Batch statistics requested on a batch of fewer than two rows."""


class AllMasked(MelcondError):
    """Loss requested over a mask that selects no positions."""


# --- training / generation ---

class CorpusTooSmall(MelcondError):
    pass


class DivergedNaN(MelcondError):
    """Training produced a non-finite loss; the run was aborted."""


class FingerprintMismatch(MelcondError):
    """Checkpoint pair was trained under different conditioning configurations."""


class SeedTooShort(MelcondError):
    pass


# --- evaluation ---

class EmptySong(MelcondError):
    pass


class SupportMismatch(MelcondError):
    pass


class EmptyCorpus(MelcondError):
    pass


class DegenerateVariance(MelcondError):
    """A metric column has zero variance and cannot be z-normalized."""
