"""Exception types shared across the package."""


class PedscanError(Exception):
    """Base class for pedscan errors."""


class InputFormatError(PedscanError):
    """Raised for malformed annotation files, manifests, or undecodable images."""


class ModelVersionError(PedscanError):
    """Raised when a model file declares an unsupported format version."""
