"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter set is inconsistent or out of its allowed range."""


class SizeMismatch(ValueError):
    """An input array does not have the size implied by the parameters."""


class ShapeError(ValueError):
    """A tensor shape does not match what the model was built for."""


class StateError(RuntimeError):
    """An operation was called before the state it needs exists."""


class FormatError(ValueError):
    """A serialized file is corrupt, tampered with, or of the wrong version."""
