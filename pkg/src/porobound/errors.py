"""Exception hierarchy shared by every module."""


class PoroboundError(Exception):
    pass


class SpecError(PoroboundError, ValueError):
    """Invalid composite specification (materials, fractions or loading)."""


class InvalidRangeError(PoroboundError, ValueError):
    """A boundary function was asked for outside the range where it is defined."""


class RootNotFoundError(PoroboundError, RuntimeError):
    pass


class RegionUndefinedError(PoroboundError, ValueError):
    """Quantity has no closed form in the requested region (region E)."""


class RegionNotAttainedError(PoroboundError, ValueError):
    """No attaining microstructure is constructed for the requested region."""


class WrongRegionError(PoroboundError, ValueError):
    pass


class BoundaryTooCloseError(PoroboundError, ValueError):
    """No finite-difference stencil fits inside a single region."""
