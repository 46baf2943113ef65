"""Exception types shared across the package."""


class PmtomoError(Exception):
    """Base class for package-specific failures."""


class ParseError(PmtomoError, ValueError):
    """Malformed input file (XYZ, species table, series container, CSV)."""


class ConfigurationError(PmtomoError, ValueError):
    """Inconsistent run configuration (grids, slices, plane spacing)."""


class CapacityError(PmtomoError, ValueError):
    """Structure does not fit in the requested cube."""


class TruncationError(PmtomoError, RuntimeError):
    """Template truncation could not locate the required axial extrema."""


class ExhaustionError(PmtomoError, RuntimeError):
    """The atom search ran out of admissible candidates."""

    def __init__(self, symbol, found, wanted):
        self.symbol = symbol
        self.found = found
        self.wanted = wanted
        super().__init__(
            f"species {symbol}: only {found} of {wanted} requested atoms "
            f"have admissible candidates left")
