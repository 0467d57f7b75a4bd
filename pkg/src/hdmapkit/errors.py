"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when operation inputs violate a documented precondition."""


class InvalidConfigError(ValueError):
    """Raised when a configuration value is out of its allowed range."""


class DegenerateGeometryError(ValueError):
    """Raised for geometry that cannot be processed (e.g. zero-length polylines)."""


class MapFormatError(ValueError):
    """Raised when a map or grid file cannot be parsed.

    Carries enough context (file, location, field) to point at the offending
    piece of input.
    """

    def __init__(self, path, message, field=None, line=None):
        self.path = str(path)
        self.field = field
        self.line = line
        loc = self.path
        if line is not None:
            loc += f":{line}"
        if field:
            loc += f": {field}"
        super().__init__(f"{loc}: {message}")
