class WordlabError(Exception):
    """Base class for all package errors."""


class ParameterError(WordlabError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(WordlabError, ValueError):
    """Array dimensions disagree."""


class DataError(WordlabError, ValueError):
    """A data file could not be parsed.

    ``row`` and ``column`` are 1-based file coordinates when known.
    """

    def __init__(self, message, path=None, row=None, column=None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column


class ConfigError(WordlabError, ValueError):
    """A run configuration is malformed or names an unknown key."""
