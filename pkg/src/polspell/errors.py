"""Exception types shared across the package."""

from __future__ import annotations


class LoadError(Exception):
    """A data file could not be read or parsed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConfigError(Exception):
    """Invalid configuration or missing resource for a requested method."""
