"""Exception hierarchy shared by every cardgauge module."""

from __future__ import annotations


class CardGaugeError(Exception):
    """Base class for all errors raised by cardgauge."""


class SchemaError(CardGaugeError):
    """A taxonomy, stats, or report document does not match its schema.

    ``location`` is a dotted/indexed path into the document (for example
    ``modules[2].children[0]``) when one is known.
    """

    def __init__(self, message: str, location: str | None = None):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DuplicateId(SchemaError):
    pass


class AliasCollision(SchemaError):
    pass


class DepthExceeded(SchemaError):
    pass


class ModuleCountViolation(SchemaError):
    pass


class UnknownModule(CardGaugeError):
    def __init__(self, module_id: str):
        self.module_id = module_id
        super().__init__(f"unknown module: {module_id!r}")


class UnknownParameter(CardGaugeError):
    def __init__(self, parameter_id: str, context: str | None = None):
        self.parameter_id = parameter_id
        msg = f"unknown parameter: {parameter_id!r}"
        super().__init__(f"{context}: {msg}" if context else msg)


class ParseError(CardGaugeError):
    """A card document could not be parsed.

    Carries the 1-based ``line`` and/or a key ``path`` when available.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(path)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class EmptyDocument(ParseError):
    def __init__(self, message: str = "document is empty"):
        super().__init__(message)


class EmptyCorpus(CardGaugeError):
    pass


class DuplicateProject(CardGaugeError):
    pass


class VersionMismatch(CardGaugeError):
    pass


class DegenerateCorpusWarning(UserWarning):
    """The corpus documents no parameter at all, so every baseline is zero."""
