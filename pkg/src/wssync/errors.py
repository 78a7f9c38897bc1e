"""Exception hierarchy shared by the knowledge bases, the parser and the engine."""

from __future__ import annotations


class WsSyncError(Exception):
    """Base class for every error raised by this package."""


class UnknownTarget(WsSyncError, KeyError):
    """A change event names a source, relation or attribute that does not exist."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown target"


class UnknownAttribute(WsSyncError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown attribute"


class UnknownWebService(WsSyncError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown web service"


class UnknownView(WsSyncError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown view"


class DanglingReference(WsSyncError, ValueError):
    """A registered item points at a source, relation, attribute or service not yet registered."""


class InvariantViolation(WsSyncError, ValueError):
    """A constraint or schema breaks one of its structural invariants."""


class DuplicateId(WsSyncError, ValueError):
    pass


class ValidationError(WsSyncError, ValueError):
    """A view definition does not match the registered schemas."""


class BoundsExceeded(WsSyncError, ValueError):
    pass


class EsqlError(WsSyncError, ValueError):
    """Base class for E-SQL parse failures."""


class EsqlSyntaxError(EsqlError):
    """Malformed E-SQL text; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class EsqlSemanticError(EsqlError):
    """Well-formed E-SQL with undeclared or duplicate aliases, or arity mismatches."""
