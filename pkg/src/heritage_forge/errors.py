"""Exception types shared across the toolkit.

Every error carries a machine-readable ``code``. Loaders that can find
several defects at once raise a single exception whose ``problems`` list
holds one :class:`Problem` per defect.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Problem:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class HeritageForgeError(Exception):
    code = "ERROR"

    def __init__(self, message: str, *, code: str | None = None,
                 problems: list[Problem] | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.problems = list(problems or [])

    @property
    def codes(self) -> set[str]:
        return {p.code for p in self.problems} or {self.code}


class OntologyError(HeritageForgeError):
    code = "ONTOLOGY_ERROR"


class UnknownClassError(OntologyError, KeyError):
    code = "UNKNOWN_CLASS"

    def __str__(self) -> str:
        return self.args[0]


class RecordError(HeritageForgeError):
    code = "MALFORMED_DOCUMENT"


class RuleError(HeritageForgeError):
    code = "MALFORMED_TEMPLATE"


class ThesaurusError(HeritageForgeError):
    code = "MALFORMED_DOCUMENT"


class PredictionError(HeritageForgeError):
    code = "MALFORMED_DOCUMENT"


class RecordNotFoundError(HeritageForgeError):
    code = "RECORD_NOT_FOUND"


class ParseError(HeritageForgeError):
    """A parse failure at a known position (1-based line and column)."""

    code = "SYNTAX_ERROR"

    def __init__(self, message: str, line: int, col: int, *, source: str | None = None,
                 code: str | None = None):
        self.line = line
        self.col = col
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}", code=code)


class QueryError(ParseError):
    pass

