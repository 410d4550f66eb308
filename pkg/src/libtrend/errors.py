"""Exception hierarchy shared across the pipeline.

Everything raised on bad input derives from LibtrendError so the CLI can
catch one type, print the message to stderr, and exit nonzero.
"""

from __future__ import annotations


class LibtrendError(Exception):
    """Base class for all toolkit errors."""


class MalformedMeta(LibtrendError):
    """App metadata is not valid JSON, misses a required key, or has a bad date."""


class BadInstallBound(LibtrendError):
    """Install ceiling is below the install floor."""


class MalformedRange(LibtrendError):
    """Install-range text does not match the store range grammar."""


class EmptyCorpus(LibtrendError):
    """Corpus root contains no loadable app bundle."""


class DsmSyntaxError(LibtrendError):
    """Disassembly text violates the .dsm grammar.

    Carries the 1-based line number and a hint about what was expected.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.hint = message


class DuplicateField(LibtrendError):
    """A class declares the same (name, descriptor) field twice."""


class MalformedRow(LibtrendError):
    """A row of a catalog or permission-map file is not parseable."""


class DuplicatePrefix(LibtrendError):
    """Two catalog libraries claim the same package prefix."""


class DuplicateApi(LibtrendError):
    """A permission map lists the same API signature twice."""


class EmptyGroup(LibtrendError):
    """A permission map row has an empty any-of permission group."""


class OverlappingEquivClasses(LibtrendError):
    """Permission equivalence classes are not disjoint."""


class HashCollisionSuspected(LibtrendError):
    """Two instances share a version hash but differ in canonical bytes."""


class MissingAppMeta(LibtrendError):
    """A version group references an app the corpus index does not know."""

    def __init__(self, app_id: str):
        super().__init__(f"no metadata for app {app_id!r}")
        self.app_id = app_id


class NoSeriesData(LibtrendError):
    """The dated series has no states in the requested month."""

    def __init__(self, month: str):
        super().__init__(f"no series data for month {month}")
        self.month = month


class MissingFile(LibtrendError):
    """A file named on the command line does not exist."""
