"""Exception hierarchy.

Every error raised deliberately by the toolkit derives from
:class:`ProfileRiskError`, so the CLI can map it to exit code 1 and report it
as structured JSON.
"""
from __future__ import annotations

from typing import Any


class ProfileRiskError(Exception):
    """Base class. ``details`` is merged into the CLI's error JSON."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


class SchemaError(ProfileRiskError):
    pass


class ParseError(ProfileRiskError):
    def __init__(self, line: int, column: int | None, reason: str, path: str | None = None) -> None:
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {reason}", line=line, column=column, reason=reason, path=path)
        self.line = line
        self.column = column
        self.reason = reason


class ValidationError(ProfileRiskError):
    def __init__(self, key: Any, reason: str, line: int | None = None) -> None:
        msg = f"record {key!r}: {reason}" + (f" (line {line})" if line is not None else "")
        super().__init__(msg, key=list(key) if isinstance(key, tuple) else key, reason=reason, line=line)
        self.key = key
        self.reason = reason
        self.line = line


class DistributionError(ValidationError):
    pass


class UnknownSpeakerError(ProfileRiskError):
    def __init__(self, missing: list[str]) -> None:
        super().__init__(f"unknown speaker ids: {', '.join(missing)}", missing=missing)
        self.missing = missing


class GranularityError(ProfileRiskError):
    pass


class EmptySpeaker(ProfileRiskError):
    pass


class EmptyDataset(ProfileRiskError):
    pass


class SchemaMismatch(ProfileRiskError):
    pass


class SpeakerSetMismatch(ProfileRiskError):
    pass


class DimensionMismatch(ProfileRiskError):
    pass


class AccuracyOutOfRange(ProfileRiskError):
    pass


class KeyMismatch(ProfileRiskError):
    pass
