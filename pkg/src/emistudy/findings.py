"""Validation findings and reports for workbook parsing and schema checks.

A finding always points back into the source it was raised for: a table name,
a 1-based row number (0 for table-level problems) and, where known, a column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ERROR = "error"
WARNING = "warning"

# Finding codes. Each failure class gets its own code so callers can react
# programmatically instead of parsing messages.
MISSING_TABLE = "missing_table"
MALFORMED_HEADER = "malformed_header"
MALFORMED_ROW = "malformed_row"
DUPLICATE_ID = "duplicate_id"
DANGLING_REFERENCE = "dangling_reference"
MISSING_TRANSLATION = "missing_translation"
INVALID_VALUE = "invalid_value"
MISSING_METADATA = "missing_metadata"
EMPTY_QUESTIONNAIRE = "empty_questionnaire"
DIGEST_MISMATCH = "digest_mismatch"
VERSION_CONFLICT = "version_conflict"


@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    table: str
    row: int
    column: str
    message: str

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "table": self.table,
            "row": self.row,
            "column": self.column,
            "message": self.message,
        }


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def error(self, code: str, table: str, row: int, column: str, message: str) -> None:
        self.findings.append(Finding(ERROR, code, table, row, column, message))

    def warn(self, code: str, table: str, row: int, column: str, message: str) -> None:
        self.findings.append(Finding(WARNING, code, table, row, column, message))

    def extend(self, other: "ValidationReport") -> None:
        self.findings.extend(other.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == WARNING]

    @property
    def verdict(self) -> bool:
        """True iff the report carries no error-severity findings."""
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "findings": [f.to_dict() for f in self.findings],
        }
