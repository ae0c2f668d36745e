"""Located diagnostics shared by the parser and the model validator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    column: int  # 1-based
    length: int = 1

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    span: Optional[SourceSpan]
    code: str
    message: str

    def __str__(self):
        where = str(self.span) if self.span else "<model>"
        return f"{where}: {self.severity} {self.code}: {self.message}"


def error(code: str, message: str, span: Optional[SourceSpan] = None) -> Diagnostic:
    return Diagnostic("error", span, code, message)


def warning(code: str, message: str, span: Optional[SourceSpan] = None) -> Diagnostic:
    return Diagnostic("warning", span, code, message)


def has_errors(diagnostics) -> bool:
    return any(d.severity == "error" for d in diagnostics)
