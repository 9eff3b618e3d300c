"""Error taxonomy, message normalization and retry similarity.

Every failed execution is classified into exactly one class from the last
exception-name token of its stderr.  Normalized messages replace volatile
fragments (paths, quoted literals, hex, integers) with placeholders so that
two failures differing only in a line number or a path compare as similar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class ErrorClass(Enum):
    Value = "Value"
    Key = "Key"
    File = "File"
    Model = "Model"
    Type = "Type"
    Timeout = "Timeout"
    Index = "Index"
    Assertion = "Assertion"
    Name = "Name"
    Attribute = "Attribute"
    Indentation = "Indentation"
    Other = "Other"


_EXCEPTION_NAME_MAP = {
    "ValueError": ErrorClass.Value,
    "KeyError": ErrorClass.Key,
    "FileNotFoundError": ErrorClass.File,
    "IOError": ErrorClass.File,
    "OSError": ErrorClass.File,
    "TypeError": ErrorClass.Type,
    "TimeoutError": ErrorClass.Timeout,
    "IndexError": ErrorClass.Index,
    "AssertionError": ErrorClass.Assertion,
    "NameError": ErrorClass.Name,
    "AttributeError": ErrorClass.Attribute,
    "IndentationError": ErrorClass.Indentation,
    "ModelError": ErrorClass.Model,
}

_EXCEPTION_TOKEN_RE = re.compile(r"\b([A-Za-z_][A-Za-z0-9_]*(?:Error|Exception))\b")
DEFAULT_MODEL_PATTERNS = (r"\bmodel\b", r"\bestimator\b", r"fit\(")


def classify_error(stderr: str, timed_out: bool = False,
                   model_patterns: tuple[str, ...] = DEFAULT_MODEL_PATTERNS) -> ErrorClass:
    """Map captured stderr to one error class; total and deterministic."""
    if timed_out:
        return ErrorClass.Timeout
    text = stderr or ""
    tokens = _EXCEPTION_TOKEN_RE.findall(text)
    if tokens:
        mapped = _EXCEPTION_NAME_MAP.get(tokens[-1])
        if mapped is not None:
            return mapped
    final_line = ""
    for line in reversed(text.splitlines()):
        if line.strip():
            final_line = line.strip()
            break
    lowered = final_line.lower()
    if any(re.search(pattern, lowered) for pattern in model_patterns):
        return ErrorClass.Model
    return ErrorClass.Other


_QUOTED_RE = re.compile(r"'[^']*'|\"[^\"]*\"")
_PATH_RE = re.compile(r"(?:~|\.{1,2})?(?:/[\w.\-+~]+)+/?")
_HEX_RE = re.compile(r"\b0[xX][0-9a-fA-F]+\b")
_INT_RE = re.compile(r"\d+")
_SPACE_RE = re.compile(r"[ \t]+")


def normalize_message(message: str) -> str:
    """Replace volatile fragments with placeholders; idempotent."""
    text = _QUOTED_RE.sub("<str>", message or "")
    text = _PATH_RE.sub("<path>", text)
    text = _HEX_RE.sub("<hex>", text)
    text = _INT_RE.sub("<int>", text)
    return _SPACE_RE.sub(" ", text).strip()


def final_exception_line(stderr: str) -> str:
    for line in reversed((stderr or "").splitlines()):
        if line.strip():
            return line.strip()
    return (stderr or "").strip()


@dataclass
class ErrorRecord:
    error_class: ErrorClass
    message: str
    normalized: str
    source: str  # runtime | unit_test | timeout

    @classmethod
    def from_stderr(cls, stderr: str, timed_out: bool = False,
                    source: str = "runtime") -> ErrorRecord:
        # the record keeps the concise final exception line; traceback frames
        # would swamp the token-set similarity between distinct failures
        message = final_exception_line(stderr)
        if timed_out:
            source = "timeout"
            if not message:
                message = "TimeoutError: execution timed out"
        return cls(
            error_class=classify_error(stderr, timed_out=timed_out),
            message=message,
            normalized=normalize_message(message),
            source=source,
        )

    def to_json(self) -> dict:
        return {
            "class": self.error_class.value,
            "message": self.message,
            "normalized": self.normalized,
            "source": self.source,
        }


@dataclass
class ExecutionResult:
    exit_ok: bool
    stdout: str
    stderr: str
    duration: float
    error: ErrorRecord | None = None

    def __post_init__(self):
        if self.exit_ok == (self.error is not None):
            raise ValueError("exit_ok and error are mutually exclusive")


_TOKEN_SPLIT_RE = re.compile(r"[a-z0-9_<>]+")


def token_set(normalized: str) -> frozenset[str]:
    return frozenset(_TOKEN_SPLIT_RE.findall(normalized.lower()))


def jaccard(a: str, b: str) -> float:
    sa, sb = token_set(a), token_set(b)
    if not sa and not sb:
        return 1.0
    union = sa | sb
    return len(sa & sb) / len(union)


def similar_history(records: list[ErrorRecord], window: int,
                    threshold: float = 0.8) -> bool:
    """True when the last `window` normalized messages are pairwise similar."""
    if len(records) < window:
        return False
    tail = [r.normalized for r in records[-window:]]
    for i in range(len(tail)):
        for j in range(i + 1, len(tail)):
            if jaccard(tail[i], tail[j]) < threshold:
                return False
    return True
