"""
Error hierarchy for relcull

Every error raised on purpose by the package derives from RelcullError so the
command line can map it onto an exit code.
"""

from typing import Optional


class RelcullError(Exception):
    """Base class for all relcull errors"""

    exit_code = 2


class UsageError(RelcullError):
    """Bad command-line usage"""

    exit_code = 1


class PreconditionError(RelcullError, ValueError):
    """An operation was called with arguments outside its contract"""

    exit_code = 1


class DataError(RelcullError):
    """Input data could not be used"""


class DatasetParseError(DataError):
    """Malformed JSON or JSONL input"""

    def __init__(self, message: str, source: str = "", offset: Optional[int] = None, line: Optional[int] = None):
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.source = source
        self.offset = offset
        self.line = line


class SchemaError(DataError):
    """A required field is missing or has the wrong type"""

    def __init__(self, field: str, source: str = "", detail: str = ""):
        message = f"missing or invalid field '{field}'"
        if source:
            message = f"{source}: {message}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.field = field
        self.source = source


class FormatVersionError(DataError):
    """Canonical file header names an unsupported format or version"""


class EmbeddingFormatError(DataError):
    """Word-vector file line could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class MappingError(DataError):
    """Predicate cluster mapping does not cover a label"""

    def __init__(self, label: str):
        super().__init__(f"predicate '{label}' is missing from the cluster mapping")
        self.label = label


class StageError(RelcullError):
    """A curation stage failed; the stage name is attached"""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
