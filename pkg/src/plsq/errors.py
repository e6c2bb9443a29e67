"""Exception hierarchy shared by all plsq modules."""

from __future__ import annotations


class PlsqError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(PlsqError):
    """A corpus or cache file is malformed or violates an invariant."""

    def __init__(self, message: str, task_id: str | None = None, field: str | None = None):
        self.task_id = task_id
        self.field = field
        parts = [message]
        if task_id is not None:
            parts.append(f"task={task_id!r}")
        if field is not None:
            parts.append(f"field={field!r}")
        super().__init__("; ".join(parts))


class SqlError(PlsqError):
    """Base class for parse-time SQL failures."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class SqlSyntaxError(SqlError):
    """The statement does not match the supported grammar."""


class ResolutionError(SqlError):
    """A table or column reference cannot be resolved against the schema."""


class UnsupportedSqlError(SqlError):
    """The statement parses as SQL but uses constructs outside the supported subset."""


class ExecutionError(PlsqError):
    """Evaluation of a resolved statement failed (the candidate has no outcome)."""


class EmptyCandidateSetError(PlsqError):
    """No valid candidates remain after filtering."""


class EmptyResultSetError(PlsqError):
    """A decision or selection would leave the session with zero candidates."""


class UndoAtRootError(PlsqError):
    """Undo requested at turn 0."""


class VariableNotFoundError(PlsqError):
    """The referenced decision variable is not in the current ranking."""


class SamplingError(PlsqError):
    """Candidate sampling from the language-model endpoint failed."""


class ComparatorError(PlsqError):
    """The external embedding comparator is unreachable or misconfigured."""
