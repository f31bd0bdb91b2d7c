"""Exception hierarchy shared across the package.

Every error raised on purpose derives from CrowdMatchError so callers
(CLI, service) can map failures to exit codes / HTTP statuses in one place.
"""

from __future__ import annotations


class CrowdMatchError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DimensionMismatch(CrowdMatchError):
    """Vectors are not comparable: differing dim or provider identity."""

    code = "dimension_mismatch"


class ZeroVector(CrowdMatchError):
    """An all-zero vector where a direction is required (degenerate embedding)."""

    code = "zero_vector"


class EmptyInput(CrowdMatchError):
    """An operation that needs at least one element got none."""

    code = "empty_input"


class EmptyText(CrowdMatchError):
    """Text input was empty (or had no usable tokens)."""

    code = "empty_text"


class DuplicateProvider(CrowdMatchError):
    code = "duplicate_provider"


class UnknownProvider(CrowdMatchError):
    code = "unknown_provider"


class BackendUnavailable(CrowdMatchError):
    """An embedding backend (local runtime or remote endpoint) cannot be reached."""

    code = "backend_unavailable"


class ProviderUnavailable(CrowdMatchError):
    """A translation/classification adapter is down and no cache entry exists."""

    code = "provider_unavailable"


class UnsupportedLanguage(CrowdMatchError):
    code = "unsupported_language"


class WorkspaceError(CrowdMatchError):
    code = "workspace_error"


class SchemaVersionMismatch(WorkspaceError):
    code = "schema_version_mismatch"


class ParseError(CrowdMatchError):
    """A row/record failed to parse; carries the 1-based line number."""

    code = "parse_error"

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateId(CrowdMatchError):
    code = "duplicate_id"


class AuthFailure(CrowdMatchError):
    code = "auth_failure"


class NetworkFailure(CrowdMatchError):
    """Transport-level failure while talking to a remote service."""

    code = "network_failure"


class RateLimited(NetworkFailure):
    """Remote said to slow down and retries were exhausted."""

    code = "rate_limited"


class NoEmbeddings(CrowdMatchError):
    code = "no_embeddings"


class UnknownReview(CrowdMatchError):
    code = "unknown_review"


class UnknownIssue(CrowdMatchError):
    code = "unknown_issue"


class MissingResult(CrowdMatchError):
    code = "missing_result"


class EmptyGoldSet(CrowdMatchError):
    code = "empty_gold_set"
