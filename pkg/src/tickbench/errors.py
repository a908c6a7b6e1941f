"""Exception types shared across the toolkit."""


class TickbenchError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(TickbenchError):
    """A call violated an operation precondition."""


class InvalidData(TickbenchError):
    """Input values violate a domain invariant (e.g. non-positive price)."""


class NotFound(TickbenchError):
    """The requested row, partition or predecessor does not exist."""


class CsvFormatError(TickbenchError):
    """A CSV row could not be parsed against the fixed schema."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f" in {path}"
        if line is not None:
            where += f" at line {line}"
        super().__init__(f"{message}{where}")


class ConfigurationError(TickbenchError):
    """A template, plan or backend configuration is incomplete or contradictory."""


class SchemaMismatch(TickbenchError):
    """A backend result does not map onto the benchmark's canonical columns."""


class BackendError(TickbenchError):
    """A backend operation failed (connection, query, ingest)."""

    def __init__(self, backend_id: str, message: str):
        self.backend_id = backend_id
        super().__init__(f"[{backend_id}] {message}")


class CapabilityUnsupported(BackendError):
    """The backend does not implement the requested optional capability."""


class HarnessError(TickbenchError):
    """The measurement protocol could not be carried out."""
