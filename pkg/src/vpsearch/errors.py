"""Exception hierarchy shared across the package."""


class VpsearchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VpsearchError):
    """Invalid configuration value, manifest, or landscape definition."""


class ManifestError(ConfigurationError):
    """Task manifest failed validation; message lists every violation."""


class LifecycleError(VpsearchError):
    """Node operation incompatible with the node's current status."""


class WrongBranchError(VpsearchError):
    """Priority formula called for the wrong execution status."""


class NormalizationError(VpsearchError):
    """Self-evaluation score outside its normalized domain."""


class ExhaustedFrontierError(VpsearchError):
    """No non-rejected unexecuted node is left to select."""


class IdeationError(VpsearchError):
    """Idea generation or self-evaluation failed after retries."""


class CompileError(VpsearchError):
    """Idea could not be turned into a valid pipeline program."""


class ProgramParseError(VpsearchError):
    """Pipeline document is not syntactically well-formed."""


class GatewayError(VpsearchError):
    """Chat backend failed after all retry attempts."""


class TransientBackendError(VpsearchError):
    """Retryable backend failure (timeouts, 5xx, connection resets)."""


class ToolClientError(VpsearchError):
    """Visual tool call failed or the server rejected the request."""


class ToolProtocolError(ToolClientError):
    """Tool request/response does not match the published schema."""


class SampleExecutionError(VpsearchError):
    """A pipeline step failed for one sample; isolated per sample."""


class SnapshotError(VpsearchError):
    """Snapshot file is missing, corrupt, or from a newer schema."""


class AbortRequested(VpsearchError):
    """Run interrupted at an iteration boundary; snapshot is resumable."""
