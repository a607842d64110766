"""Exception hierarchy for the igprm package.

Everything raised on bad inputs or malformed files derives from IgprmError so
the CLI can map it to exit code 2; plain OSError keeps meaning "I/O failed"
(exit code 3).
"""


class IgprmError(Exception):
    """Base class for all igprm-specific errors."""


# --- environment generation ---

class GenerationFailed(IgprmError):
    """Synthetic map generation exhausted its rejection budget."""


class PlacementFailed(IgprmError):
    """Step obstacles could not be placed without overlap."""


class UnreadableMap(IgprmError):
    """Map file is missing, malformed, or not a supported PGM."""


class NoValidCrop(IgprmError):
    """No 64x64 crop with enough free space was found."""


class ClassKindMismatch(IgprmError):
    """Instruction class does not apply to this environment kind."""


# --- instructions / embeddings ---

class TemplateExhausted(IgprmError):
    """Template grid yields fewer distinct sentences than requested."""


class EmptyText(IgprmError):
    """Instruction text has no alphanumeric tokens."""


class NetworkError(IgprmError):
    """Embedding endpoint unreachable after retries."""


class MissingCredential(IgprmError):
    """Credential environment variable is unset or empty."""


class DimensionMismatch(IgprmError):
    """Vector or tensor dimensions do not match the expected shape."""


class InvalidDim(IgprmError):
    """Requested projection dimension is out of range."""


# --- weight files ---

class BadMagic(IgprmError):
    """Weight file does not start with the IGPW magic."""


class VersionUnsupported(IgprmError):
    """Weight file version is newer than this reader understands."""


class ShapeMismatch(IgprmError):
    """A stored tensor does not match the architecture enumeration."""


class TruncatedFile(IgprmError):
    """Weight file ended before all declared bytes were read."""


# --- planning ---

class SamplingStalled(IgprmError):
    """Node sampling rejected too many proposals (empty free space)."""


class DegenerateEdge(IgprmError):
    """Edge endpoints coincide."""


# --- metrics ---

class EmptyResultSet(IgprmError):
    """No episodes to aggregate."""


class EmptySequence(IgprmError):
    """DTW input sequence is empty."""


class DegeneratePath(IgprmError):
    """Path has fewer than two points or zero length."""


# --- dataset / bench ---

class OracleFailed(IgprmError):
    """Ground-truth planner failed to produce a valid path after retries."""


class DatasetInvalid(IgprmError):
    """Dataset directory is missing, incomplete, or marked failed."""


class MissingWeights(IgprmError):
    """A learned-model run was requested without a weight file."""


class EmptyReport(IgprmError):
    """Benchmark grid produced no rows."""
