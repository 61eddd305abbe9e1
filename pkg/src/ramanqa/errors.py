"""Exception hierarchy shared across the package.

The CLI maps these onto exit-code categories, so new failure modes should
subclass the closest existing error rather than raising bare ValueErrors
across module boundaries.
"""


class RamanQAError(Exception):
    """Base class for all package errors."""


class ConfigError(RamanQAError):
    """Bad or unresolvable configuration."""


class SpectrumError(RamanQAError):
    """Invalid spectrum data or preprocessing parameters."""


class StoreError(RamanQAError):
    """Peak store availability or schema problem."""


class IngestError(StoreError):
    """Batch insertion rejected (duplicates, dangling refs, bad family)."""


class SqlValidationError(RamanQAError):
    """Planner SQL rejected by the safety validator."""

    def __init__(self, reason: str, sql: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.sql = sql


class SqlExecutionError(RamanQAError):
    """Validated SQL failed at execution; carries the engine message."""


class CorpusError(RamanQAError):
    """Document extraction or chunking failure."""


class EmbeddingError(RamanQAError):
    """Embedding provider returned unusable output."""


class IndexLoadError(RamanQAError):
    """Vector index file is corrupt or has an incompatible version."""


class ProviderError(RamanQAError):
    """Chat-completion or embedding provider failure."""


class RetryableProviderError(ProviderError):
    """Transient transport failure; safe to retry."""


class PlanError(RamanQAError):
    """Planner could not produce a valid query plan."""


class PlanParseError(PlanError):
    """Planner response missing required fields or malformed."""


class QAError(RamanQAError):
    """Both evidence legs failed or synthesis is impossible."""


class JudgeError(RamanQAError):
    """Judge response could not be mapped onto the rubric."""


class EvalError(RamanQAError):
    """Benchmark harness failure outside individual questions."""
