"""Exception taxonomy shared across the package.

Exit-code mapping used by the CLI:
  ParseError / ValidationError / ConfigurationError -> 1
  ScorerError (incl. TransportError, OutOfVocabularyError) -> 2
  InternalInvariantError -> 3
"""


class VarrError(Exception):
    """Base class for all package errors."""


class ParseError(VarrError):
    """Malformed input file; message names the offending line."""


class ValidationError(VarrError):
    """Corpus-level rule broken (duplicate id, missing field, bad enum)."""


class ConfigurationError(VarrError):
    """Unusable configuration: unknown template, bad flag combination."""


class UnsupportedSchemeError(ConfigurationError):
    """Tokenization scheme requested from a scorer that cannot provide it."""


class ScorerError(VarrError):
    """Base class for failures inside a likelihood scorer."""


class OutOfVocabularyError(ScorerError):
    """A symbol fell outside the tabular model's declared vocabulary."""

    def __init__(self, symbol: str):
        super().__init__(f"symbol not in vocabulary: {symbol!r}")
        self.symbol = symbol


class TransportError(ScorerError):
    """Remote scorer unreachable after retries; carries the attempt count."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class ProtocolError(ScorerError):
    """Remote scorer answered, but not with the documented wire format."""


class BatchScoreError(ScorerError):
    """One request of a batch failed; carries the failing index."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"batch request {index} failed: {cause}")
        self.index = index
        self.cause = cause


class EmptyNegativePoolError(VarrError):
    """No usable wrong answers remain after filtering the gold answer."""


class InternalInvariantError(VarrError):
    """A law the engine promises to uphold was observed broken."""
