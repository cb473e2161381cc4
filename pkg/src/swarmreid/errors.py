"""Shared exception types."""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class EmptyDescriptionError(ValueError):
    """A description or query tokenized to nothing usable."""


class EmptyClusterError(ValueError):
    """An operation required a cluster with at least one member."""


class ConfigError(ValueError):
    """Invalid run configuration; the message lists the offending keys."""


class ProviderError(RuntimeError):
    """A remote describer/embedder/summarizer returned an error or garbage."""
