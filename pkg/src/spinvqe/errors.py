"""Error types shared across the package."""


class ConfigurationError(ValueError):
    """Bad structural input: sizes, indices, unknown kinds, malformed configs."""


class ValidationError(ValueError):
    """Semantically invalid input: non-commuting symmetries, non-orthogonal
    initial states, non-Hermitian observables and the like."""
