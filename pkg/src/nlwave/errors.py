"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Invalid run configuration (bad key, bad value, bad combination)."""


class StateError(ValueError):
    """Physically inadmissible state (non-positive density, non-finite momenta)."""


class SolverError(RuntimeError):
    """Finite-volume solver failure (e.g. positivity loss after retries)."""


class AnalysisError(RuntimeError):
    """Post-processing could not produce a result (e.g. no shock/sonic transition)."""


class ExtractionError(RuntimeError):
    """Characteristic trace left the field or data could not be sampled."""


class MeshError(RuntimeError):
    """Characteristic-mesh construction failed at a node."""


class GradientBlowup(ArithmeticError):
    """Riccati transport diverged: characteristics are focusing (shock formation)."""
