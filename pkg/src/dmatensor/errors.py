"""Exception hierarchy shared across the package.

CLI exit-code mapping: configuration and usage problems map to exit 2,
identifiability and missing-input problems to exit 3, and numerical
failures (singular systems, divergence) to exit 4.
"""


class EstimationError(Exception):
    """Base class for errors raised while estimating channel parameters."""


class IdentifiabilityError(EstimationError):
    """Too few training configurations for a unique solution.

    Carries the number of configurations supplied and the minimum
    required by the selected problem type.
    """

    def __init__(self, k: int, k_min: int, detail: str = ""):
        self.k = k
        self.k_min = k_min
        msg = f"K={k} training configurations, but at least K_min={k_min} are required"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class RankDeficiencyError(IdentifiabilityError):
    """A least-squares design matrix is numerically rank deficient."""

    def __init__(self, numerical_rank: int, required_rank: int, detail: str = ""):
        self.numerical_rank = numerical_rank
        self.required_rank = required_rank
        msg = f"design matrix has numerical rank {numerical_rank}, needs {required_rank}"
        if detail:
            msg = f"{msg} ({detail})"
        Exception.__init__(self, msg)


class DivergenceError(EstimationError):
    """The iterative cost became non-finite."""


class MissingInputError(EstimationError):
    """A parameter required by the selected problem type is unavailable."""


class SingularModelError(ArithmeticError):
    """I - Phi*Gamma (or a port-reduction block) is numerically singular."""

    def __init__(self, cond: float, config_index: int | None = None):
        self.cond = cond
        self.config_index = config_index
        where = "" if config_index is None else f" at configuration index {config_index}"
        super().__init__(f"near-singular system{where}: condition estimate {cond:.3e}")


class SymmetryError(ValueError):
    """A core matrix violates the reciprocity (symmetry) precondition."""


class DegenerateInputError(ValueError):
    """Metric input has a zero denominator or too little variation."""


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed; carries a byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class DatasetVersionError(ValueError):
    """The dataset file declares an unsupported schema version."""


class ConfigError(ValueError):
    """An experiment/scenario configuration file is invalid; names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
