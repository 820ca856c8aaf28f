"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
TrainingError -> 3.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration or inconsistent arguments."""


class DataError(ValueError):
    """Malformed, missing or out-of-domain input data."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss or otherwise could not proceed."""


class RankDeficiencyError(DataError):
    """A regression design matrix is not of full column rank."""
