"""Exception hierarchy shared across pipeline stages.

The CLI maps these onto exit codes: ConfigError -> 2, ArtifactError -> 3,
everything else raised by a stage -> 4.
"""


class SemnoError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(SemnoError):
    """Bad configuration: unknown keys, missing columns, invalid parameters."""


class ArtifactError(SemnoError):
    """Missing, corrupt, version-mismatched or lineage-mismatched artifact."""


class TrainingDivergedError(SemnoError):
    """Non-finite values appeared during embedding training."""


class NoAnchoredCommunitiesError(SemnoError):
    """Community selection produced an empty anchored set.

    Downstream filtering would mark every sentence as noise, so this is
    surfaced as an explicit error with diagnostics instead.
    """
