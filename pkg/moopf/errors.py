from __future__ import annotations


class MoopfError(ValueError):
    """Base class for every error raised by moopf on bad input or state."""


class CaseFormatError(MoopfError):
    """Case file missing, unparsable, or failing schema validation."""


class TopologyError(MoopfError):
    """Branch set is not a connected radial tree, or ids/counts disagree."""


class ConvergenceError(MoopfError):
    """An operation that needs a converged power-flow solution got one that is not."""


class ShapeError(MoopfError):
    """Tensor, vector or parameter widths do not line up."""


class ConfigError(MoopfError):
    """Run config is invalid or internally inconsistent."""


class CheckpointError(MoopfError):
    """Checkpoint is unreadable, of an unknown version, or mismatched with the env."""


__all__ = [
    "MoopfError",
    "CaseFormatError",
    "TopologyError",
    "ConvergenceError",
    "ShapeError",
    "ConfigError",
    "CheckpointError",
]
