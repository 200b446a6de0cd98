"""Shared moopf-wide constants."""

CASE_SCHEMA_VERSION = "moopf-case/1"
CHECKPOINT_FORMAT_VERSION = 1
MANIFEST_SCHEMA_VERSION = "run_manifest_v1"

# P, Q, |V|, angle; incident-branch |S| columns follow.
NODE_BASE_FEATURES = 4

BUNDLED_CASES = ("case2", "case6", "case33", "case69", "case118")

__all__ = [
    "CASE_SCHEMA_VERSION",
    "CHECKPOINT_FORMAT_VERSION",
    "MANIFEST_SCHEMA_VERSION",
    "NODE_BASE_FEATURES",
    "BUNDLED_CASES",
]
