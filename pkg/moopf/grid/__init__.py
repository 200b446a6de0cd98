"""Grid data model, case files, graph topology and node features."""

from moopf.grid.types import (
    Branch,
    Bus,
    Generator,
    GridCase,
    RadialTree,
    RenewableCoeffs,
    ThermalCoeffs,
)
from moopf.grid.loader import case_from_mapping, case_path, load_case
from moopf.grid.topology import GraphTopology, build_topology
from moopf.grid.features import GraphSnapshot, feature_width, snapshot

__all__ = [
    "Branch",
    "Bus",
    "Generator",
    "GridCase",
    "RadialTree",
    "RenewableCoeffs",
    "ThermalCoeffs",
    "case_from_mapping",
    "case_path",
    "load_case",
    "GraphTopology",
    "build_topology",
    "GraphSnapshot",
    "feature_width",
    "snapshot",
]
