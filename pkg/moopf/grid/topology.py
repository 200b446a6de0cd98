from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from moopf.errors import TopologyError
from moopf.grid.types import GridCase

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphTopology:
    adjacency: np.ndarray
    laplacian: np.ndarray
    scaled_laplacian: np.ndarray
    lambda_max: float


def largest_eigenvalue(matrix: np.ndarray, *, rtol: float = 1e-10, max_iter: int = 500_000) -> float:
    """Power iteration on a symmetric PSD matrix; stops on residual <= rtol * lambda."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    vec = np.random.default_rng(0).standard_normal(n)
    vec /= np.linalg.norm(vec)
    lam = 0.0
    for _ in range(max_iter):
        w = matrix @ vec
        lam = float(vec @ w)
        if lam <= 0.0:
            return 0.0
        residual = float(np.linalg.norm(w - lam * vec))
        if residual <= rtol * lam:
            return lam
        vec = w / np.linalg.norm(w)
    _LOGGER.warning("power iteration hit max_iter", extra={"max_iter": max_iter, "lambda": lam})
    return lam


def build_topology(case: GridCase) -> GraphTopology:
    n = case.n_buses
    adj = np.zeros((n, n))
    for br in case.branches:
        i = case.bus_index(br.from_bus)
        j = case.bus_index(br.to_bus)
        adj[i, j] = 1.0
        adj[j, i] = 1.0
    n_comp, _ = connected_components(csr_matrix(adj), directed=False)
    if n_comp != 1:
        raise TopologyError(f"{case.name}: graph has {n_comp} connected components")
    laplacian = np.diag(adj.sum(axis=1)) - adj
    lam = largest_eigenvalue(laplacian)
    if lam > 0.0:
        scaled = 2.0 * laplacian / lam - np.eye(n)
    else:
        scaled = -np.eye(n)
    return GraphTopology(adjacency=adj, laplacian=laplacian, scaled_laplacian=scaled, lambda_max=lam)
