"""Fixed spatial-correlation substitutes for the learned attention (ablation arms)."""

from __future__ import annotations

import numpy as np
import torch

from moopf.astgcn.layers import DTYPE
from moopf.errors import ShapeError


def _row_normalize(mat: torch.Tensor) -> torch.Tensor:
    sums = mat.sum(dim=-1, keepdim=True)
    n = mat.shape[-1]
    uniform = torch.full_like(mat, 1.0 / n)
    return torch.where(sums > 0.0, mat / sums.clamp_min(1e-300), uniform)


def cosine_similarity(x: torch.Tensor) -> torch.Tensor:
    """Row-stochastic (B, N, N) from cosine similarity of node histories, shifted to [0, 1]."""
    if x.dim() != 4:
        raise ShapeError(f"cosine similarity expects (B, N, F, T), got {tuple(x.shape)}")
    flat = x.reshape(x.shape[0], x.shape[1], -1)
    norms = flat.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    unit = flat / norms
    cos = torch.matmul(unit, unit.transpose(-1, -2))
    return _row_normalize(0.5 * (cos + 1.0))


def jaccard_similarity(adjacency: np.ndarray) -> torch.Tensor:
    """Row-stochastic (N, N) Jaccard index of closed neighbourhoods."""
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ShapeError("adjacency must be square")
    closed = (adj > 0).astype(float) + np.eye(adj.shape[0])
    closed = np.minimum(closed, 1.0)
    inter = closed @ closed.T
    sizes = closed.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    jac = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return _row_normalize(torch.as_tensor(jac, dtype=DTYPE))
