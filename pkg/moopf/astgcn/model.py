"""Multi-grained extractor: one stack of ST components per segment, fused into y."""

from __future__ import annotations

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from moopf.astgcn.layers import DTYPE, STComponent, _init_gain, cheb_polynomials
from moopf.astgcn.segments import SegmentSet
from moopf.astgcn.similarity import cosine_similarity, jaccard_similarity
from moopf.config import AstgcnSection
from moopf.errors import MoopfError, ShapeError
from moopf.grid.topology import GraphTopology

_LOGGER = logging.getLogger(__name__)

SEGMENT_NAMES = ("recent", "daily", "weekly")


class SegmentBranch(nn.Module):
    def __init__(
        self,
        polynomials: torch.Tensor,
        n_nodes: int,
        n_features: int,
        t_len: int,
        cfg: AstgcnSection,
        *,
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        comps = []
        width = n_features
        for _ in range(cfg.components):
            comps.append(
                STComponent(
                    polynomials,
                    n_nodes,
                    width,
                    cfg.channels,
                    t_len,
                    cfg.kernel,
                    attention_mode=cfg.attention_mode,
                    generator=generator,
                )
            )
            width = cfg.channels
        self.components = nn.ModuleList(comps)

    def forward(self, x: torch.Tensor, similarity: Optional[torch.Tensor] = None) -> torch.Tensor:
        for comp in self.components:
            x = comp(x, similarity)
        return x


def fuse_and_compress(
    weight: torch.Tensor, bias: torch.Tensor, outputs: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Flatten each branch output past the batch axis, concatenate, affine, ReLU.

    Outputs are (B, N, C, T_i), every time column kept; the branches may have
    different T_i. Branch order is part of the contract: recent, daily, weekly.
    """
    if len(outputs) != len(SEGMENT_NAMES):
        raise ShapeError(f"expected {len(SEGMENT_NAMES)} branch outputs, got {len(outputs)}")
    flat = torch.cat([o.reshape(o.shape[0], -1) for o in outputs], dim=-1)
    if flat.shape[1] != weight.shape[0]:
        raise ShapeError(f"fused width {flat.shape[1]} does not match trained width {weight.shape[0]}")
    return F.relu(flat @ weight + bias)


def segment_batch(segments: SegmentSet | Sequence[SegmentSet]) -> Tuple[torch.Tensor, ...]:
    """Stack one or more segment sets into (B, N, F, T) tensors, recent/daily/weekly."""
    items = [segments] if isinstance(segments, SegmentSet) else list(segments)
    if not items:
        raise ShapeError("empty segment batch")
    return tuple(
        torch.as_tensor(np.stack([s.tensor(name) for s in items]), dtype=DTYPE) for name in SEGMENT_NAMES
    )


class MGASTGCN(nn.Module):
    def __init__(
        self,
        topology: GraphTopology,
        n_features: int,
        segment_lengths: Tuple[int, int, int],
        cfg: AstgcnSection,
        *,
        feature_offset: Optional[np.ndarray] = None,
        feature_scale: Optional[np.ndarray] = None,
        seed: int = 0,
    ) -> None:
        super().__init__()
        gen = torch.Generator().manual_seed(int(seed))
        n_nodes = topology.adjacency.shape[0]
        self.n_nodes, self.n_features = n_nodes, n_features
        self.segment_lengths = tuple(int(t) for t in segment_lengths)
        self.attention_mode = cfg.attention_mode
        self.channels, self.embedding_width = cfg.channels, cfg.embedding
        polys = cheb_polynomials(topology.scaled_laplacian, cfg.cheb_order)
        self.branches = nn.ModuleList(
            SegmentBranch(polys, n_nodes, n_features, t, cfg, generator=gen) for t in self.segment_lengths
        )
        fused = n_nodes * cfg.channels * sum(self.segment_lengths)
        self.fuse_weight = _init_gain(fused, cfg.embedding, generator=gen)
        self.fuse_bias = nn.Parameter(torch.zeros(cfg.embedding, dtype=DTYPE))
        offset = np.zeros(n_features) if feature_offset is None else np.asarray(feature_offset, dtype=float)
        scale = np.ones(n_features) if feature_scale is None else np.asarray(feature_scale, dtype=float)
        self.register_buffer("feature_offset", torch.as_tensor(offset, dtype=DTYPE).view(1, 1, -1, 1))
        self.register_buffer("feature_scale", torch.as_tensor(scale, dtype=DTYPE).view(1, 1, -1, 1))
        self.register_buffer("jaccard", jaccard_similarity(topology.adjacency))
        if cfg.freeze:
            self.requires_grad_(False)

    @classmethod
    def from_env(cls, env, cfg: AstgcnSection, *, seed: int = 0) -> "MGASTGCN":
        if env.segment_config is None:
            raise MoopfError("environment was built without segment buffers (astgcn.enabled = false)")
        offset, scale = env.feature_scaling()
        return cls(
            env.topology,
            env.n_features,
            env.segment_config.lengths,
            cfg,
            feature_offset=offset,
            feature_scale=scale,
            seed=seed,
        )

    def _similarity(self, x: torch.Tensor) -> Optional[torch.Tensor]:
        if self.attention_mode == "cosine":
            return cosine_similarity(x)
        if self.attention_mode == "jaccard":
            return self.jaccard
        return None

    def forward(self, x_r: torch.Tensor, x_d: torch.Tensor, x_w: torch.Tensor) -> torch.Tensor:
        outs = []
        for branch, x in zip(self.branches, (x_r, x_d, x_w)):
            x = (x - self.feature_offset) * self.feature_scale
            h = branch(x, self._similarity(x))
            outs.append(h)
        return fuse_and_compress(self.fuse_weight, self.fuse_bias, outs)

    def embed(self, segments: SegmentSet | Sequence[SegmentSet]) -> torch.Tensor:
        return self(*segment_batch(segments))

    def attention_maps(self, segments: SegmentSet) -> Dict[str, np.ndarray]:
        """S' and E' of the first recent-segment component for one segment set."""
        x_r = segment_batch(segments)[0]
        x = (x_r - self.feature_offset) * self.feature_scale
        comp = self.branches[0].components[0]
        with torch.no_grad():
            e_norm, _, s_norm = comp.attention(x, self._similarity(x))
        return {"spatial": s_norm[0].cpu().numpy(), "temporal": e_norm[0].cpu().numpy()}


def parameter_gradients(
    model: nn.Module, output: torch.Tensor, upstream: torch.Tensor
) -> Dict[str, torch.Tensor]:
    """Reverse-mode gradients of <upstream, output> for every named parameter.

    Frozen or unused parameters get zeros. The forward graph of ``output`` is
    kept so the call can be repeated.
    """
    if output.grad_fn is None:
        raise MoopfError("no cached forward graph: run the forward pass with gradients enabled")
    upstream = torch.as_tensor(upstream, dtype=output.dtype)
    if upstream.shape != output.shape:
        raise ShapeError(f"upstream gradient {tuple(upstream.shape)} vs output {tuple(output.shape)}")
    named = list(model.named_parameters())
    trainable = [(name, p) for name, p in named if p.requires_grad]
    grads = torch.autograd.grad(
        output, [p for _, p in trainable], grad_outputs=upstream, retain_graph=True, allow_unused=True
    )
    result = {name: torch.zeros_like(p) for name, p in named}
    for (name, _), g in zip(trainable, grads):
        if g is not None:
            result[name] = g.detach()
    return result
