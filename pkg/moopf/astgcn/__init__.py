"""Multi-grained spatial-temporal graph feature extractor."""

from moopf.astgcn.layers import (
    ChebGraphConv,
    SpatialAttention,
    STComponent,
    TemporalAttention,
    TemporalConv,
    apply_temporal_attention,
    cheb_graph_conv,
    cheb_polynomials,
    temporal_conv,
)
from moopf.astgcn.model import MGASTGCN, fuse_and_compress, parameter_gradients, segment_batch
from moopf.astgcn.segments import SegmentConfig, SegmentSet, build_segments
from moopf.astgcn.similarity import cosine_similarity, jaccard_similarity

__all__ = [
    "ChebGraphConv",
    "SpatialAttention",
    "STComponent",
    "TemporalAttention",
    "TemporalConv",
    "apply_temporal_attention",
    "cheb_graph_conv",
    "cheb_polynomials",
    "temporal_conv",
    "MGASTGCN",
    "fuse_and_compress",
    "parameter_gradients",
    "segment_batch",
    "SegmentConfig",
    "SegmentSet",
    "build_segments",
    "cosine_similarity",
    "jaccard_similarity",
]
