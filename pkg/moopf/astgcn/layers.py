"""Building blocks of one spatial-temporal component.

All tensors are batched ``(B, N, F, T)``: nodes, feature channels, time.
Attention scores use a bilinear form whose query side collapses the time
axis (spatial) or the node axis (temporal) through learned vectors, so the
score matrices come out N x N and T x T respectively.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from moopf.errors import ShapeError

DTYPE = torch.float64


def _init_gain(*shape: int, generator: Optional[torch.Generator] = None) -> nn.Parameter:
    bound = 1.0 / np.sqrt(max(shape[0], 1))
    data = (torch.rand(*shape, dtype=DTYPE, generator=generator) * 2.0 - 1.0) * bound
    return nn.Parameter(data)


def _near_one(*shape: int, generator: Optional[torch.Generator] = None) -> nn.Parameter:
    return nn.Parameter(1.0 + (torch.rand(*shape, dtype=DTYPE, generator=generator) * 0.2 - 0.1))


def _check_input(x: torch.Tensor, n_nodes: int, n_features: int, t_len: int, what: str) -> None:
    if x.dim() != 4 or tuple(x.shape[1:]) != (n_nodes, n_features, t_len):
        raise ShapeError(
            f"{what} expects (B, {n_nodes}, {n_features}, {t_len}), got {tuple(x.shape)}"
        )


def cheb_polynomials(scaled_laplacian: np.ndarray | torch.Tensor, order: int) -> torch.Tensor:
    """T_0..T_{K-1} of the scaled Laplacian by the three-term recurrence, shape (K, N, N)."""
    if order < 1:
        raise ShapeError(f"Chebyshev order K must be >= 1 (got {order})")
    lap = torch.as_tensor(scaled_laplacian, dtype=DTYPE)
    n = lap.shape[0]
    polys = [torch.eye(n, dtype=DTYPE)]
    if order > 1:
        polys.append(lap.clone())
    for _ in range(2, order):
        polys.append(2.0 * lap @ polys[-1] - polys[-2])
    return torch.stack(polys)


class SpatialAttention(nn.Module):
    """S = V_s * sigmoid((X W_t) W_qk (W_f X)^T + b_s), S' = row softmax of S."""

    def __init__(
        self, n_nodes: int, n_features: int, t_len: int, *, generator: Optional[torch.Generator] = None
    ) -> None:
        super().__init__()
        self.n_nodes, self.n_features, self.t_len = n_nodes, n_features, t_len
        self.W_t = _init_gain(t_len, generator=generator)
        self.W_qk = _init_gain(n_features, t_len, generator=generator)
        self.W_f = _init_gain(n_features, generator=generator)
        self.b_s = nn.Parameter(torch.zeros(n_nodes, n_nodes, dtype=DTYPE))
        self.V_s = _near_one(n_nodes, n_nodes, generator=generator)

    def scores(self, x: torch.Tensor) -> torch.Tensor:
        _check_input(x, self.n_nodes, self.n_features, self.t_len, "spatial attention")
        query = torch.matmul(torch.matmul(x, self.W_t), self.W_qk)  # (B, N, T)
        key = torch.einsum("f,bnft->bnt", self.W_f, x)  # (B, N, T)
        product = torch.matmul(query, key.transpose(-1, -2))  # (B, N, N)
        return self.V_s * torch.sigmoid(product + self.b_s)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.scores(x), dim=-1)


class TemporalAttention(nn.Module):
    """E = V_e * sigmoid((X^T U_n) U_qk (U_f X) + b_e), E' = row softmax of E."""

    def __init__(
        self, n_nodes: int, n_features: int, t_len: int, *, generator: Optional[torch.Generator] = None
    ) -> None:
        super().__init__()
        self.n_nodes, self.n_features, self.t_len = n_nodes, n_features, t_len
        self.U_n = _init_gain(n_nodes, generator=generator)
        self.U_qk = _init_gain(n_features, n_nodes, generator=generator)
        self.U_f = _init_gain(n_features, generator=generator)
        self.b_e = nn.Parameter(torch.zeros(t_len, t_len, dtype=DTYPE))
        self.V_e = _near_one(t_len, t_len, generator=generator)

    def scores(self, x: torch.Tensor) -> torch.Tensor:
        _check_input(x, self.n_nodes, self.n_features, self.t_len, "temporal attention")
        query = torch.matmul(torch.einsum("bnft,n->btf", x, self.U_n), self.U_qk)  # (B, T, N)
        key = torch.einsum("f,bnft->bnt", self.U_f, x)  # (B, N, T)
        product = torch.matmul(query, key)  # (B, T, T)
        return self.V_e * torch.sigmoid(product + self.b_e)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.scores(x), dim=-1)


def apply_temporal_attention(x: torch.Tensor, e_norm: torch.Tensor) -> torch.Tensor:
    """Output column t is the E'[t, :]-weighted average of the input time columns."""
    b, n, f, t = x.shape
    if e_norm.shape[-2:] != (t, t):
        raise ShapeError(f"temporal attention is {tuple(e_norm.shape[-2:])}, input has T={t}")
    mixed = torch.matmul(x.reshape(b, n * f, t), e_norm.transpose(-1, -2))
    return mixed.reshape(b, n, f, t)


class ChebGraphConv(nn.Module):
    """sum_k [T_k(L~) * S'] X theta_k over every time slice."""

    def __init__(
        self,
        polynomials: torch.Tensor,
        in_channels: int,
        out_channels: int,
        *,
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        if polynomials.dim() != 3 or polynomials.shape[0] < 1:
            raise ShapeError("Chebyshev polynomial stack must be (K >= 1, N, N)")
        self.register_buffer("polynomials", polynomials.to(DTYPE))
        self.order = int(polynomials.shape[0])
        self.in_channels, self.out_channels = in_channels, out_channels
        self.theta = _init_gain(self.order, in_channels, out_channels, generator=generator)

    def forward(self, x: torch.Tensor, s_norm: torch.Tensor, *, activate: bool = True) -> torch.Tensor:
        if x.shape[2] != self.in_channels:
            raise ShapeError(f"graph conv expects {self.in_channels} channels, got {x.shape[2]}")
        if s_norm.dim() == 2:
            s_norm = s_norm.unsqueeze(0)
        out = None
        for k in range(self.order):
            weighted = self.polynomials[k].unsqueeze(0) * s_norm  # (B, N, N)
            mixed = torch.einsum("bnm,bmft->bnft", weighted, x)
            term = torch.einsum("bnft,fo->bnot", mixed, self.theta[k])
            out = term if out is None else out + term
        assert out is not None
        return F.relu(out) if activate else out


def cheb_graph_conv(
    theta: torch.Tensor,
    scaled_laplacian: np.ndarray | torch.Tensor,
    s_norm: torch.Tensor,
    x: torch.Tensor,
    *,
    activate: bool = True,
) -> torch.Tensor:
    """Functional form; ``theta`` is (K, F_in, F_out). The result carries no graph."""
    theta = torch.as_tensor(theta, dtype=DTYPE)
    if theta.dim() != 3 or theta.shape[0] < 1:
        raise ShapeError("theta must be (K >= 1, F_in, F_out)")
    conv = ChebGraphConv(cheb_polynomials(scaled_laplacian, int(theta.shape[0])), theta.shape[1], theta.shape[2])
    with torch.no_grad():
        conv.theta.copy_(theta)
        return conv(x, s_norm, activate=activate)


class TemporalConv(nn.Module):
    """Channel-mixing 1-D convolution along time with 'same' padding, no bias."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        *,
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        if kernel < 1:
            raise ShapeError("temporal kernel length must be >= 1")
        self.kernel = kernel
        self.in_channels, self.out_channels = in_channels, out_channels
        self.weight = _init_gain(out_channels, in_channels, kernel, generator=generator)

    def forward(self, x: torch.Tensor, *, activate: bool = True) -> torch.Tensor:
        b, n, f, t = x.shape
        if f != self.in_channels:
            raise ShapeError(f"temporal conv expects {self.in_channels} channels, got {f}")
        if self.kernel > t:
            raise ShapeError(f"kernel length {self.kernel} exceeds T={t}")
        out = F.conv1d(x.reshape(b * n, f, t), self.weight, padding="same")
        out = out.reshape(b, n, self.out_channels, t)
        return F.relu(out) if activate else out


def temporal_conv(weight: torch.Tensor, x: torch.Tensor, *, activate: bool = True) -> torch.Tensor:
    """Functional form; ``weight`` is (F_out, F_in, k). The result carries no graph."""
    weight = torch.as_tensor(weight, dtype=DTYPE)
    conv = TemporalConv(weight.shape[1], weight.shape[0], weight.shape[2])
    with torch.no_grad():
        conv.weight.copy_(weight)
        return conv(x, activate=activate)


class STComponent(nn.Module):
    """Temporal attention -> spatial attention -> graph conv -> temporal conv, plus residual.

    ``attention_mode`` other than ``"st"`` skips temporal attention (E' = I) and
    takes S' from outside: a similarity matrix for ``cosine``/``jaccard`` or
    the uniform 1/N matrix for ``uniform``.
    """

    def __init__(
        self,
        polynomials: torch.Tensor,
        n_nodes: int,
        in_channels: int,
        out_channels: int,
        t_len: int,
        kernel: int,
        *,
        attention_mode: str = "st",
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        if kernel > t_len:
            raise ShapeError(f"kernel length {kernel} exceeds T={t_len}")
        self.n_nodes, self.in_channels, self.out_channels, self.t_len = n_nodes, in_channels, out_channels, t_len
        self.attention_mode = attention_mode
        self.temporal_attention = TemporalAttention(n_nodes, in_channels, t_len, generator=generator)
        self.spatial_attention = SpatialAttention(n_nodes, in_channels, t_len, generator=generator)
        self.graph_conv = ChebGraphConv(polynomials, in_channels, out_channels, generator=generator)
        self.time_conv = TemporalConv(out_channels, out_channels, kernel, generator=generator)
        if in_channels != out_channels:
            self.residual: Optional[nn.Parameter] = _init_gain(in_channels, out_channels, generator=generator)
        else:
            self.register_parameter("residual", None)
        self.last_attention: dict[str, torch.Tensor] = {}

    def attention(
        self, x: torch.Tensor, similarity: Optional[torch.Tensor] = None
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(E', X^, S') for input ``x``."""
        b = x.shape[0]
        if self.attention_mode == "st":
            e_norm = self.temporal_attention(x)
            x_hat = apply_temporal_attention(x, e_norm)
            s_norm = self.spatial_attention(x_hat)
            return e_norm, x_hat, s_norm
        _check_input(x, self.n_nodes, self.in_channels, self.t_len, "ST component")
        e_norm = torch.eye(self.t_len, dtype=DTYPE).expand(b, -1, -1)
        if self.attention_mode == "uniform" or similarity is None:
            s_norm = torch.full((b, self.n_nodes, self.n_nodes), 1.0 / self.n_nodes, dtype=DTYPE)
        else:
            s_norm = similarity if similarity.dim() == 3 else similarity.unsqueeze(0).expand(b, -1, -1)
        return e_norm, x, s_norm

    def forward(self, x: torch.Tensor, similarity: Optional[torch.Tensor] = None) -> torch.Tensor:
        e_norm, x_hat, s_norm = self.attention(x, similarity)
        self.last_attention = {"S": s_norm.detach(), "E": e_norm.detach()}
        graph = self.graph_conv(x_hat, s_norm)
        temporal = self.time_conv(graph, activate=False)
        if self.residual is None:
            skip = x
        else:
            skip = torch.einsum("bnft,fo->bnot", x, self.residual)
        return F.relu(temporal + skip)
