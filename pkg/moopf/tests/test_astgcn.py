from __future__ import annotations

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from moopf.astgcn import (
    MGASTGCN,
    ChebGraphConv,
    SegmentConfig,
    SpatialAttention,
    STComponent,
    TemporalAttention,
    TemporalConv,
    apply_temporal_attention,
    build_segments,
    cheb_graph_conv,
    cheb_polynomials,
    cosine_similarity,
    fuse_and_compress,
    jaccard_similarity,
    parameter_gradients,
    temporal_conv,
)
from moopf.astgcn.layers import DTYPE
from moopf.config import AstgcnSection
from moopf.env import OPFEnv
from moopf.errors import MoopfError, ShapeError
from moopf.grid.features import GraphSnapshot
from moopf.grid.loader import case_from_mapping
from moopf.grid.topology import build_topology

from moopf.tests._oracles import spectral_filter
from moopf.tests._samples import path_mapping, small_config


def _history(first: int, last: int, n: int = 2) -> list[GraphSnapshot]:
    return [GraphSnapshot(t, np.full((n, 1), float(t))) for t in range(first, last + 1)]


def _times(stack) -> list[int]:
    return [s.time_index for s in stack]


def _rand(*shape: int, seed: int = 0) -> torch.Tensor:
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, dtype=DTYPE, generator=gen)


def _path_laplacian(n: int) -> np.ndarray:
    return build_topology(case_from_mapping(path_mapping(n))).scaled_laplacian


# segments -------------------------------------------------------------


def test_segment_offsets_for_hourly_days():
    cfg = SegmentConfig(recent=3, daily=2, weekly=1, intervals_per_day=24)
    assert cfg.depth == 169
    assert cfg.lengths == (3, 3, 2)
    t0 = 400
    seg = build_segments(_history(t0 - cfg.depth + 1, t0), t0, cfg)
    assert _times(seg.recent) == [t0 - 2, t0 - 1, t0]
    assert _times(seg.daily) == [t0 - 48, t0 - 24, t0]
    assert _times(seg.weekly) == [t0 - 168, t0]
    assert seg.X_d.shape == (2, 1, 3)
    assert seg.X_d[0, 0].tolist() == [t0 - 48.0, t0 - 24.0, float(t0)]


def test_default_depth_covers_four_weeks():
    assert SegmentConfig().depth == 7 * 4 * 24 + 1


def test_insufficient_history_raises():
    cfg = SegmentConfig(recent=3, daily=2, weekly=1, intervals_per_day=24)
    with pytest.raises(MoopfError):
        build_segments(_history(300, 400), 400, cfg)
    with pytest.raises(MoopfError):
        build_segments([], 400, cfg)


def test_sparse_history_is_looked_up_by_interval():
    cfg = SegmentConfig(recent=1, daily=1, weekly=0, intervals_per_day=4)
    history = [GraphSnapshot(t, np.zeros((2, 1))) for t in (10, 14)]
    seg = build_segments(history, 14, cfg)
    assert _times(seg.daily) == [10, 14]
    assert _times(seg.weekly) == [14]


# attention ------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_attention_rows_are_distributions(seed):
    gen = torch.Generator().manual_seed(seed)
    x = torch.randn(2, 5, 3, 4, dtype=DTYPE, generator=gen) * 3.0
    s = SpatialAttention(5, 3, 4, generator=gen)(x)
    e = TemporalAttention(5, 3, 4, generator=gen)(x)
    assert s.shape == (2, 5, 5) and e.shape == (2, 4, 4)
    for m in (s, e):
        assert torch.all(m > 0.0)
        assert torch.allclose(m.sum(dim=-1), torch.ones(m.shape[:-1], dtype=DTYPE), atol=1e-12)


def test_zero_input_with_flat_gains_gives_uniform_rows():
    spatial = SpatialAttention(4, 2, 3)
    temporal = TemporalAttention(4, 2, 3)
    with torch.no_grad():
        spatial.V_s.fill_(1.0)
        temporal.V_e.fill_(1.0)
    x = torch.zeros(1, 4, 2, 3, dtype=DTYPE)
    assert torch.allclose(spatial(x), torch.full((1, 4, 4), 0.25, dtype=DTYPE))
    assert torch.allclose(temporal(x), torch.full((1, 3, 3), 1.0 / 3.0, dtype=DTYPE))


def test_two_node_spatial_attention_by_hand():
    att = SpatialAttention(2, 1, 1)
    with torch.no_grad():
        att.W_t.fill_(1.0)
        att.W_qk.fill_(1.0)
        att.W_f.fill_(1.0)
        att.b_s.zero_()
        att.V_s.fill_(1.0)
    x = torch.tensor([1.0, 2.0], dtype=DTYPE).view(1, 2, 1, 1)
    out = att(x)[0]

    def sig(z: float) -> float:
        return 1.0 / (1.0 + math.exp(-z))

    # products are x_i * x_j: [[1, 2], [2, 4]]
    for row, (a, b) in enumerate([(1.0, 2.0), (2.0, 4.0)]):
        ea, eb = math.exp(sig(a)), math.exp(sig(b))
        assert out[row, 0].item() == pytest.approx(ea / (ea + eb), abs=1e-12)
        assert out[row, 1].item() == pytest.approx(eb / (ea + eb), abs=1e-12)


def test_attention_checks_input_shape():
    with pytest.raises(ShapeError):
        SpatialAttention(4, 2, 3)(torch.zeros(1, 4, 2, 5, dtype=DTYPE))


def test_identity_temporal_attention_leaves_input():
    x = _rand(2, 3, 2, 4)
    eye = torch.eye(4, dtype=DTYPE).expand(2, -1, -1)
    assert torch.allclose(apply_temporal_attention(x, eye), x)
    mean = torch.full((4, 4), 0.25, dtype=DTYPE)
    out = apply_temporal_attention(x, mean.unsqueeze(0))
    assert torch.allclose(out[..., 0], x.mean(dim=-1))


# graph convolution ----------------------------------------------------


def test_chebyshev_recurrence():
    lap = _path_laplacian(4)
    polys = cheb_polynomials(lap, 3).numpy()
    assert np.allclose(polys[0], np.eye(4))
    assert np.allclose(polys[1], lap)
    assert np.allclose(polys[2], 2.0 * lap @ lap - np.eye(4))
    with pytest.raises(ShapeError):
        cheb_polynomials(lap, 0)


def test_order_one_is_a_per_node_linear_map():
    lap = _path_laplacian(3)
    theta = _rand(1, 2, 5)
    x = _rand(1, 3, 2, 4, seed=1)
    ones = torch.ones(3, 3, dtype=DTYPE)
    out = cheb_graph_conv(theta, lap, ones, x, activate=False)
    assert not out.requires_grad
    assert torch.allclose(out, torch.einsum("bnft,fo->bnot", x, theta[0]), atol=1e-12)


def test_graph_conv_matches_spectral_filter():
    lap = _path_laplacian(4)
    coeffs = np.array([0.7, -0.4, 0.25])
    theta = torch.as_tensor(coeffs, dtype=DTYPE).view(3, 1, 1)
    signal = np.array([1.0, -2.0, 0.5, 3.0])
    x = torch.as_tensor(signal, dtype=DTYPE).view(1, 4, 1, 1)
    ones = torch.ones(4, 4, dtype=DTYPE)
    out = cheb_graph_conv(theta, lap, ones, x, activate=False).view(-1).numpy()
    assert np.allclose(out, spectral_filter(lap, coeffs, signal), atol=1e-8)


def test_graph_conv_is_linear_without_activation():
    lap = _path_laplacian(5)
    conv = ChebGraphConv(cheb_polynomials(lap, 3), 2, 3)
    s = torch.softmax(_rand(5, 5, seed=4), dim=-1)
    x, y = _rand(1, 5, 2, 3, seed=5), _rand(1, 5, 2, 3, seed=6)
    lhs = conv(2.0 * x - 0.5 * y, s, activate=False)
    rhs = 2.0 * conv(x, s, activate=False) - 0.5 * conv(y, s, activate=False)
    assert torch.allclose(lhs, rhs, atol=1e-12)
    assert torch.all(conv(x, s) >= 0.0)


# temporal convolution -------------------------------------------------


def test_centre_tap_kernel_is_identity():
    w = torch.zeros(1, 1, 3, dtype=DTYPE)
    w[0, 0, 1] = 1.0
    x = _rand(1, 2, 1, 5)
    assert torch.allclose(temporal_conv(w, x, activate=False), x)
    assert not temporal_conv(w, x, activate=False).requires_grad


def test_flat_kernel_averages_neighbours():
    w = torch.full((1, 1, 3), 1.0 / 3.0, dtype=DTYPE)
    x = torch.arange(5, dtype=DTYPE).view(1, 1, 1, 5)
    out = temporal_conv(w, x, activate=False).view(-1)
    assert torch.allclose(out[1:4], torch.tensor([1.0, 2.0, 3.0], dtype=DTYPE))
    # zero padding at the edges
    assert out[0].item() == pytest.approx(1.0 / 3.0)
    assert out[4].item() == pytest.approx(7.0 / 3.0)


@pytest.mark.parametrize("kernel", [2, 3])
def test_temporal_conv_matches_sliding_window(kernel):
    w = _rand(3, 2, kernel, seed=kernel)
    x = _rand(1, 2, 2, 6, seed=10 + kernel)
    out = temporal_conv(w, x, activate=False).numpy()
    left = (kernel - 1) // 2
    xs = x.numpy()
    padded = np.pad(xs, ((0, 0), (0, 0), (0, 0), (left, kernel - 1 - left)))
    expected = np.zeros((1, 2, 3, 6))
    for t in range(6):
        window = padded[..., t : t + kernel]  # (1, N, F_in, k)
        expected[..., t] = np.einsum("bnfk,ofk->bno", window, w.numpy())
    assert np.allclose(out, expected, atol=1e-12)


def test_kernel_longer_than_sequence_rejected():
    with pytest.raises(ShapeError):
        TemporalConv(1, 1, 4)(torch.zeros(1, 2, 1, 3, dtype=DTYPE))
    with pytest.raises(ShapeError):
        STComponent(cheb_polynomials(_path_laplacian(3), 2), 3, 2, 2, t_len=2, kernel=3)


# ST component and extractor ---------------------------------------------


def _component(mode: str = "st", in_ch: int = 3, out_ch: int = 4) -> STComponent:
    polys = cheb_polynomials(_path_laplacian(4), 2)
    return STComponent(polys, 4, in_ch, out_ch, 5, 3, attention_mode=mode, generator=torch.Generator().manual_seed(1))


def test_component_shape_contract():
    comp = _component()
    out = comp(_rand(2, 4, 3, 5))
    assert out.shape == (2, 4, 4, 5)
    assert torch.all(out >= 0.0)
    assert comp.last_attention["S"].shape == (2, 4, 4)
    assert comp.last_attention["E"].shape == (2, 5, 5)


def test_zero_parameters_give_zero_output():
    comp = _component()
    with torch.no_grad():
        for p in comp.parameters():
            p.zero_()
    assert torch.all(comp(_rand(1, 4, 3, 5)) == 0.0)


def test_uniform_mode_fixes_attention():
    comp = _component("uniform")
    comp(_rand(1, 4, 3, 5))
    assert torch.allclose(comp.last_attention["S"], torch.full((1, 4, 4), 0.25, dtype=DTYPE))
    assert torch.equal(comp.last_attention["E"][0], torch.eye(5, dtype=DTYPE))


def test_fuse_zero_inputs_returns_relu_bias():
    bias = torch.tensor([-1.0, 0.5, 2.0], dtype=DTYPE)
    weight = _rand(3 * 2 * 4, 3)
    zeros = [torch.zeros(1, 2, 4, dtype=DTYPE)] * 3
    assert torch.equal(fuse_and_compress(weight, bias, zeros)[0], torch.tensor([0.0, 0.5, 2.0], dtype=DTYPE))
    with pytest.raises(ShapeError):
        fuse_and_compress(weight, bias, zeros[:2])


def test_fuse_depends_on_branch_order():
    weight = _rand(3 * 2 * 4, 5)
    bias = torch.full((5,), 10.0, dtype=DTYPE)
    a, b, c = (_rand(1, 2, 4, seed=s) for s in (1, 2, 3))
    assert not torch.allclose(fuse_and_compress(weight, bias, [a, b, c]), fuse_and_compress(weight, bias, [c, b, a]))


def test_fuse_reads_every_time_column():
    # branches of unequal length, (B, N, C, T_i)
    outs = [_rand(1, 2, 3, t, seed=t) for t in (4, 3, 2)]
    weight = _rand(2 * 3 * (4 + 3 + 2), 5, seed=9)
    bias = torch.full((5,), 10.0, dtype=DTYPE)
    y = fuse_and_compress(weight, bias, outs)
    assert y.shape == (1, 5)
    early = [o.clone() for o in outs]
    early[0][..., 0] += 1.0
    assert not torch.allclose(fuse_and_compress(weight, bias, early), y)


def test_extractor_fusion_width_spans_all_intervals(case2):
    env = OPFEnv(case2, small_config("case2"))
    model = MGASTGCN.from_env(env, env.config.astgcn)
    cfg = env.config.astgcn
    assert model.fuse_weight.shape == (case2.n_buses * cfg.channels * sum(env.segment_config.lengths), cfg.embedding)


def test_parameter_gradients_match_finite_differences():
    comp = _component()
    x = _rand(1, 4, 3, 5, seed=3)
    out = comp(x)
    upstream = _rand(*out.shape, seed=4)
    grads = parameter_gradients(comp, out, upstream)
    theta = comp.graph_conv.theta
    h = 1e-6
    for idx in [(0, 0, 0), (1, 2, 3), (0, 1, 2)]:
        with torch.no_grad():
            base = theta[idx].item()
            theta[idx] = base + h
            up = float((upstream * comp(x)).sum())
            theta[idx] = base - h
            down = float((upstream * comp(x)).sum())
            theta[idx] = base
        assert grads["graph_conv.theta"][idx].item() == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-8)


def test_parameter_gradients_edge_cases():
    comp = _component()
    x = _rand(1, 4, 3, 5, seed=3)
    out = comp(x)
    zero = parameter_gradients(comp, out, torch.zeros_like(out))
    assert all(torch.all(g == 0.0) for g in zero.values())
    comp.temporal_attention.requires_grad_(False)
    out = comp(x)
    grads = parameter_gradients(comp, out, torch.ones_like(out))
    assert torch.all(grads["temporal_attention.U_n"] == 0.0)
    assert set(grads) == {name for name, _ in comp.named_parameters()}
    with torch.no_grad():
        detached = comp(x)
    with pytest.raises(MoopfError):
        parameter_gradients(comp, detached, torch.ones_like(detached))
    with pytest.raises(ShapeError):
        parameter_gradients(comp, out, torch.ones(3, dtype=DTYPE))


def test_every_extractor_parameter_matches_finite_differences():
    topology = build_topology(case_from_mapping(path_mapping(4)))
    cfg = AstgcnSection(recent=4, daily=3, weekly=3, components=1, channels=2, cheb_order=2, kernel=3, embedding=3)
    model = MGASTGCN(topology, 3, (4, 4, 4), cfg, seed=5)
    inputs = [_rand(1, 4, 3, 4, seed=20 + i) for i in range(3)]
    y = model(*inputs)
    upstream = _rand(*y.shape, seed=30)
    grads = parameter_gradients(model, y, upstream)
    step = 1e-5
    for name, param in model.named_parameters():
        flat = param.data.view(-1)
        for i in sorted({0, flat.numel() // 2, flat.numel() - 1}):
            base = flat[i].item()
            with torch.no_grad():
                flat[i] = base + step
                up = float((upstream * model(*inputs)).sum())
                flat[i] = base - step
                down = float((upstream * model(*inputs)).sum())
                flat[i] = base
            fd = (up - down) / (2 * step)
            assert grads[name].reshape(-1)[i].item() == pytest.approx(fd, rel=1e-4, abs=1e-8), name


def test_similarity_matrices_are_row_stochastic():
    adj = build_topology(case_from_mapping(path_mapping(4))).adjacency
    jac = jaccard_similarity(adj)
    assert jac.shape == (4, 4)
    assert torch.allclose(jac.sum(dim=-1), torch.ones(4, dtype=DTYPE))
    # end node: closed neighbourhood {1, 2}; bus 3 shares only node 2 of {2, 3, 4}
    assert jac[0, 3].item() == 0.0
    cos = cosine_similarity(_rand(2, 4, 3, 5))
    assert cos.shape == (2, 4, 4)
    assert torch.allclose(cos.sum(dim=-1), torch.ones(2, 4, dtype=DTYPE))


def test_extractor_from_env(case2):
    env = OPFEnv(case2, small_config("case2"))
    state = env.reset(seed=2)
    model = MGASTGCN.from_env(env, env.config.astgcn, seed=3)
    y = model.embed(state.segments)
    assert y.shape == (1, env.config.astgcn.embedding)
    assert torch.all(y >= 0.0)
    maps = model.attention_maps(state.segments)
    assert maps["spatial"].shape == (2, 2)
    assert maps["temporal"].shape == (3, 3)
    assert np.allclose(maps["spatial"].sum(axis=1), 1.0)
    twin = MGASTGCN.from_env(env, env.config.astgcn, seed=3)
    assert torch.equal(twin.embed(state.segments), y)


def test_extractor_attention_arms(case2):
    for mode in ("uniform", "jaccard"):
        env = OPFEnv(case2, small_config("case2", astgcn={"attention_mode": mode}))
        state = env.reset(seed=2)
        model = MGASTGCN.from_env(env, env.config.astgcn)
        maps = model.attention_maps(state.segments)
        assert np.allclose(maps["temporal"], np.eye(3))
        if mode == "uniform":
            assert np.allclose(maps["spatial"], 0.5)
        else:
            assert np.allclose(maps["spatial"], model.jaccard.numpy())


def test_extractor_needs_segment_buffers(case2):
    env = OPFEnv(case2, small_config("case2", astgcn={"enabled": False}))
    with pytest.raises(MoopfError):
        MGASTGCN.from_env(env, env.config.astgcn)


def test_frozen_extractor_has_no_trainable_parameters(case2):
    env = OPFEnv(case2, small_config("case2", astgcn={"freeze": True}))
    model = MGASTGCN.from_env(env, env.config.astgcn)
    assert not any(p.requires_grad for p in model.parameters())
