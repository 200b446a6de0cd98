from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

import moopf.env.environment as environment_module
from moopf.economics import RenewableModel, VoltageHistory, total_cost
from moopf.env import (
    LoadProfile,
    OPFEnv,
    RewardBreakdown,
    RewardWeights,
    TransitionLog,
    early_stop_check,
    read_transition_log,
    reward_components,
    rollout,
)
from moopf.config import EnvSection, RewardSection
from moopf.constants import BUNDLED_CASES
from moopf.errors import ConvergenceError, MoopfError, ShapeError
from moopf.grid.loader import load_case
from moopf.powerflow import BusLoads, PowerFlowSolution

from moopf.tests._samples import small_config


def _env(case, **sections) -> OPFEnv:
    return OPFEnv(case, small_config(case.name, **sections))


def _frozen(case, **env) -> OPFEnv:
    return _env(case, env={"frozen_profile": True, **env})


class HoldPolicy:
    """Re-issues the dispatch already in force."""

    name = "hold"

    def __call__(self, state, env):
        return env.operating_action()

    def fork(self, seed):
        return self


def test_shapes(case2, case6):
    env = _env(case2)
    assert env.action_dim == 4
    assert env.state_width == 2 * env.n_features
    assert env.n_features == 4 + case2.max_degree
    assert _env(case6).action_dim == 6


@pytest.mark.parametrize("name", BUNDLED_CASES)
def test_every_bundled_case_builds_an_env(name):
    case = load_case(name)
    env = OPFEnv(case)
    assert env.action_dim == 2 * case.n_generators
    assert math.isfinite(env.c_norm) and env.c_norm > 0.0
    state = OPFEnv(case, small_config(name, astgcn={"enabled": False})).reset(seed=0)
    assert state.X.shape == (case.n_buses, env.n_features)
    assert np.all(np.isfinite(state.X))


def test_reset_is_deterministic_per_seed(case2):
    a = _env(case2)
    b = _env(case2)
    sa = a.reset(seed=3)
    sb = b.reset(seed=3)
    assert sa.t == sb.t
    assert np.array_equal(sa.X, sb.X)
    assert np.array_equal(a.loads.p, b.loads.p)
    assert a.state_hash() == b.state_hash()
    c = _env(case2)
    c.reset(seed=4)
    assert not np.array_equal(a.loads.p, c.loads.p)


def test_reset_fills_history_and_segments(case2):
    env = _env(case2)
    state = env.reset(seed=1)
    assert len(env.snapshots) == env.history_depth == 29
    assert env.pending_interval == state.t + 1
    assert env.snapshots[-1].time_index == state.t
    assert state.segments is not None
    f = env.n_features
    assert state.segments.X_r.shape == (2, f, 3)
    assert state.segments.X_d.shape == (2, f, 2)
    assert state.segments.X_w.shape == (2, f, 2)
    assert env.voltage_history.full
    assert state.vector().shape == (env.state_width,)
    assert state.vector(np.zeros(6)).shape == (env.state_width + 6,)


def test_segments_skipped_without_extractor(case2):
    env = _env(case2, astgcn={"enabled": False})
    state = env.reset(seed=1)
    assert state.segments is None
    assert env.history_depth == env.config.env.fluctuation_window


def test_stepping_before_reset_raises(case2):
    env = _env(case2)
    with pytest.raises(MoopfError):
        env.step(np.zeros(env.action_dim))
    with pytest.raises(MoopfError):
        env.operating_action()


def test_action_mapping(case2):
    env = _env(case2)
    p, v = env.denormalize(-np.ones(4))
    assert np.allclose(p, [g.p_min for g in case2.generators])
    assert np.allclose(v, 0.95)
    p, v = env.denormalize(np.full(4, 7.0))
    assert np.allclose(p, [g.p_max for g in case2.generators])
    assert np.allclose(v, 1.05)
    a = np.array([0.2, -0.4, 0.9, -0.1])
    assert np.allclose(env.normalize(*env.denormalize(a)), a)
    with pytest.raises(ShapeError):
        env.denormalize(np.zeros(3))


def test_holding_the_dispatch_passes_the_gate_under_a_frozen_profile(case2):
    env = _frozen(case2)
    env.reset(seed=5)
    results = [env.step(env.operating_action()) for _ in range(env.config.env.episode_length)]
    assert all(r.gate_passed for r in results)
    assert [r.terminal for r in results] == [False] * 7 + [True]
    assert results[-1].reason == "horizon"
    with pytest.raises(MoopfError):
        env.step(env.operating_action())


def test_large_redispatch_trips_the_gate(case6):
    env = _frozen(case6, gate_tolerance=1e-6)
    env.reset(seed=2)
    action = env.operating_action()
    # solar availability is always positive, so dropping every schedule moves bus injections
    action[: env.n_generators] = -1.0
    result = env.step(action)
    assert not result.gate_passed
    assert result.terminal and result.reason == "gate"


def test_reward_is_weighted_sum_of_components(case2):
    env = _frozen(case2)
    env.reset(seed=8)
    result = env.step(env.operating_action())
    assert result.breakdown.divergence_penalty == 0.0
    assert result.reward == pytest.approx(float(env.weights.as_array() @ result.breakdown.components))
    assert result.seconds >= 0.0


def test_divergence_pays_the_penalty(case2, monkeypatch):
    env = _env(case2)
    env.reset(seed=1)
    real = environment_module.solve
    monkeypatch.setattr(environment_module, "solve", lambda *a, **k: replace(real(*a, **k), converged=False))
    result = env.step(env.operating_action())
    assert result.diverged and result.terminal
    assert result.reward == env.config.rewards.divergence_reward
    assert np.all(result.breakdown.components == 0.0)
    with pytest.raises(MoopfError):
        env.step(np.zeros(env.action_dim))


def test_peek_matches_step_and_leaves_env_untouched(case2):
    env = _env(case2)
    env.reset(seed=9)
    before = env.state_hash()
    action = np.array([0.1, 0.5, 0.0, 0.2])
    peeked = env.peek_reward(action)
    assert env.state_hash() == before
    trial = env.clone()
    assert trial.step(action).reward == peeked
    assert env.state_hash() == before


def test_clone_runs_independently(case2):
    env = _env(case2)
    env.reset(seed=9)
    before = env.state_hash()
    twin = env.clone()
    for _ in range(3):
        result = twin.step(twin.operating_action())
        if result.terminal:
            break
    assert env.state_hash() == before
    assert twin.state_hash() != before


def test_fault_injection(case6):
    env = _env(case6)
    env.reset(seed=1)
    wind = env.generator_at(4)
    env.inject_fault([wind])
    assert list(env.online) == [True, False, True]
    env.clear_faults()
    assert env.online.all()
    with pytest.raises(MoopfError):
        env.inject_fault([env.generator_at(1)])
    with pytest.raises(MoopfError):
        env.inject_fault([7])
    with pytest.raises(MoopfError):
        env.generator_at(3)


def test_transition_log_records_each_step(case2, tmp_path):
    log = TransitionLog(tmp_path / "transitions.csv")
    env = OPFEnv(case2, small_config("case2", env={"frozen_profile": True}), transition_log=log)
    env.reset(seed=4)
    rewards = []
    while True:
        result = env.step(env.operating_action())
        rewards.append(result.reward)
        if result.terminal:
            break
    frame = read_transition_log(log.path)
    assert len(frame) == len(rewards) == 8
    assert np.allclose(frame["reward"].to_numpy(), rewards)
    assert bool(frame["terminal"].iloc[-1]) and frame["reason"].iloc[-1] == "horizon"
    assert list(frame.columns[:3]) == ["episode", "t", "reward"]


def test_clone_never_writes_to_the_log(case2, tmp_path):
    log = TransitionLog(tmp_path / "t.csv")
    env = OPFEnv(case2, small_config("case2"), transition_log=log)
    env.reset(seed=4)
    env.clone().step(env.operating_action())
    assert len(log) == 0


def test_rollout_holds_for_the_horizon(case2):
    env = _frozen(case2)
    trace = rollout(env, HoldPolicy(), seed=3, horizon=4)
    assert trace.steps == 4
    assert trace.cumulative_reward == pytest.approx(trace.rewards.sum())
    assert not trace.diverged
    assert len(trace.voltages) == 4
    assert trace.to_frame()["t"].tolist() == [0, 1, 2, 3]


def test_load_profile_factors(case2):
    profile = LoadProfile.from_config(case2, EnvSection())
    assert profile.factor(18) == pytest.approx(1.2)
    assert profile.factor(6) == pytest.approx(0.7)
    assert profile.factor(5 * 24 + 18) == pytest.approx(1.2 * 0.9)
    assert profile.factor(7 * 24 + 18) == pytest.approx(1.2)
    loads = profile.loads(6)
    assert np.allclose(loads.p, BusLoads.nominal(case2).p * 0.7)
    noisy = profile.loads(6, np.random.default_rng(0))
    assert not np.allclose(noisy.p[1], loads.p[1])


def test_weights_from_config():
    w = RewardWeights.from_config(RewardSection(), c_norm=4.0)
    assert w.w == (0.125, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 1.0)
    explicit = RewardWeights.from_config(RewardSection(weights=[1.0] * 8), c_norm=4.0)
    assert explicit.as_array().tolist() == [1.0] * 8
    assert RewardWeights.from_config(RewardSection(w4=3.0), c_norm=0.0).w[0] == 0.5
    with pytest.raises(ShapeError):
        RewardWeights((1.0,) * 7)


def test_breakdown_totals():
    w = RewardWeights((1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0))
    b = RewardBreakdown(components=np.array([-1.0, -0.5, 0.3, 0.0, 0.0, 0.0, 0.0, 0.25]))
    assert b.total(w) == pytest.approx(-1.75)
    assert RewardBreakdown.diverged(-100.0).total(w) == -100.0
    assert set(b.as_row()) == {"r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8", "divergence_penalty"}


def _manual_solution(case, current_fraction: float, v=None, p_gen=None) -> PowerFlowSolution:
    limits = np.array([br.i_thermal for br in case.branches])
    return PowerFlowSolution(
        v=np.ones(case.n_buses, dtype=complex) if v is None else np.asarray(v, dtype=complex),
        branch_flow=np.zeros(case.n_branches, dtype=complex),
        branch_current=current_fraction * limits,
        loss_total=0.0,
        converged=True,
        iterations=1,
        p_gen=np.zeros(case.n_generators) if p_gen is None else np.asarray(p_gen, dtype=float),
        q_gen=np.zeros(case.n_generators),
    )


def _flat_history(case, window: int = 1) -> VoltageHistory:
    history = VoltageHistory(window, case.n_buses)
    for _ in range(window):
        history.push(np.ones(case.n_buses))
    return history


def _costs(case, p):
    models = {k: RenewableModel.from_generator(g) for k, g in enumerate(case.generators) if g.is_renewable}
    return total_cost(case, p, models)


def test_components_on_a_hand_built_interval(case2):
    p = np.array([1.0, 0.3])
    costs = _costs(case2, p)
    r = reward_components(
        case2, _manual_solution(case2, 0.5, p_gen=p), p, costs, _flat_history(case2), thermal_epsilon=0.0
    )
    assert r[0] == pytest.approx(-costs.total)
    assert r[1] == 0.0
    assert r[2] == pytest.approx(0.5)
    assert r[3] == 0.0
    assert np.all(r[4:7] == 0.0)
    assert r[7] == pytest.approx(0.5)


def test_overloaded_branches_floor_headroom_at_zero(case2):
    p = np.array([1.0, 0.6])
    r = reward_components(case2, _manual_solution(case2, 3.0, p_gen=p), p, _costs(case2, p), _flat_history(case2))
    assert r[2] == pytest.approx(0.0, abs=1e-6)
    assert r[7] == pytest.approx(1.0)


def test_renewable_share_counts_delivered_output(case2):
    # wind scheduled at its 0.6 MW ceiling but the solve delivered 0.15 MW
    p = np.array([1.0, 0.6])
    sol = _manual_solution(case2, 0.1, p_gen=[1.0, 0.15])
    r = reward_components(case2, sol, p, _costs(case2, p), _flat_history(case2))
    assert r[7] == pytest.approx(0.25)
    assert reward_components(case2, _manual_solution(case2, 0.1), p, _costs(case2, p), _flat_history(case2))[7] == 0.0


def test_active_power_violation_score(case2):
    # thermal unit at twice its ceiling; the wind unit is inside its bounds
    p = np.array([4.0, 0.3])
    r = reward_components(case2, _manual_solution(case2, 0.1), p, _costs(case2, p), _flat_history(case2))
    assert r[4] == pytest.approx(math.expm1(-1.0 / case2.n_generators))
    literal = reward_components(
        case2,
        _manual_solution(case2, 0.1),
        p,
        _costs(case2, p),
        _flat_history(case2),
        literal_penalty_indexing=True,
    )
    assert literal[4] == 0.0
    assert literal[5] == pytest.approx(math.expm1(-1.0 / case2.n_generators))


def test_fluctuation_and_voltage_bound_components(case2):
    p = np.array([1.0, 0.3])
    sol = _manual_solution(case2, 0.1, v=[1.0, 0.9])
    r = reward_components(case2, sol, p, _costs(case2, p), _flat_history(case2))
    assert r[3] == pytest.approx(-0.1)
    # 0.9 below 0.95: 1 - 0.95 / 0.9, averaged over two buses
    assert r[6] == pytest.approx(math.expm1((1.0 - 0.95 / 0.9) / 2.0))


def test_components_require_convergence(case2):
    p = np.array([1.0, 0.3])
    sol = replace(_manual_solution(case2, 0.1), converged=False)
    with pytest.raises(ConvergenceError):
        reward_components(case2, sol, p, _costs(case2, p), _flat_history(case2))


def test_early_stop_check():
    assert not early_stop_check(10.0, None)
    assert not early_stop_check(10.0, math.inf)
    assert not early_stop_check(5.0, 5.0)
    assert early_stop_check(5.1, 5.0)
    assert not early_stop_check(-3.0, -2.0)
