"""Single-feeder OPF environment shared by the DDPG agent and the heuristic baselines.

Interval bookkeeping: after ``reset`` the latest solved interval is t0 and
loads/availability for t0 + 1 are already drawn. ``step`` solves that pending
interval under the agent's dispatch, scores it, then draws the next one.

The convergence gate compares the new node states against the previous
dispatch re-solved under the pending interval's loads and availability, so it
measures how far the redispatch moved the operating point.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from collections import deque
from dataclasses import replace
from typing import Deque, Iterable, Optional

import numpy as np

from moopf.astgcn.segments import SegmentConfig, build_segments
from moopf.config import RunConfig
from moopf.economics import (
    RenewableModel,
    VoltageHistory,
    availability_mean,
    sample_availability,
    total_cost,
    with_cost_overrides,
)
from moopf.env.profile import LoadProfile
from moopf.env.rewards import RewardBreakdown, RewardWeights, reward_components
from moopf.env.translog import TransitionLog
from moopf.env.types import EnvState, StepResult
from moopf.errors import ConvergenceError, MoopfError, ShapeError
from moopf.grid.features import GraphSnapshot, feature_width, snapshot
from moopf.grid.topology import build_topology
from moopf.grid.types import GridCase
from moopf.powerflow import (
    BusLoads,
    Dispatch,
    NodeStateVector,
    PowerFlowSolution,
    check_convergence,
    node_states,
    solve,
)
from moopf.telemetry import timed

_LOGGER = logging.getLogger(__name__)

# observation scaling: |V| deviation of 0.05 p.u. and 0.1 rad map to 1
_V_SCALE = 1.0 / 0.05
_ANGLE_SCALE = 10.0


class OPFEnv:
    """One environment instance is single-threaded; use ``clone`` for probing."""

    def __init__(
        self,
        case: GridCase,
        config: Optional[RunConfig] = None,
        *,
        transition_log: Optional[TransitionLog] = None,
    ) -> None:
        self.config = config if config is not None else RunConfig(case=case.name)
        self.case = with_cost_overrides(case, self.config.renewables)
        self.topology = build_topology(self.case)
        gens = self.case.generators
        self.models = {
            k: RenewableModel.from_config(self.config.renewables, g)
            for k, g in enumerate(gens)
            if g.is_renewable
        }
        env_cfg = self.config.env
        self.profile = LoadProfile.from_config(self.case, env_cfg)
        self.segment_config: Optional[SegmentConfig] = (
            SegmentConfig.from_config(self.config.astgcn, env_cfg) if self.config.astgcn.enabled else None
        )
        seg_depth = self.segment_config.depth if self.segment_config is not None else 1
        self.history_depth = max(seg_depth, env_cfg.fluctuation_window)
        self.n_features = feature_width(self.case)

        bus_of = self.case.generator_bus_index
        self._p_lo = np.array([g.p_min for g in gens], dtype=float)
        self._p_hi = np.array([g.p_max for g in gens], dtype=float)
        self._v_lo = np.array([self.case.buses[i].v_min for i in bus_of], dtype=float)
        self._v_hi = np.array([self.case.buses[i].v_max for i in bus_of], dtype=float)
        self._renewable = np.array([g.is_renewable for g in gens], dtype=bool)
        self._expected = np.array(
            [
                float(np.clip(availability_mean(self.models[k]), g.p_min, g.p_max)) if g.is_renewable else 0.0
                for k, g in enumerate(gens)
            ]
        )

        self._log = transition_log
        self._episode = -1
        self._ready = False
        self._online = np.ones(len(gens), dtype=bool)
        self._rng = np.random.default_rng(0)
        self.c_norm = self._base_cost()
        self.weights = RewardWeights.from_config(self.config.rewards, self.c_norm)

    # ------------------------------------------------------------------ shapes

    @property
    def n_generators(self) -> int:
        return self.case.n_generators

    @property
    def action_dim(self) -> int:
        return 2 * self.case.n_generators

    @property
    def state_width(self) -> int:
        return self.case.n_buses * self.n_features

    def feature_scaling(self) -> tuple[np.ndarray, np.ndarray]:
        """(offset, scale) per feature column so (X - offset) * scale is O(1)."""
        case = self.case
        s_ref = float(np.hypot(case.total_load_p, case.total_load_q)) / case.base_mva / case.n_buses
        s_ref = max(s_ref, 1e-6)
        offset = np.zeros(self.n_features)
        scale = np.full(self.n_features, 1.0 / s_ref)
        offset[2] = 1.0
        scale[2] = _V_SCALE
        scale[3] = _ANGLE_SCALE
        return offset, scale

    # ----------------------------------------------------------------- actions

    def denormalize(self, action: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """[-1, 1]^(2 N_g) -> (P MW, |V| p.u.); P entries first, then |V|."""
        a = np.clip(np.asarray(action, dtype=float).reshape(-1), -1.0, 1.0)
        if a.shape != (self.action_dim,):
            raise ShapeError(f"action has {a.size} entries, env expects {self.action_dim}")
        n = self.n_generators
        frac_p = 0.5 * (a[:n] + 1.0)
        frac_v = 0.5 * (a[n:] + 1.0)
        p = self._p_lo + frac_p * (self._p_hi - self._p_lo)
        v = self._v_lo + frac_v * (self._v_hi - self._v_lo)
        return p, v

    def normalize(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        def to_unit(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
            span = hi - lo
            out = np.where(span > 0.0, 2.0 * (np.asarray(x, dtype=float) - lo) / np.where(span > 0.0, span, 1.0) - 1.0, 0.0)
            return np.clip(out, -1.0, 1.0)

        return np.concatenate([to_unit(p, self._p_lo, self._p_hi), to_unit(v, self._v_lo, self._v_hi)])

    def nominal_dispatch(self) -> tuple[np.ndarray, np.ndarray]:
        """Thermal units at mid-range, renewables at expected availability, |V| = 1.0."""
        p = np.where(self._renewable, self._expected, 0.5 * (self._p_lo + self._p_hi))
        v = np.clip(1.0, self._v_lo, self._v_hi)
        return p, v

    def operating_action(self) -> np.ndarray:
        """The dispatch currently in force, in normalized form."""
        self._require_ready()
        return self.normalize(self._sched_p, self._sched_v)

    # --------------------------------------------------------------- internals

    def _sample_availability(self, rng: np.random.Generator) -> np.ndarray:
        avail = np.full(self.n_generators, np.inf)
        for k, model in self.models.items():
            avail[k] = sample_availability(model, rng)
        return avail

    def _solve(
        self, p: np.ndarray, v: np.ndarray, loads: BusLoads, avail: Optional[np.ndarray]
    ) -> PowerFlowSolution:
        return solve(
            self.case,
            self._dispatch(p, v, avail),
            loads,
            tol=self.config.env.solver_tolerance,
            max_iter=self.config.env.solver_max_iter,
        )

    def _dispatch(self, p: np.ndarray, v: np.ndarray, avail: Optional[np.ndarray]) -> Dispatch:
        return Dispatch(p=p, v=v, p_cap=avail, online=self._online.copy())

    def _applied_p(self, solution: PowerFlowSolution, p_sched: np.ndarray) -> np.ndarray:
        """MW per generator for costing: renewable schedules, delivered thermal output."""
        rer = np.where(self._online, np.clip(p_sched, self._p_lo, self._p_hi), self._p_lo)
        return np.where(self._renewable, rer, solution.p_gen)

    def _base_cost(self) -> float:
        p, v = self.nominal_dispatch()
        sol = solve(self.case, Dispatch(p=p, v=v), BusLoads.nominal(self.case))
        if not sol.converged:
            _LOGGER.warning("base case did not converge; cost normalizer set to 1", extra={"case": self.case.name})
            return 1.0
        cost = total_cost(self.case, self._applied_p(sol, p), self.models).total
        return cost if cost > 0.0 else 1.0

    def _warm_up(self, t0: int, rng: np.random.Generator) -> bool:
        p, v = self.nominal_dispatch()
        depth = self.history_depth
        snaps: Deque[GraphSnapshot] = deque(maxlen=depth)
        vhist = VoltageHistory(self.config.env.fluctuation_window, self.case.n_buses)
        frozen = self.config.env.frozen_profile
        loads: Optional[BusLoads] = None
        avail: Optional[np.ndarray] = None
        sol: Optional[PowerFlowSolution] = None
        for tau in range(t0 - depth + 1, t0 + 1):
            if loads is None or not frozen:
                loads = self.profile.loads(tau, rng)
                avail = self._sample_availability(rng)
            sol = self._solve(p, v, loads, avail)
            if not sol.converged:
                return False
            snaps.append(snapshot(self.case, sol, tau))
            vhist.push(np.abs(sol.v))
        assert loads is not None and sol is not None
        self._loads = loads
        self._avail = avail
        self._sched_p = p
        self._sched_v = v
        self._solution = sol
        self._node_state = node_states(self.case, sol, self._dispatch(p, v, avail), loads)
        self._snapshots = snaps
        self._vhist = vhist
        self._t = t0
        return True

    def _carry_forward(self, *, force: bool = False) -> NodeStateVector:
        """Node states of the dispatch in force, solved under the pending interval."""
        if self.config.env.frozen_profile and not force:
            return self._node_state
        sol = self._solve(self._sched_p, self._sched_v, self._loads, self._avail)
        if not sol.converged:
            return self._node_state
        return node_states(self.case, sol, self._dispatch(self._sched_p, self._sched_v, self._avail), self._loads)

    def _advance(self) -> None:
        self._t += 1
        if not self.config.env.frozen_profile:
            self._loads = self.profile.loads(self._t, self._rng)
            self._avail = self._sample_availability(self._rng)
        self._reference = self._carry_forward()

    def _state(self) -> EnvState:
        latest = self._snapshots[-1]
        segments = None
        if self.segment_config is not None:
            segments = build_segments(self._snapshots, latest.time_index, self.segment_config)
        return EnvState(t=latest.time_index, X=latest.X, segments=segments)

    def _require_ready(self) -> None:
        if not self._ready:
            raise MoopfError("environment needs reset() before stepping")

    def _evaluate(
        self, action: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, PowerFlowSolution, RewardBreakdown]:
        p, v = self.denormalize(action)
        sol = self._solve(p, v, self._loads, self._avail)
        if not sol.converged:
            return p, v, sol, RewardBreakdown.diverged(self.config.rewards.divergence_reward)
        applied = self._applied_p(sol, p)
        costs = total_cost(self.case, applied, self.models)
        rc = self.config.rewards
        comps = reward_components(
            self.case,
            sol,
            applied,
            costs,
            self._vhist,
            line_loss_rate=rc.line_loss_rate,
            thermal_epsilon=rc.thermal_epsilon,
            literal_penalty_indexing=rc.literal_penalty_indexing,
        )
        return p, v, sol, RewardBreakdown(components=comps)

    # ---------------------------------------------------------------- episode

    def reset(self, seed: Optional[int] = None) -> EnvState:
        rng = np.random.default_rng(seed)
        n_week = 7 * self.config.env.intervals_per_day
        attempts = self.config.env.warmup_attempts
        with timed("env.reset", {"case": self.case.name}):
            for attempt in range(1, attempts + 1):
                t0 = self.history_depth - 1 + int(rng.integers(0, n_week))
                if self._warm_up(t0, rng):
                    break
                _LOGGER.warning(
                    "warm-up power flow diverged; redrawing",
                    extra={"case": self.case.name, "attempt": attempt, "t0": t0},
                )
            else:
                raise ConvergenceError(f"warm-up diverged {attempts} times on {self.case.name}")
        self._rng = rng
        self._episode += 1
        self._steps = 0
        self._ready = True
        self._advance()
        return self._state()

    def step(self, action: np.ndarray) -> StepResult:
        self._require_ready()
        eps = self.config.env.gate_tolerance
        with timed("env.step", {"case": self.case.name}) as tm:
            p, v, sol, breakdown = self._evaluate(action)
            reward = breakdown.total(self.weights)
            if not sol.converged:
                self._ready = False
                result = StepResult(
                    state=self._state(),
                    reward=reward,
                    breakdown=breakdown,
                    terminal=True,
                    reason="diverged",
                    gate_passed=False,
                    solution=sol,
                )
                _LOGGER.info("step diverged", extra={"case": self.case.name, "t": self._t})
            else:
                new_state = node_states(self.case, sol, self._dispatch(p, v, self._avail), self._loads)
                gate = check_convergence(self._reference, new_state, eps)
                self._vhist.push(np.abs(sol.v))
                self._snapshots.append(snapshot(self.case, sol, self._t))
                self._node_state = new_state
                self._sched_p = p
                self._sched_v = v
                self._solution = sol
                self._steps += 1
                horizon = self._steps >= self.config.env.episode_length
                terminal = (not gate) or horizon
                reason = "gate" if not gate else ("horizon" if horizon else "")
                result = StepResult(
                    state=self._state(),
                    reward=reward,
                    breakdown=breakdown,
                    terminal=terminal,
                    reason=reason,  # type: ignore[arg-type]
                    gate_passed=gate,
                    solution=sol,
                )
                if terminal:
                    self._ready = False
                else:
                    self._advance()
        if self._log is not None:
            self._log.record(self._episode, result.state.t, reward, breakdown, result.terminal, result.reason)
            if result.terminal:
                self._log.flush()
        return replace(result, seconds=float(tm["seconds"]))

    def peek_reward(self, action: np.ndarray) -> float:
        """Reward ``step`` would pay for ``action`` now; leaves the env untouched."""
        self._require_ready()
        _, _, _, breakdown = self._evaluate(action)
        return breakdown.total(self.weights)

    # ------------------------------------------------------------ inspection

    @property
    def episode(self) -> int:
        return self._episode

    @property
    def steps(self) -> int:
        return getattr(self, "_steps", 0)

    @property
    def pending_interval(self) -> int:
        return self._t

    @property
    def loads(self) -> BusLoads:
        return self._loads

    @property
    def availability(self) -> np.ndarray:
        return self._avail.copy()

    @property
    def solution(self) -> PowerFlowSolution:
        return self._solution

    @property
    def snapshots(self) -> tuple[GraphSnapshot, ...]:
        return tuple(self._snapshots)

    @property
    def voltage_history(self) -> VoltageHistory:
        return self._vhist.copy()

    def voltages_in_bounds(self, solution: Optional[PowerFlowSolution] = None) -> bool:
        sol = solution if solution is not None else self._solution
        vmag = np.abs(sol.v)
        lo = np.array([b.v_min for b in self.case.buses])
        hi = np.array([b.v_max for b in self.case.buses])
        return bool(np.all((vmag >= lo) & (vmag <= hi)))

    # ---------------------------------------------------------------- faults

    def generator_at(self, bus_id: int) -> int:
        for k, gen in enumerate(self.case.generators):
            if gen.bus == bus_id:
                return k
        raise MoopfError(f"no generator attached to bus {bus_id}")

    def inject_fault(self, gen_indices: Iterable[int]) -> None:
        """Trip the given generators: their output is forced to 0 until cleared."""
        slack = self.case.slack_index
        for k in gen_indices:
            if not 0 <= int(k) < self.n_generators:
                raise MoopfError(f"generator index {k} out of range")
            if self.case.generator_bus_index[int(k)] == slack:
                raise MoopfError("the slack unit cannot be tripped")
            self._online[int(k)] = False
        if self._ready:
            self._reference = self._carry_forward(force=True)

    def clear_faults(self) -> None:
        self._online[:] = True
        if self._ready:
            self._reference = self._carry_forward(force=True)

    @property
    def online(self) -> np.ndarray:
        return self._online.copy()

    # ------------------------------------------------------------ copy/hash

    def clone(self) -> "OPFEnv":
        """Independent copy for probing; never writes to the transition log."""
        other = copy.copy(self)
        other._rng = copy.deepcopy(self._rng)
        other._online = self._online.copy()
        other._log = None
        if hasattr(self, "_snapshots"):
            other._snapshots = deque(self._snapshots, maxlen=self._snapshots.maxlen)
            other._vhist = self._vhist.copy()
        return other

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self._episode}|{self._ready}|{self.steps}".encode())
        h.update(self._online.astype(np.uint8).tobytes())
        h.update(json.dumps(self._rng.bit_generator.state, sort_keys=True, default=str).encode())
        if hasattr(self, "_snapshots"):
            h.update(f"{self._t}|{len(self._snapshots)}|{self._snapshots[-1].time_index}".encode())
            arrays = [
                self._loads.p,
                self._loads.q,
                self._avail,
                self._sched_p,
                self._sched_v,
                self._vhist.values(),
                self._snapshots[-1].X,
                self._node_state.stacked(),
            ]
            if hasattr(self, "_reference"):
                arrays.append(self._reference.stacked())
            for arr in arrays:
                h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return h.hexdigest()
