"""Backward/forward-sweep AC power flow for radial feeders.

Everything inside the solver is per-unit on the case's base MVA; generator and
load quantities cross the API in MW / MVAr. Reactive balance uses the standard
``Q_i = sum V_i V_j (G sin d - B cos d)`` sign convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from moopf.errors import ConvergenceError, ShapeError
from moopf.grid.types import GridCase
from moopf.telemetry import timed

_LOGGER = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITER = 50


@dataclass(frozen=True)
class BusLoads:
    p: np.ndarray  # MW per bus position
    q: np.ndarray  # MVAr per bus position

    @classmethod
    def nominal(cls, case: GridCase, scale: float = 1.0) -> "BusLoads":
        return cls(
            p=np.array([b.load_p for b in case.buses], dtype=float) * scale,
            q=np.array([b.load_q for b in case.buses], dtype=float) * scale,
        )

    @classmethod
    def zeros(cls, case: GridCase) -> "BusLoads":
        return cls(p=np.zeros(case.n_buses), q=np.zeros(case.n_buses))


@dataclass(frozen=True)
class Dispatch:
    """Generator setpoints in case generator order.

    ``p_cap`` limits what a renewable unit can actually deliver (sampled
    availability); ``online`` is False for tripped units, which inject nothing.
    The slack unit's P setpoint is informational: its output is whatever
    balances the feeder.
    """

    p: np.ndarray  # MW
    v: np.ndarray  # p.u.
    p_cap: Optional[np.ndarray] = None
    online: Optional[np.ndarray] = None

    def delivered_p(self) -> np.ndarray:
        p = np.asarray(self.p, dtype=float)
        if self.p_cap is not None:
            p = np.minimum(p, self.p_cap)
        if self.online is not None:
            p = np.where(self.online, p, 0.0)
        return p

    def is_online(self) -> np.ndarray:
        if self.online is None:
            return np.ones(len(self.p), dtype=bool)
        return np.asarray(self.online, dtype=bool)


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray  # complex p.u. per bus
    branch_flow: np.ndarray  # complex p.u., sending (slack-side) end
    branch_current: np.ndarray  # |I| p.u. per branch
    loss_total: float  # MW
    converged: bool
    iterations: int
    p_gen: np.ndarray = field(default_factory=lambda: np.zeros(0))  # MW delivered per generator
    q_gen: np.ndarray = field(default_factory=lambda: np.zeros(0))  # MVAr per generator
    mismatch: float = float("nan")
    slack_power: complex = 0j  # MW + jMVAr generated at the slack bus


@dataclass(frozen=True)
class NodeStateVector:
    p: np.ndarray
    q: np.ndarray
    v: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.column_stack([self.p, self.q, self.v])


def _oriented_arrays(case: GridCase) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    tree = case.tree
    z = np.array([br.impedance for br in case.branches], dtype=complex)
    return tree.branch_parent, tree.branch_child, z, tree.downstream


def _branch_currents(case: GridCase, v: np.ndarray) -> np.ndarray:
    """Current on each branch, parent -> child, from terminal voltages."""
    parent, child, z, _ = _oriented_arrays(case)
    return (v[parent] - v[child]) / z


def _calc_injection(case: GridCase, v: np.ndarray) -> np.ndarray:
    parent, child, _, _ = _oriented_arrays(case)
    current = _branch_currents(case, v)
    inj = np.zeros(case.n_buses, dtype=complex)
    np.add.at(inj, parent, current)
    np.add.at(inj, child, -current)
    return v * np.conj(inj)


def solve(
    case: GridCase,
    dispatch: Dispatch,
    loads: BusLoads,
    *,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PowerFlowSolution:
    """Backward/forward sweep with PV-bus reactive compensation.

    Non-convergence is reported through ``converged=False``; nothing is raised.
    """
    n_gen = case.n_generators
    if len(dispatch.p) != n_gen or len(dispatch.v) != n_gen:
        raise ShapeError(f"dispatch covers {len(dispatch.p)} generators, case has {n_gen}")
    if len(loads.p) != case.n_buses or len(loads.q) != case.n_buses:
        raise ShapeError(f"loads cover {len(loads.p)} buses, case has {case.n_buses}")

    base = case.base_mva
    slack = case.slack_index
    gen_bus = case.generator_bus_index
    online = dispatch.is_online()
    p_del = dispatch.delivered_p()
    _, _, z, down = _oriented_arrays(case)

    v0 = 1.0
    slack_gens = [k for k in range(n_gen) if gen_bus[k] == slack]
    if slack_gens and online[slack_gens[0]]:
        v0 = float(dispatch.v[slack_gens[0]])

    s_load = (np.asarray(loads.p, dtype=float) + 1j * np.asarray(loads.q, dtype=float)) / base
    p_inj = np.zeros(case.n_buses)
    q_fixed = np.zeros(case.n_buses)
    pv_gens: list[int] = []
    q_gen = np.zeros(n_gen)  # p.u.
    for k, gen in enumerate(case.generators):
        pos = gen_bus[k]
        if pos == slack or not online[k]:
            continue
        p_inj[pos] += p_del[k] / base
        if gen.q_min < gen.q_max:
            pv_gens.append(k)
            q_gen[k] = float(np.clip(0.0, gen.q_min, gen.q_max)) / base
        else:
            q_gen[k] = gen.q_min / base
            q_fixed[pos] += q_gen[k]

    x = z.imag
    active = list(pv_gens)
    v = np.full(case.n_buses, v0, dtype=complex)
    mismatch = float("inf")
    converged = False
    iterations = 0

    with timed("powerflow.solve", {"case": case.name}):
        for iterations in range(1, max_iter + 1):
            q_inj = q_fixed.copy()
            for k in pv_gens:
                q_inj[gen_bus[k]] += q_gen[k]
            s_spec = p_inj + 1j * q_inj - s_load

            # backward: branch currents from downstream injections; forward: voltage drops
            i_inj = np.conj(s_spec / v)
            current = -(down @ i_inj)
            v = v0 - down.T @ (z * current)

            if not np.all(np.isfinite(v)) or np.any(np.abs(v) < 1e-3):
                _LOGGER.warning("sweep diverged", extra={"case": case.name, "iteration": iterations})
                break

            s_calc = _calc_injection(case, v)
            diff = np.abs(s_calc - s_spec)
            diff[slack] = 0.0
            mismatch = float(diff.max(initial=0.0))

            dv = np.zeros(0)
            if active:
                pos = gen_bus[active]
                dv = np.asarray(dispatch.v, dtype=float)[active] - np.abs(v[pos])
            # summed, not per-bus: the slack must carry the loss to within tol overall
            if float(diff.sum()) < tol and (dv.size == 0 or float(np.abs(dv).max()) < tol):
                converged = True
                break

            if active:
                cols = down[:, gen_bus[active]]
                x_common = cols.T @ (x[:, None] * cols)
                dq = np.linalg.lstsq(x_common, dv * np.abs(v[gen_bus[active]]), rcond=None)[0]
                still_pv = []
                for k, step in zip(active, dq):
                    gen = case.generators[k]
                    target = q_gen[k] + step
                    lo, hi = gen.q_min / base, gen.q_max / base
                    if target < lo or target > hi:
                        q_gen[k] = float(np.clip(target, lo, hi))
                        _LOGGER.debug("PV->PQ", extra={"case": case.name, "generator": k})
                    else:
                        q_gen[k] = target
                        still_pv.append(k)
                active = still_pv

    if not converged:
        _LOGGER.warning(
            "power flow did not converge",
            extra={"case": case.name, "iterations": iterations, "mismatch": mismatch},
        )

    current = _branch_currents(case, v)
    parent = case.tree.branch_parent
    flow = v[parent] * np.conj(current)

    p_out = np.where(online, p_del, 0.0).astype(float)
    q_out = q_gen * base
    s_slack = complex(_calc_injection(case, v)[slack] * base + complex(loads.p[slack], loads.q[slack]))
    if slack_gens:
        k = slack_gens[0]
        p_out[k] = s_slack.real
        q_out[k] = s_slack.imag
    q_out = np.where(online, q_out, 0.0)

    solution = PowerFlowSolution(
        v=v,
        branch_flow=flow,
        branch_current=np.abs(current),
        loss_total=0.0,
        converged=converged,
        iterations=iterations,
        p_gen=p_out,
        q_gen=q_out,
        mismatch=mismatch,
        slack_power=s_slack,
    )
    loss = _loss_mw(case, v) if np.all(np.isfinite(v)) else float("nan")
    return replace(solution, loss_total=loss)


def _loss_mw(case: GridCase, v: np.ndarray) -> float:
    parent, child, _, _ = _oriented_arrays(case)
    g = np.array([br.conductance for br in case.branches])
    vi = np.abs(v[parent])
    vj = np.abs(v[child])
    delta = np.angle(v[parent]) - np.angle(v[child])
    per_branch = g * (vi**2 + vj**2 - 2.0 * vi * vj * np.cos(delta))
    return float(max(per_branch.sum(), 0.0) * case.base_mva)


def total_loss(case: GridCase, solution: PowerFlowSolution) -> float:
    """Active loss in MW from branch conductances and terminal voltages."""
    if not solution.converged:
        raise ConvergenceError("total_loss needs a converged solution")
    return _loss_mw(case, solution.v)


def _generation(case: GridCase, solution: PowerFlowSolution) -> tuple[np.ndarray, np.ndarray]:
    p = np.zeros(case.n_buses)
    q = np.zeros(case.n_buses)
    slack = case.slack_index
    if len(solution.p_gen):
        mask = case.generator_bus_index != slack
        np.add.at(p, case.generator_bus_index[mask], solution.p_gen[mask])
        np.add.at(q, case.generator_bus_index[mask], solution.q_gen[mask])
    p[slack] = solution.slack_power.real
    q[slack] = solution.slack_power.imag
    return p, q


def balance_residual(
    case: GridCase,
    solution: PowerFlowSolution,
    dispatch: Dispatch,
    loads: BusLoads,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus (dP, dQ) in p.u.: calculated injection minus generation plus load."""
    if len(dispatch.p) != case.n_generators:
        raise ShapeError("dispatch does not cover every generator")
    base = case.base_mva
    p_gen, q_gen = _generation(case, solution)
    s_calc = _calc_injection(case, solution.v)
    dp = s_calc.real - (p_gen - np.asarray(loads.p)) / base
    dq = s_calc.imag - (q_gen - np.asarray(loads.q)) / base
    return dp, dq


def node_states(
    case: GridCase,
    solution: PowerFlowSolution,
    dispatch: Dispatch,
    loads: BusLoads,
) -> NodeStateVector:
    """Per-bus net injection (P, Q in p.u.) and |V|."""
    if len(dispatch.p) != case.n_generators:
        raise ShapeError("dispatch does not cover every generator")
    base = case.base_mva
    p_gen, q_gen = _generation(case, solution)
    return NodeStateVector(
        p=(p_gen - np.asarray(loads.p)) / base,
        q=(q_gen - np.asarray(loads.q)) / base,
        v=np.abs(solution.v),
    )


def check_convergence(prev: NodeStateVector, curr: NodeStateVector, eps: float) -> bool:
    """True iff every node's (P, Q, |V|) moved by at most ``eps`` (2-norm)."""
    a = prev.stacked()
    b = curr.stacked()
    if a.shape != b.shape:
        raise ShapeError(f"node state sets differ in size: {a.shape[0]} vs {b.shape[0]}")
    return bool(np.all(np.linalg.norm(b - a, axis=1) <= eps))


def solution_rows(case: GridCase, solution: PowerFlowSolution) -> list[dict[str, float]]:
    """Bus table for CSV export."""
    s = _calc_injection(case, solution.v) * case.base_mva
    return [
        {
            "bus": bus.id,
            "v_mag": float(abs(solution.v[pos])),
            "v_angle": float(np.angle(solution.v[pos])),
            "p_mw": float(s[pos].real),
            "q_mvar": float(s[pos].imag),
        }
        for pos, bus in enumerate(case.buses)
    ]
