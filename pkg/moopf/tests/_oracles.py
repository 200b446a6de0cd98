"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import numpy as np

from moopf.grid.types import GridCase
from moopf.powerflow import BusLoads, PowerFlowSolution


def admittance_matrix(case: GridCase) -> np.ndarray:
    n = case.n_buses
    ybus = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        i = case.bus_index(br.from_bus)
        j = case.bus_index(br.to_bus)
        y = br.admittance
        ybus[i, i] += y
        ybus[j, j] += y
        ybus[i, j] -= y
        ybus[j, i] -= y
    return ybus


def newton_raphson(
    case: GridCase,
    injection: np.ndarray,
    *,
    v_slack: complex = 1.0 + 0.0j,
    tol: float = 1e-12,
    max_iter: int = 30,
) -> np.ndarray:
    """Rectangular-coordinate Newton-Raphson with every non-slack bus PQ.

    ``injection`` is the specified complex net injection per bus in p.u.
    """
    ybus = admittance_matrix(case)
    n = case.n_buses
    slack = case.slack_index
    free = np.array([k for k in range(n) if k != slack], dtype=int)
    v = np.full(n, v_slack, dtype=complex)
    for _ in range(max_iter):
        current = ybus @ v
        mismatch = (v * np.conj(current) - injection)[free]
        if np.max(np.abs(mismatch), initial=0.0) < tol:
            return v
        d_de = np.diag(np.conj(current)) + np.diag(v) @ np.conj(ybus)
        d_df = 1j * np.diag(np.conj(current)) - 1j * np.diag(v) @ np.conj(ybus)
        d_de = d_de[np.ix_(free, free)]
        d_df = d_df[np.ix_(free, free)]
        jac = np.block([[d_de.real, d_df.real], [d_de.imag, d_df.imag]])
        rhs = np.concatenate([mismatch.real, mismatch.imag])
        step = np.linalg.solve(jac, -rhs)
        m = free.size
        v[free] += step[:m] + 1j * step[m:]
    raise AssertionError("Newton-Raphson oracle did not converge")


def injections_from_solution(case: GridCase, solution: PowerFlowSolution, loads: BusLoads) -> np.ndarray:
    """Net p.u. injection per bus taking the sweep's generator outputs as fixed PQ values."""
    base = case.base_mva
    s = -(np.asarray(loads.p) + 1j * np.asarray(loads.q)) / base
    for k, pos in enumerate(case.generator_bus_index):
        if pos == case.slack_index:
            continue
        s[pos] += (solution.p_gen[k] + 1j * solution.q_gen[k]) / base
    return s


def branch_i2r_loss(case: GridCase, v: np.ndarray) -> float:
    """Sum of |I|^2 R over branches, p.u."""
    total = 0.0
    for br in case.branches:
        i = case.bus_index(br.from_bus)
        j = case.bus_index(br.to_bus)
        current = (v[i] - v[j]) / br.impedance
        total += abs(current) ** 2 * br.resistance
    return total


def monte_carlo_expectations(model, p_sched: float, samples: int, seed: int = 0) -> tuple[float, float]:
    """(E[(p - P_a)^+], E[(P_a - p)^+]) by direct sampling of the resource."""
    rng = np.random.default_rng(seed)
    short = 0.0
    surplus = 0.0
    chunk = 1_000_000
    drawn = 0
    while drawn < samples:
        size = min(chunk, samples - drawn)
        if model.kind == "wind":
            resource = model.scale * rng.weibull(model.shape, size=size)
        else:
            resource = rng.lognormal(model.mu, model.sigma, size=size)
        avail = model.power_curve(resource)
        short += float(np.sum(np.maximum(p_sched - avail, 0.0)))
        surplus += float(np.sum(np.maximum(avail - p_sched, 0.0)))
        drawn += size
    return short / samples, surplus / samples


def spectral_filter(scaled_laplacian: np.ndarray, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """U diag(sum_k c_k T_k(lambda)) U^T x by dense eigendecomposition."""
    lam, u = np.linalg.eigh(scaled_laplacian)
    theta = np.arccos(np.clip(lam, -1.0, 1.0))
    gain = sum(c * np.cos(k * theta) for k, c in enumerate(coeffs))
    return u @ np.diag(gain) @ u.T @ x
