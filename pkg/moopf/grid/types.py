from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Literal, Mapping, Tuple, Union

import numpy as np

BusKind = Literal["slack", "load", "generator"]
GeneratorKind = Literal["thermal", "wind", "solar"]


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    load_p: float  # MW
    load_q: float  # MVAr
    v_min: float
    v_max: float
    v: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    resistance: float  # p.u.
    reactance: float  # p.u.
    s_max: float  # MVA
    i_thermal: float  # p.u.

    @property
    def impedance(self) -> complex:
        return complex(self.resistance, self.reactance)

    @property
    def admittance(self) -> complex:
        return 1.0 / self.impedance

    @property
    def conductance(self) -> float:
        return self.admittance.real

    @property
    def susceptance(self) -> float:
        return self.admittance.imag


@dataclass(frozen=True)
class ThermalCoeffs:
    a: float
    b: float
    c: float
    d: float = 0.0
    e: float = 0.0


@dataclass(frozen=True)
class RenewableCoeffs:
    direct: float  # f (wind) or g (solar), $/MWh
    reserve: float  # h_r
    penalty: float  # h_p


CostCoeffs = Union[ThermalCoeffs, RenewableCoeffs]


@dataclass(frozen=True)
class Generator:
    kind: GeneratorKind
    bus: int
    p_min: float  # MW
    p_max: float
    q_min: float  # MVAr
    q_max: float
    cost: CostCoeffs
    availability: Mapping[str, float] = field(default_factory=dict)

    @property
    def is_renewable(self) -> bool:
        return self.kind in ("wind", "solar")


@dataclass(frozen=True)
class RadialTree:
    """Slack-rooted orientation of the branch set, in breadth-first order.

    ``downstream[b, i]`` is 1 when bus position ``i`` sits below branch ``b``
    (i.e. in the subtree of the branch's child end).
    """

    order: np.ndarray
    parent: np.ndarray
    parent_branch: np.ndarray
    branch_parent: np.ndarray
    branch_child: np.ndarray
    downstream: np.ndarray


@dataclass(frozen=True)
class GridCase:
    name: str
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    generators: Tuple[Generator, ...]
    base_kv: float
    base_mva: float = 100.0

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def _count(self, kind: str) -> int:
        return sum(1 for g in self.generators if g.kind == kind)

    @property
    def n_thermal(self) -> int:
        return self._count("thermal")

    @property
    def n_wind(self) -> int:
        return self._count("wind")

    @property
    def n_solar(self) -> int:
        return self._count("solar")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @cached_property
    def index_of(self) -> Dict[int, int]:
        return {bus.id: pos for pos, bus in enumerate(self.buses)}

    def bus_index(self, bus_id: int) -> int:
        return self.index_of[bus_id]

    @cached_property
    def slack_index(self) -> int:
        return next(pos for pos, bus in enumerate(self.buses) if bus.kind == "slack")

    @cached_property
    def generator_bus_index(self) -> np.ndarray:
        return np.array([self.index_of[g.bus] for g in self.generators], dtype=int)

    @property
    def total_load_p(self) -> float:
        return float(sum(bus.load_p for bus in self.buses))

    @property
    def total_load_q(self) -> float:
        return float(sum(bus.load_q for bus in self.buses))

    @cached_property
    def neighbors(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        """Per bus position: sorted (neighbor bus id, branch index) pairs."""
        table: list[list[tuple[int, int]]] = [[] for _ in self.buses]
        for b, br in enumerate(self.branches):
            table[self.index_of[br.from_bus]].append((br.to_bus, b))
            table[self.index_of[br.to_bus]].append((br.from_bus, b))
        return tuple(tuple(sorted(row)) for row in table)

    @property
    def max_degree(self) -> int:
        return max((len(row) for row in self.neighbors), default=0)

    @cached_property
    def tree(self) -> RadialTree:
        n = self.n_buses
        parent = np.full(n, -1, dtype=int)
        parent_branch = np.full(n, -1, dtype=int)
        root = self.slack_index
        order = [root]
        seen = {root}
        head = 0
        while head < len(order):
            pos = order[head]
            head += 1
            for nb_id, b in self.neighbors[pos]:
                nb = self.index_of[nb_id]
                if nb in seen:
                    continue
                seen.add(nb)
                parent[nb] = pos
                parent_branch[nb] = b
                order.append(nb)
        nb_count = self.n_branches
        branch_parent = np.zeros(nb_count, dtype=int)
        branch_child = np.zeros(nb_count, dtype=int)
        for child in order[1:]:
            b = parent_branch[child]
            branch_parent[b] = parent[child]
            branch_child[b] = child
        downstream = np.zeros((nb_count, n))
        # reverse BFS: each bus marks itself then inherits its children's rows
        for child in reversed(order[1:]):
            b = parent_branch[child]
            downstream[b, child] = 1.0
            up = parent[child]
            if parent_branch[up] >= 0:
                downstream[parent_branch[up]] += downstream[b]
        return RadialTree(
            order=np.asarray(order, dtype=int),
            parent=parent,
            parent_branch=parent_branch,
            branch_parent=branch_parent,
            branch_child=branch_child,
            downstream=downstream,
        )

    def children(self) -> Dict[int, Tuple[int, ...]]:
        """Bus id -> ids of its children when the tree hangs from the slack bus."""
        tree = self.tree
        out: Dict[int, list[int]] = {bus.id: [] for bus in self.buses}
        for pos in tree.order[1:]:
            out[self.buses[tree.parent[pos]].id].append(self.buses[pos].id)
        return {k: tuple(v) for k, v in out.items()}

    def bfs_order(self) -> Tuple[int, ...]:
        return tuple(self.buses[pos].id for pos in self.tree.order)
