"""Parameterised circuit representation, ansatz constructors, depth and routing."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DegenerateBlock, DisconnectedMap, TooFewTimeSteps
from .problem import DpoConfig, qubit_index

ONE_QUBIT = frozenset({"RY", "RX", "RZ"})
TWO_QUBIT = frozenset({"RZZ", "CNOT", "SWAP"})
ROTATIONS = frozenset({"RY", "RX", "RZ", "RZZ"})


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param: int | None = None
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in ONE_QUBIT:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit")
        elif self.kind in TWO_QUBIT:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ROTATIONS:
            if (self.param is None) == (self.angle is None):
                raise ValueError(f"{self.kind} needs exactly one of param slot or fixed angle")
        elif self.param is not None or self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.param is not None:
            doc["param_slot"] = self.param
        if self.angle is not None:
            doc["angle"] = self.angle
        return doc


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        used = set()
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")
            if g.param is not None:
                if not 0 <= g.param < self.n_params:
                    raise ValueError(f"parameter slot {g.param} outside 0..{self.n_params - 1}")
                used.add(g.param)
        if len(used) != self.n_params:
            raise ValueError("every parameter slot must be referenced by some gate")

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "gates": [g.to_json() for g in self.gates],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Circuit":
        gates = [
            Gate(g["kind"], tuple(g["qubits"]), g.get("param_slot"), g.get("angle"))
            for g in doc["gates"]
        ]
        return cls(int(doc["n_qubits"]), tuple(gates), int(doc["n_params"]))


class _Builder:
    def __init__(self, n_qubits: int):
        self.n_qubits = n_qubits
        self.gates: list[Gate] = []
        self.n_params = 0

    def ry(self, q):
        self.gates.append(Gate("RY", (q,), param=self.n_params))
        self.n_params += 1

    def cnot(self, control, target):
        self.gates.append(Gate("CNOT", (control, target)))

    def real_amplitudes(self, qubits: Sequence[int], reps: int):
        """Reverse-linear RA over ``qubits`` in the given local order."""
        for _ in range(reps):
            for q in qubits:
                self.ry(q)
            for i in range(len(qubits) - 2, -1, -1):
                self.cnot(qubits[i], qubits[i + 1])
        for q in qubits:
            self.ry(q)

    def build(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(self.gates), self.n_params)


def cyclic_cnots(n_q: int, d: int) -> list[tuple[int, int]]:
    """(control, target) pairs of one cyclic entangling block of range ``d``."""
    if d < 1:
        raise ValueError("range d must be >= 1")
    if d % n_q == 0:
        raise DegenerateBlock(f"range {d} is a multiple of {n_q}; control would equal target")
    count = n_q // math.gcd(n_q, d)
    return [(d * (n_q - j) % n_q, d * (n_q - j - 1) % n_q) for j in range(1, count + 1)]


def build_cyclic(n_q: int, ranges: Sequence[int] = (1, 3)) -> Circuit:
    if n_q < 2:
        raise ValueError("the cyclic ansatz needs at least 2 qubits")
    b = _Builder(n_q)
    for d in ranges:
        pairs = cyclic_cnots(n_q, d)
        for q in range(n_q):
            b.ry(q)
        for c, t in pairs:
            b.cnot(c, t)
    return b.build()


def build_real_amplitudes(n_q: int, reps: int = 3) -> Circuit:
    if n_q < 1 or reps < 0:
        raise ValueError("need n_q >= 1 and reps >= 0")
    b = _Builder(n_q)
    b.real_amplitudes(list(range(n_q)), reps)
    return b.build()


def _block(config: DpoConfig, t: int, a: int) -> list[int]:
    return [qubit_index(t, a, r, config) for r in range(config.n_r)]


def build_ora(config: DpoConfig, reps_per_block: int = 3) -> Circuit:
    """RA blocks over the qubits of (t, a) and (t+1, a), one per asset and time pair."""
    if config.n_t < 2:
        raise TooFewTimeSteps("the ORA ansatz links consecutive time steps; need n_t >= 2")
    b = _Builder(config.n_q)
    for t in range(config.n_t - 1):
        for a in range(config.n_a):
            b.real_amplitudes(_block(config, t, a) + _block(config, t + 1, a), reps_per_block)
    return b.build()


def build_tailored(config: DpoConfig) -> Circuit:
    """Blocked ansatz: intra / inter-asset / intra / inter-time / intra layers."""
    b = _Builder(config.n_q)

    def intra_layer():
        for t in range(config.n_t):
            for a in range(config.n_a):
                b.real_amplitudes(_block(config, t, a), 1)

    intra_layer()
    for t in range(config.n_t):
        for a in range(config.n_a - 1):
            b.cnot(_block(config, t, a)[-1], _block(config, t, a + 1)[0])
    intra_layer()
    for a in range(config.n_a):
        for t in range(config.n_t - 1):
            b.cnot(_block(config, t, a)[0], _block(config, t + 1, a)[0])
    intra_layer()
    return b.build()


ANSATZ_FAMILIES = ("cyclic", "real_amplitudes", "ora", "tailored")


def build_ansatz(name: str, config: DpoConfig, *, reps: int = 3, ranges=(1, 3), reps_per_block: int = 3) -> Circuit:
    if name == "cyclic":
        return build_cyclic(config.n_q, ranges)
    if name == "real_amplitudes":
        return build_real_amplitudes(config.n_q, reps)
    if name == "ora":
        return build_ora(config, reps_per_block)
    if name == "tailored":
        return build_tailored(config)
    raise ValueError(f"unknown ansatz {name!r}; choose from {', '.join(ANSATZ_FAMILIES)}")


def logical_depth(circuit: Circuit) -> int:
    """ASAP depth: every gate starts one layer after the latest gate on its qubits."""
    frontier = [0] * circuit.n_qubits
    depth = 0
    for g in circuit.gates:
        layer = max(frontier[q] for q in g.qubits) + 1
        for q in g.qubits:
            frontier[q] = layer
        depth = max(depth, layer)
    return depth


@dataclass(frozen=True)
class CouplingMap:
    n_physical: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = set()
        for p, q in self.edges:
            p, q = int(p), int(q)
            if p == q or not (0 <= p < self.n_physical and 0 <= q < self.n_physical):
                raise ValueError(f"bad edge ({p}, {q})")
            norm.add((min(p, q), max(p, q)))
        object.__setattr__(self, "edges", frozenset(norm))

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_physical)]
        for p, q in self.edges:
            adj[p].append(q)
            adj[q].append(p)
        return [sorted(x) for x in adj]

    def adjacent(self, p: int, q: int) -> bool:
        return (min(p, q), max(p, q)) in self.edges

    @classmethod
    def line(cls, n: int) -> "CouplingMap":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @classmethod
    def grid(cls, rows: int, cols: int) -> "CouplingMap":
        edges = set()
        for r in range(rows):
            for c in range(cols):
                p = r * cols + c
                if c + 1 < cols:
                    edges.add((p, p + 1))
                if r + 1 < rows:
                    edges.add((p, p + cols))
        return cls(rows * cols, frozenset(edges))

    @classmethod
    def from_edge_list(cls, path) -> "CouplingMap":
        edges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'p q', got {line!r}")
                edges.append((int(parts[0]), int(parts[1])))
        n = 1 + max((max(e) for e in edges), default=-1)
        return cls(n, frozenset(edges))


def tailored_grid(config: DpoConfig) -> tuple[CouplingMap, list[int]]:
    """Grid map with one column per time step and one row per (asset, bit).

    Block (t, a) sits in column t, rows a*n_r .. a*n_r + n_r - 1, so intra-asset
    chains and inter-asset boundary pairs are vertical neighbours and the
    inter-time pairs are horizontal neighbours.
    """
    rows, cols = config.n_a * config.n_r, config.n_t
    layout = [0] * config.n_q
    for t in range(config.n_t):
        for a in range(config.n_a):
            for r in range(config.n_r):
                layout[qubit_index(t, a, r, config)] = (a * config.n_r + r) * cols + t
    return CouplingMap.grid(rows, cols), layout


@dataclass(frozen=True)
class RoutingResult:
    routed_circuit: Circuit
    depth: int
    swap_count: int
    final_layout: tuple[int, ...]


def _shortest_path(adj: list[list[int]], src: int, dst: int) -> list[int] | None:
    parent = {src: None}
    queue = deque([src])
    while queue:
        p = queue.popleft()
        if p == dst:
            break
        for q in adj[p]:
            if q not in parent:
                parent[q] = p
                queue.append(q)
    if dst not in parent:
        return None
    path = [dst]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def _check_connected(adj, nodes: Iterable[int]):
    nodes = list(nodes)
    if not nodes:
        return
    seen = {nodes[0]}
    queue = deque([nodes[0]])
    while queue:
        p = queue.popleft()
        for q in adj[p]:
            if q not in seen:
                seen.add(q)
                queue.append(q)
    missing = [p for p in nodes if p not in seen]
    if missing:
        raise DisconnectedMap(f"physical qubits {missing} are not connected to {nodes[0]}")


def route_and_depth(circuit: Circuit, cmap: CouplingMap, layout: Sequence[int] | None = None) -> RoutingResult:
    """Insert SWAPs so every two-qubit gate acts on coupled physical qubits.

    For a gate on non-adjacent qubits, the control walks along a BFS shortest
    path (neighbours explored in ascending order) until it neighbours the
    target. The logical-to-physical layout is updated by each SWAP.
    """
    if layout is None:
        layout = list(range(circuit.n_qubits))
    l2p = [int(p) for p in layout]
    if len(l2p) != circuit.n_qubits:
        raise ValueError(f"layout has {len(l2p)} entries for {circuit.n_qubits} qubits")
    if len(set(l2p)) != len(l2p) or any(not 0 <= p < cmap.n_physical for p in l2p):
        raise ValueError("layout must be an injective map into the physical qubits")
    adj = cmap.neighbours()
    _check_connected(adj, l2p)
    p2l = {p: lq for lq, p in enumerate(l2p)}

    out: list[Gate] = []
    swaps = 0
    for g in circuit.gates:
        if len(g.qubits) == 2:
            a, b = g.qubits
            pa, pb = l2p[a], l2p[b]
            if not cmap.adjacent(pa, pb):
                path = _shortest_path(adj, pa, pb)
                if path is None:
                    raise DisconnectedMap(f"no path between physical qubits {pa} and {pb}")
                for u, v in zip(path[:-2], path[1:-1]):
                    out.append(Gate("SWAP", (u, v)))
                    swaps += 1
                    lu, lv = p2l.get(u), p2l.get(v)
                    p2l.pop(u, None)
                    p2l.pop(v, None)
                    if lu is not None:
                        l2p[lu] = v
                        p2l[v] = lu
                    if lv is not None:
                        l2p[lv] = u
                        p2l[u] = lv
        out.append(Gate(g.kind, tuple(l2p[q] for q in g.qubits), g.param, g.angle))
    routed = Circuit(cmap.n_physical, tuple(out), circuit.n_params)
    return RoutingResult(routed, logical_depth(routed), swaps, tuple(l2p))
