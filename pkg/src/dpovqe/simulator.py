"""Exact statevector simulation, diagonal expectation values and seeded sampling.

Amplitude index ``i`` carries qubit ``q`` in bit ``(i >> q) & 1``. Outcomes are
reported as left-to-right bitstrings (character ``q`` is qubit ``q``).
Sampling uses numpy's PCG64 generator (``numpy.random.default_rng(seed)``)
and a single multinomial draw, so identical inputs give identical counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuits import Circuit, Gate
from .errors import DimensionMismatch, ParamCountMismatch, QubitCapExceeded
from .problem import IsingHamiltonian, index_to_bitstring

DEFAULT_QUBIT_CAP = 24


class StateVector:
    """Owned, mutable register of ``2**n_qubits`` complex128 amplitudes."""

    def __init__(self, n_qubits: int, amplitudes=None, cap: int = DEFAULT_QUBIT_CAP):
        if n_qubits > cap:
            raise QubitCapExceeded(n_qubits, cap)
        self.n_qubits = n_qubits
        self.cap = cap
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (1 << n_qubits,):
                raise DimensionMismatch(f"expected {1 << n_qubits} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy(), cap=self.cap)

    def probabilities(self) -> np.ndarray:
        return self.amplitudes.real**2 + self.amplitudes.imag**2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))

    def amplitude(self, bitstring: str) -> complex:
        idx = sum(1 << q for q, ch in enumerate(bitstring) if ch == "1")
        return complex(self.amplitudes[idx])

    def apply(self, gate: Gate, params=None) -> None:
        psi = self.amplitudes
        q = gate.qubits
        if gate.kind == "CNOT":
            kernels.apply_cnot(psi, q[0], q[1])
            return
        if gate.kind == "SWAP":
            kernels.apply_swap(psi, q[0], q[1])
            return
        theta = float(params[gate.param]) if gate.param is not None else float(gate.angle)
        if gate.kind == "RY":
            kernels.apply_ry(psi, q[0], theta)
        elif gate.kind == "RX":
            kernels.apply_rx(psi, q[0], theta)
        elif gate.kind == "RZ":
            kernels.apply_rz(psi, q[0], theta)
        elif gate.kind == "RZZ":
            kernels.apply_rzz(psi, q[0], q[1], theta)
        else:
            raise ValueError(f"cannot simulate gate kind {gate.kind!r}")

    def run(self, circuit: Circuit, params=()) -> "StateVector":
        if circuit.n_qubits != self.n_qubits:
            raise DimensionMismatch(f"circuit has {circuit.n_qubits} qubits, state has {self.n_qubits}")
        params = np.asarray(params, dtype=float)
        if params.shape != (circuit.n_params,):
            raise ParamCountMismatch(f"circuit takes {circuit.n_params} parameters, got {params.shape[0]}")
        for g in circuit.gates:
            self.apply(g, params)
        return self


def simulate(circuit: Circuit, params=(), cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Run ``circuit`` from |0...0>."""
    if circuit.n_qubits > cap:
        raise QubitCapExceeded(circuit.n_qubits, cap)
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.shape[0] != circuit.n_params:
        raise ParamCountMismatch(f"circuit takes {circuit.n_params} parameters, got {params.shape[0]}")
    return StateVector(circuit.n_qubits, cap=cap).run(circuit, params)


def expectation_diagonal(state: StateVector, h: IsingHamiltonian, table: np.ndarray | None = None) -> float:
    """<psi|H|psi> for diagonal H.

    Without ``table`` the costs are streamed (Gray-code walk in the compiled
    kernel, chunked otherwise); with a precomputed cost table it is a dot product.
    """
    if state.n_qubits != h.n_qubits:
        raise DimensionMismatch(f"state has {state.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    probs = state.probabilities()
    if table is not None:
        return float(probs @ table)
    ptr, idx, val = h.adjacency
    return float(kernels.diag_expectation(probs, h.n_qubits, h.identity_coeff, h.h_vector, ptr, idx, val))


@dataclass
class SampleResult:
    shots: int
    counts: dict[str, int]
    seed: int
    index_counts: dict[int, int] = field(default_factory=dict, repr=False)


def sample(state: StateVector, shots: int, seed: int) -> SampleResult:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    drawn = rng.multinomial(shots, probs)
    nz = np.flatnonzero(drawn)
    index_counts = {int(i): int(drawn[i]) for i in nz}
    counts = {index_to_bitstring(i, state.n_qubits): c for i, c in index_counts.items()}
    return SampleResult(shots, counts, seed, index_counts)


def exact_distribution(state: StateVector, prune: float = 1e-15) -> dict[str, float]:
    probs = state.probabilities()
    keep = np.flatnonzero(probs >= prune)
    return {index_to_bitstring(int(i), state.n_qubits): float(probs[i]) for i in keep}


def uniform_superposition(n_qubits: int, cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """RY(pi/2) on every qubit of |0...0>."""
    state = StateVector(n_qubits, cap=cap)
    for q in range(n_qubits):
        kernels.apply_ry(state.amplitudes, q, np.pi / 2)
    return state
