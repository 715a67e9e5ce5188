"""Reference solvers: exhaustive enumeration, simulated annealing and a
Trotterised simulated adiabatic evolution (SAE) on the statevector simulator.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, QubitCapExceeded, TooLarge
from .problem import IsingHamiltonian, cost_of_bitstring, index_to_bitstring
from .simulator import DEFAULT_QUBIT_CAP, SampleResult, StateVector, expectation_diagonal, sample, uniform_superposition
from .vqe import CostDistribution, build_distribution, default_sampler_shots

EXHAUSTIVE_MAX_QUBITS = 24
TABLE_MAX_QUBITS = 16
_NAIVE_CHUNK = 1 << 16

# Schedule lengths per preset size, used as defaults by the CLI.
SAE_TOTAL_TIME = {"xs": 7.0, "s": 19.5, "m": 20.0, "l": 7.0, "xl": 11.0, "xxl": 12.0}


@dataclass
class ExhaustiveResult:
    min_cost: float
    argmin: str
    table: np.ndarray | None = field(default=None, repr=False)


def _tie_tolerance(h: IsingHamiltonian) -> float:
    return 1e-10 * max(h.coefficient_scale, 1.0)


def _reverse_bits(idx: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(idx)
    for q in range(n):
        out |= ((idx >> q) & 1) << (n - 1 - q)
    return out


def _naive_minimum(h: IsingHamiltonian, tol: float) -> int:
    n = h.n_qubits
    dim = 1 << n
    best = math.inf
    for start in range(0, dim, _NAIVE_CHUNK):
        best = min(best, float(h.costs(start, min(_NAIVE_CHUNK, dim - start)).min()))
    winner, winner_rev = -1, dim
    for start in range(0, dim, _NAIVE_CHUNK):
        costs = h.costs(start, min(_NAIVE_CHUNK, dim - start))
        idx = np.flatnonzero(costs <= best + tol) + start
        if idx.size:
            rev = _reverse_bits(idx, n)
            k = int(np.argmin(rev))
            if rev[k] < winner_rev:
                winner, winner_rev = int(idx[k]), int(rev[k])
    return winner


def exhaustive_search(h: IsingHamiltonian, method: str = "auto", emit_table: bool = False) -> ExhaustiveResult:
    """Global minimum over all 2**n bitstrings.

    Costs within a relative 1e-10 of the minimum count as ties and resolve to
    the lexicographically lowest bitstring. ``method`` picks the incremental
    Gray-code walk ("gray", the default) or direct evaluation ("naive").
    """
    n = h.n_qubits
    if n > EXHAUSTIVE_MAX_QUBITS:
        raise TooLarge(f"exhaustive search is capped at {EXHAUSTIVE_MAX_QUBITS} qubits, got {n}")
    if emit_table and n > TABLE_MAX_QUBITS:
        raise TooLarge(f"cost table emission is capped at {TABLE_MAX_QUBITS} qubits, got {n}")
    tol = _tie_tolerance(h)
    if method in ("auto", "gray"):
        ptr, idx, val = h.adjacency
        best_index, _ = kernels.gray_code_minimum(n, h.identity_coeff, h.h_vector, ptr, idx, val, tol)
    elif method == "naive":
        best_index = _naive_minimum(h, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    argmin = index_to_bitstring(int(best_index), n)
    return ExhaustiveResult(cost_of_bitstring(h, argmin), argmin, h.diagonal() if emit_table else None)


@dataclass
class SaResult:
    min_cost: float
    argmin: str
    restart_costs: list[float] = field(default_factory=list)
    betas: tuple[float, float] = (0.0, 0.0)


def default_beta_range(h: IsingHamiltonian) -> tuple[float, float]:
    """Hot end flips the stiffest spin half the time, cold end accepts the smallest move 1% of the time."""
    local = np.abs(h.h_vector).copy()
    for (p, q), c in h.j.items():
        local[p] += abs(c)
        local[q] += abs(c)
    coeffs = [abs(c) for c in list(h.h.values()) + list(h.j.values()) if abs(c) > 0]
    if not coeffs:
        return 1.0, 1.0
    max_delta = 2.0 * float(local.max())
    min_delta = 2.0 * min(coeffs)
    return math.log(2.0) / max_delta, max(math.log(100.0) / min_delta, math.log(2.0) / max_delta)


def simulated_annealing(
    h: IsingHamiltonian,
    sweeps: int = 200,
    beta_range: tuple[float, float] | None = None,
    restarts: int = 10,
    seed: int = 0,
    workers: int = 1,
) -> SaResult:
    """Single-spin-flip Metropolis with a geometric inverse-temperature ramp.

    Each restart draws its own stream from ``(seed, restart)``, so results do
    not depend on ``workers``.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = h.n_qubits
    b0, b1 = beta_range if beta_range is not None else default_beta_range(h)
    betas = np.geomspace(b0, b1, sweeps)
    ptr, idx, val = h.adjacency

    def one(r: int):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        spins = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
        uniforms = rng.random((sweeps, n))
        best, best_spins, _ = kernels.metropolis_anneal(spins, h.identity_coeff, h.h_vector, ptr, idx, val, betas, uniforms)
        return float(best), "".join("0" if s > 0 else "1" for s in np.asarray(best_spins))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(one, range(restarts)))
    else:
        runs = [one(r) for r in range(restarts)]
    costs = [cost_of_bitstring(h, b) for _, b in runs]
    k = min(range(restarts), key=lambda i: (costs[i], runs[i][1]))
    return SaResult(costs[k], runs[k][1], costs, (float(b0), float(b1)))


@dataclass(frozen=True)
class SaeConfig:
    total_time: float = 7.0
    trotter_steps: int | None = None
    checkpoints: int = 11
    seed: int = 0
    sampler_shots: int | None = None
    qubit_cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if not self.total_time > 0:
            raise ConfigError("total_time must be positive")
        if self.checkpoints < 2:
            raise ConfigError("need at least 2 checkpoints (tau = 0 and tau = T)")
        if self.steps < self.checkpoints - 1:
            raise ConfigError(f"{self.steps} Trotter steps cannot host {self.checkpoints - 1} checkpoint intervals")

    @property
    def steps(self) -> int:
        if self.trotter_steps is not None:
            return int(self.trotter_steps)
        return max(1, int(round(100 * self.total_time)))


@dataclass
class SaeTrace:
    times: list[float]
    expectations: list[float]
    final_distribution: CostDistribution
    final_state: StateVector = field(repr=False)
    samples: SampleResult | None = field(default=None, repr=False)
    max_norm_error: float = 0.0


def _trotter_step(state: StateVector, h: IsingHamiltonian, dt: float, s: float) -> None:
    psi = state.amplitudes
    for q in range(h.n_qubits):
        kernels.apply_rx(psi, q, -2.0 * dt * (1.0 - s))
    for q, c in h.h.items():
        kernels.apply_rz(psi, q, 2.0 * dt * s * c)
    for (p, q), c in h.j.items():
        kernels.apply_rzz(psi, p, q, 2.0 * dt * s * c)


def sae_run(h: IsingHamiltonian, config: SaeConfig = SaeConfig()) -> SaeTrace:
    """Evolve under (1 - tau/T)(-sum X) + (tau/T) h from the |+...+> state.

    Each first-order Trotter step evaluates the schedule at its midpoint.
    """
    n = h.n_qubits
    if n > config.qubit_cap:
        raise QubitCapExceeded(n, config.qubit_cap)
    steps = config.steps
    dt = config.total_time / steps
    marks = np.rint(np.linspace(0, steps, config.checkpoints)).astype(int)
    table = h.diagonal() if n <= 20 else None
    state = uniform_superposition(n, cap=config.qubit_cap)
    times, values = [], []
    norm_err = abs(state.norm() - 1.0)
    done = 0
    for m in marks:
        while done < m:
            _trotter_step(state, h, dt, (done + 0.5) / steps)
            done += 1
        norm_err = max(norm_err, abs(state.norm() - 1.0))
        times.append(float(m * dt))
        values.append(expectation_diagonal(state, h, table))
    shots = config.sampler_shots or default_sampler_shots(n)
    samples = sample(state, shots, config.seed)
    return SaeTrace(times, values, build_distribution(samples, h), state, samples, norm_err)


def write_trace_csv(trace: SaeTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tau", "expectation"))
        for t, e in zip(trace.times, trace.expectations):
            w.writerow((repr(t), repr(e)))
