"""VQE loop, cost distributions and run reports.

The loop: build the ansatz once, minimise the (exact or shot-estimated)
energy over its angles, sample the optimised state, cost every sample and
keep the cheapest bitstring.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .circuits import ANSATZ_FAMILIES, Circuit, build_ansatz, build_cyclic, build_real_amplitudes
from .errors import ConfigError, LengthMismatch, QubitCapExceeded, ZeroRisk
from .market import MarketModel
from .optimizers import (
    ANGLE_BOUNDS,
    ELITIST_POOL_DEFAULT,
    DeConfig,
    OptResult,
    conjugate_gradient_fd,
    differential_evolution,
)
from .problem import (
    DpoConfig,
    IsingHamiltonian,
    bitstring_to_index,
    cost_of_bitstring,
    decode_bitstring,
    index_to_bitstring,
    offset,
    sharpe_ratio,
)
from .simulator import DEFAULT_QUBIT_CAP, SampleResult, StateVector, expectation_diagonal, sample, simulate

SMALL_QUBITS = 6
# largest register for which the full cost table is cached during a run
TABLE_CACHE_QUBITS = 20


def default_estimator_shots(n_q: int) -> int:
    return 2_500 if n_q <= SMALL_QUBITS else 25_000


def default_sampler_shots(n_q: int) -> int:
    return 10_000 if n_q <= SMALL_QUBITS else 100_000


def default_elitist_pool(n_q: int) -> int:
    return 0 if n_q <= SMALL_QUBITS else ELITIST_POOL_DEFAULT


@dataclass(frozen=True)
class VqeRunConfig:
    ansatz: str = "real_amplitudes"
    reps: int = 3
    ranges: tuple[int, ...] = (1, 3)
    reps_per_block: int = 3
    optimizer: str = "de"
    # seed is taken from ``seed`` below; elitist_pool=None picks the size default
    de: DeConfig = field(default_factory=DeConfig)
    cg_max_iter: int = 500
    cg_fd_step: float = 1e-3
    estimator_mode: str = "exact"
    estimator_shots: int | None = None
    sampler_shots: int | None = None
    seed: int = 0
    workers: int = 1
    qubit_cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if self.ansatz not in ANSATZ_FAMILIES:
            raise ConfigError(f"unknown ansatz {self.ansatz!r}; choose from {', '.join(ANSATZ_FAMILIES)}")
        if self.optimizer not in ("de", "cg"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; choose de or cg")
        if self.estimator_mode not in ("exact", "shots"):
            raise ConfigError(f"estimator_mode must be 'exact' or 'shots', got {self.estimator_mode!r}")
        for name in ("estimator_shots", "sampler_shots"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")


def round_cost(x: float) -> float:
    """Round to 2 decimals, halves away from zero (on the shortest repr)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass
class CostDistribution:
    bins: dict[float, float]
    total: float
    source: str
    # unrounded (cost, weight) per distinct bitstring
    entries: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def mean(self) -> float:
        return sum(c * w for c, w in self.entries) / self.total

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "total": self.total,
            "bins": [[b, self.bins[b]] for b in sorted(self.bins)],
        }


def build_distribution(samples, h: IsingHamiltonian) -> CostDistribution:
    """Histogram of rounded costs.

    ``samples`` is a :class:`SampleResult` (counts) or a bitstring -> probability map.
    """
    if isinstance(samples, SampleResult):
        weights, source = samples.counts, "sampled"
    else:
        weights, source = samples, "exact-weighted"
    keys = list(weights)
    for b in keys:
        if len(b) != h.n_qubits:
            raise LengthMismatch(f"bitstring of length {len(b)} for a {h.n_qubits}-qubit Hamiltonian")
    costs = h.costs_at([bitstring_to_index(b) for b in keys]) if keys else np.zeros(0)
    bins: dict[float, float] = {}
    entries = []
    for b, c in zip(keys, costs):
        w = weights[b]
        entries.append((float(c), w))
        key = round_cost(c)
        bins[key] = bins.get(key, 0) + w
    total = sum(w for _, w in entries)
    return CostDistribution(bins, total, source, entries)


def pct_below_offset(dist: CostDistribution, offset_value: float) -> float:
    """Percentage of mass whose unrounded cost is strictly below ``offset_value``."""
    if not dist.total:
        return 0.0
    below = sum(w for c, w in dist.entries if c < offset_value)
    return 100.0 * below / dist.total


@dataclass
class RunReport:
    method: str
    n_qubits: int
    min_cost: float
    best_bitstring: str
    offset: float
    pct_below_offset: float
    distribution: CostDistribution
    best_trajectory: list[list[float]] | None = None
    sharpe: float | None = None
    expectation: float | None = None
    convergence: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        """JSON document; run-to-run variable data lives under ``metadata``."""
        return {
            "method": self.method,
            "n_qubits": self.n_qubits,
            "min_cost": self.min_cost,
            "best_bitstring": self.best_bitstring,
            "best_trajectory": self.best_trajectory,
            "sharpe": self.sharpe,
            "offset": self.offset,
            "pct_below_offset": self.pct_below_offset,
            "expectation": self.expectation,
            "distribution": self.distribution.to_json(),
            "convergence": self.convergence,
            "details": self.details,
            "metadata": {"wall_time": self.wall_time},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def write_histogram_csv(dist: CostDistribution, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("cost_bin", "count"))
        for b in sorted(dist.bins):
            w.writerow((f"{b:.2f}", dist.bins[b]))


def histogram_from_report(doc: dict) -> list[tuple[float, float]]:
    return [(float(b), c) for b, c in doc["distribution"]["bins"]]


def make_report(
    method: str,
    h: IsingHamiltonian,
    dist: CostDistribution,
    best_bitstring: str,
    *,
    dpo: DpoConfig | None = None,
    model: MarketModel | None = None,
    **extra,
) -> RunReport:
    """Assemble a report around ``best_bitstring``; min_cost is recomputed from it."""
    min_cost = cost_of_bitstring(h, best_bitstring)
    trajectory = sharpe = None
    if dpo is not None and dpo.n_q == h.n_qubits:
        traj = decode_bitstring(best_bitstring, dpo)
        trajectory = traj.omega.tolist()
        if model is not None:
            try:
                sharpe = sharpe_ratio(traj, model)
            except ZeroRisk:
                sharpe = None
    off = offset(h)
    return RunReport(
        method=method,
        n_qubits=h.n_qubits,
        min_cost=min_cost,
        best_bitstring=best_bitstring,
        offset=off,
        pct_below_offset=pct_below_offset(dist, off),
        distribution=dist,
        best_trajectory=trajectory,
        sharpe=sharpe,
        **extra,
    )


def cheapest(bitstrings, h: IsingHamiltonian) -> str:
    """Lowest-cost bitstring; exact ties go to the lexicographically lowest."""
    keys = sorted(bitstrings)
    costs = h.costs_at([bitstring_to_index(b) for b in keys])
    return keys[int(np.argmin(costs))]


def _subseed(seed: int, *words: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFF, *words]).generate_state(1, np.uint64)[0])


def _theta_words(theta: np.ndarray) -> list[int]:
    digest = hashlib.blake2b(np.ascontiguousarray(theta, dtype=np.float64).tobytes(), digest_size=16).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def build_run_circuit(h: IsingHamiltonian, run: VqeRunConfig, dpo: DpoConfig | None) -> Circuit:
    if run.ansatz in ("ora", "tailored"):
        if dpo is None:
            raise ConfigError(f"the {run.ansatz} ansatz needs the problem dimensions (n_t, n_a, n_r)")
        circuit = build_ansatz(run.ansatz, dpo, reps=run.reps, ranges=run.ranges, reps_per_block=run.reps_per_block)
    elif run.ansatz == "cyclic":
        circuit = build_cyclic(h.n_qubits, run.ranges)
    else:
        circuit = build_real_amplitudes(h.n_qubits, run.reps)
    if circuit.n_qubits != h.n_qubits:
        raise ConfigError(f"ansatz acts on {circuit.n_qubits} qubits, Hamiltonian on {h.n_qubits}")
    return circuit


class EnergyObjective:
    """theta -> <H>; exact, or a shot estimate with a sub-seed fixed by theta."""

    def __init__(self, circuit: Circuit, h: IsingHamiltonian, mode: str = "exact", shots: int = 0, seed: int = 0, cap=DEFAULT_QUBIT_CAP):
        self.circuit, self.h, self.mode, self.shots, self.seed, self.cap = circuit, h, mode, shots, seed, cap
        self.table = h.diagonal() if h.n_qubits <= TABLE_CACHE_QUBITS else None

    def state(self, theta) -> StateVector:
        return simulate(self.circuit, theta, cap=self.cap)

    def exact(self, theta) -> float:
        return expectation_diagonal(self.state(theta), self.h, self.table)

    def __call__(self, theta) -> float:
        if self.mode == "exact":
            return self.exact(theta)
        st = self.state(theta)
        res = sample(st, self.shots, _subseed(self.seed, *_theta_words(np.asarray(theta))))
        idx = np.fromiter(res.index_counts, dtype=np.int64)
        cnt = np.fromiter(res.index_counts.values(), dtype=float)
        costs = self.table[idx] if self.table is not None else self.h.costs_at(idx)
        return float(costs @ cnt) / self.shots


def _log_rows(result: OptResult) -> list[dict]:
    return [
        {"generation": e.generation, "mean_cost": e.mean_cost, "min_cost": e.min_cost, "evals": e.evaluations}
        for e in result.log
    ]


def run_vqe(
    h: IsingHamiltonian,
    run: VqeRunConfig = VqeRunConfig(),
    dpo: DpoConfig | None = None,
    model: MarketModel | None = None,
) -> RunReport:
    started = time.perf_counter()
    circuit = build_run_circuit(h, run, dpo)
    if h.n_qubits > run.qubit_cap:
        raise QubitCapExceeded(h.n_qubits, run.qubit_cap)
    est_shots = run.estimator_shots or default_estimator_shots(h.n_qubits)
    smp_shots = run.sampler_shots or default_sampler_shots(h.n_qubits)
    objective = EnergyObjective(circuit, h, run.estimator_mode, est_shots, run.seed, run.qubit_cap)

    details = {
        "ansatz": run.ansatz,
        "optimizer": run.optimizer,
        "n_params": circuit.n_params,
        "estimator_mode": run.estimator_mode,
        "sampler_shots": smp_shots,
        "seed": run.seed,
    }
    if run.estimator_mode == "shots":
        details["estimator_shots"] = est_shots
    convergence: list[dict] = []
    if circuit.n_params == 0:
        theta = np.zeros(0)
        details.update(evaluations=0, converged=True)
    elif run.optimizer == "de":
        pool = run.de.elitist_pool
        de_cfg = replace(run.de, seed=run.seed, elitist_pool=default_elitist_pool(h.n_qubits) if pool is None else pool)
        result = differential_evolution(objective, circuit.n_params, de_cfg, workers=run.workers)
        theta = result.best_params
        convergence = _log_rows(result)
        details.update(evaluations=result.evaluations, converged=result.converged,
                       pop_size=de_cfg.pop_size, generations=de_cfg.generations, elitist_pool=de_cfg.elitist_pool)
    else:
        rng = np.random.default_rng(_subseed(run.seed, 1))
        start = rng.uniform(*ANGLE_BOUNDS, size=circuit.n_params)
        result = conjugate_gradient_fd(objective, start, run.cg_max_iter, run.cg_fd_step, bounds=ANGLE_BOUNDS)
        theta = result.best_params
        convergence = _log_rows(result)
        details.update(evaluations=result.evaluations, converged=result.converged, iterations=len(result.log) - 1)

    final = objective.state(theta)
    samples = sample(final, smp_shots, _subseed(run.seed, 2))
    dist = build_distribution(samples, h)
    report = make_report(
        "vqe", h, dist, cheapest(samples.counts, h), dpo=dpo, model=model,
        expectation=expectation_diagonal(final, h, objective.table),
        convergence=convergence,
        details={**details, "theta": [float(x) for x in theta]},
    )
    report.wall_time = time.perf_counter() - started
    return report


def random_baseline(h: IsingHamiltonian, shots: int, seed: int, exact: bool = False, dpo=None, model=None) -> RunReport:
    """Metrics over uniformly random bitstrings (a fully depolarised device)."""
    started = time.perf_counter()
    n = h.n_qubits
    if exact:
        if n > 16:
            raise ConfigError("exact uniform baseline is limited to 16 qubits")
        p = 1.0 / (1 << n)
        weights = {index_to_bitstring(i, n): p for i in range(1 << n)}
        dist = build_distribution(weights, h)
        best = cheapest(weights, h)
    else:
        if shots < 1:
            raise ConfigError("shots must be >= 1")
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, size=(shots, n), dtype=np.uint8)
        rows, counts = np.unique(bits, axis=0, return_counts=True)
        res = SampleResult(shots, {"".join(map(str, r)): int(c) for r, c in zip(rows, counts)}, seed)
        dist = build_distribution(res, h)
        best = cheapest(res.counts, h)
    report = make_report("random", h, dist, best, dpo=dpo, model=model,
                         details={"shots": shots, "seed": seed, "exact": exact})
    report.wall_time = time.perf_counter() - started
    return report
