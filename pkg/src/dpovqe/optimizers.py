"""Classical optimizers for the variational loop.

``differential_evolution`` is a best2bin DE with per-generation dithered
mutation, binomial crossover, bound clipping, deferred greedy selection and
optional elitist seeding of generation 0. ``conjugate_gradient_fd`` is a
Polak-Ribiere (PR+) nonlinear CG on central finite-difference gradients.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PopulationTooSmall

TWO_PI = 2.0 * math.pi
ANGLE_BOUNDS = (-TWO_PI, TWO_PI)
ELITIST_POOL_DEFAULT = 3000

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class DeConfig:
    pop_size: int = 20
    generations: int = 50
    mutation_range: tuple[float, float] = (0.0, 0.25)
    recombination: float = 0.4
    bounds: tuple[float, float] = ANGLE_BOUNDS
    # None lets the caller pick (the VQE driver uses 0 for the smallest size, 3000 otherwise)
    elitist_pool: int | None = None
    seed: int = 0
    convergence_window: int = 10
    convergence_tol: float = 0.025
    stop_on_convergence: bool = True

    def __post_init__(self):
        if not 0.0 <= self.recombination <= 1.0:
            raise ValueError("recombination must lie in [0, 1]")
        lo, hi = self.mutation_range
        if lo > hi:
            raise ValueError("mutation_range must be (low, high) with low <= high")
        if self.bounds[0] >= self.bounds[1]:
            raise ValueError("bounds must be (low, high) with low < high")


@dataclass(frozen=True)
class GenerationEntry:
    generation: int
    mean_cost: float
    min_cost: float
    costs: tuple[float, ...]
    evaluations: int


@dataclass
class OptResult:
    best_params: np.ndarray
    best_cost: float
    converged: bool
    log: list[GenerationEntry]
    evaluations: int
    message: str = ""
    evaluation_costs: list[float] = field(default_factory=list, repr=False)

    @property
    def mean_costs(self) -> list[float]:
        return [e.mean_cost for e in self.log]


def relative_span_converged(values: Sequence[float], window: int, tol: float, strict: bool = False) -> bool:
    """(max - min) of the trailing ``window`` values, relative to |last|, within ``tol``."""
    if window < 1 or len(values) < window:
        return False
    tail = np.asarray(values[-window:], dtype=float)
    span = float(tail.max() - tail.min())
    last = float(tail[-1])
    if abs(last) <= 1e-15:
        return span == 0.0
    ratio = span / abs(last)
    return ratio < tol if strict else ratio <= tol


def de_convergence(log, window: int = 10, tol: float = 0.025) -> bool:
    """True once the trailing ``window`` generation means span at most ``tol`` of the last mean.

    ``log`` is a list of :class:`GenerationEntry` or a plain sequence of means.
    """
    means = [e.mean_cost if isinstance(e, GenerationEntry) else float(e) for e in log]
    return relative_span_converged(means, window, tol)


class _Evaluator:
    def __init__(self, objective: Objective, workers: int):
        self.objective = objective
        self.costs: list[float] = []
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def batch(self, X: np.ndarray) -> np.ndarray:
        rows = [np.array(x) for x in X]
        if self._pool is None:
            out = [float(self.objective(x)) for x in rows]
        else:
            out = [float(c) for c in self._pool.map(self.objective, rows)]
        self.costs.extend(out)
        return np.array(out)

    def one(self, x: np.ndarray) -> float:
        return float(self.batch(x[None, :])[0])

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


def _distinct_others(rng: np.random.Generator, n: int, i: int, k: int) -> np.ndarray:
    picks = rng.choice(n - 1, size=k, replace=False)
    return picks + (picks >= i)


def best2bin_mutant(best, r1, r2, r3, r4, F: float) -> np.ndarray:
    return best + F * (r1 - r2) + F * (r3 - r4)


def differential_evolution(objective: Objective, dim: int, config: DeConfig = DeConfig(), workers: int = 1) -> OptResult:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n = config.pop_size
    if n < 5:
        raise PopulationTooSmall(f"best2bin needs pop_size >= 5, got {n}")
    pool_size = config.elitist_pool or 0
    if 0 < pool_size < n:
        raise ValueError(f"elitist_pool ({pool_size}) must be 0 or at least pop_size ({n})")
    lo, hi = config.bounds
    rng = np.random.default_rng(config.seed)
    ev = _Evaluator(objective, workers)
    try:
        if pool_size:
            pool = rng.uniform(lo, hi, size=(pool_size, dim))
            pool_costs = ev.batch(pool)
            keep = np.argsort(pool_costs, kind="stable")[:n]
            pop, costs = pool[keep].copy(), pool_costs[keep].copy()
        else:
            pop = rng.uniform(lo, hi, size=(n, dim))
            costs = ev.batch(pop)

        log = [GenerationEntry(0, float(costs.mean()), float(costs.min()), tuple(costs.tolist()), len(ev.costs))]
        converged = False
        for gen in range(1, config.generations + 1):
            if config.stop_on_convergence and de_convergence(log, config.convergence_window, config.convergence_tol):
                converged = True
                break
            # all randomness for the generation is drawn up front, in a fixed order
            F = rng.uniform(*config.mutation_range)
            donors = np.array([_distinct_others(rng, n, i, 4) for i in range(n)])
            cross = rng.random((n, dim)) < config.recombination
            forced = rng.integers(0, dim, size=n)
            cross[np.arange(n), forced] = True

            best = pop[np.argmin(costs)]
            r1, r2, r3, r4 = (pop[donors[:, k]] for k in range(4))
            mutants = best2bin_mutant(best, r1, r2, r3, r4, F)
            trials = np.clip(np.where(cross, mutants, pop), lo, hi)
            trial_costs = ev.batch(trials)

            better = trial_costs <= costs
            pop[better] = trials[better]
            costs[better] = trial_costs[better]
            log.append(GenerationEntry(gen, float(costs.mean()), float(costs.min()), tuple(costs.tolist()), len(ev.costs)))
        else:
            converged = de_convergence(log, config.convergence_window, config.convergence_tol)
    finally:
        ev.close()

    i = int(np.argmin(costs))
    return OptResult(
        best_params=pop[i].copy(),
        best_cost=float(costs[i]),
        converged=converged,
        log=log,
        evaluations=len(ev.costs),
        message="converged" if converged else "generation budget exhausted",
        evaluation_costs=ev.costs,
    )


def conjugate_gradient_fd(
    objective: Objective,
    start,
    max_iter: int = 500,
    fd_step: float = 1e-3,
    bounds: tuple[float, float] | None = None,
    gtol: float = 1e-5,
    window: int = 100,
    tol: float = 0.025,
) -> OptResult:
    """PR+ conjugate gradient with central differences and Armijo backtracking.

    Stops after ``max_iter`` iterations, when the gradient's max-norm drops
    below ``gtol``, or when the trailing ``window`` objective evaluations span
    less than ``tol`` relative to the latest one. Never raises on stagnation.
    """
    x = np.array(start, dtype=float).reshape(-1)
    if x.size < 1:
        raise ValueError("start must have at least one entry")
    clip = (lambda v: np.clip(v, bounds[0], bounds[1])) if bounds else (lambda v: v)
    x = clip(x)
    ev = _Evaluator(objective, 1)
    best = {"x": x.copy(), "f": math.inf}

    def f_at(v):
        val = ev.one(v)
        if val < best["f"]:
            best["f"], best["x"] = val, v.copy()
        return val

    def grad(v):
        g = np.empty_like(v)
        for k in range(v.size):
            up, down = v.copy(), v.copy()
            up[k] += fd_step
            down[k] -= fd_step
            up, down = clip(up), clip(down)
            width = up[k] - down[k]
            g[k] = (f_at(up) - f_at(down)) / width if width > 0 else 0.0
        return g

    fx = f_at(x)
    g = grad(x)
    d = -g
    log = [GenerationEntry(0, fx, best["f"], (fx,), len(ev.costs))]
    converged, message = False, "iteration budget exhausted"
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < gtol:
            converged, message = True, "gradient below gtol"
            break
        if g @ d >= 0:
            d = -g
        step, accepted = 1.0, False
        for _ in range(30):
            x_new = clip(x + step * d)
            f_new = f_at(x_new)
            if f_new <= fx + 1e-4 * (g @ (x_new - x)) and f_new <= fx:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if not np.array_equal(d, -g):
                d = -g
                continue
            message = "line search failed"
            break
        g_new = grad(x_new)
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g)) if g @ g > 0 else 0.0
        d = -g_new + beta * d
        x, fx, g = x_new, f_new, g_new
        log.append(GenerationEntry(it, fx, best["f"], (fx,), len(ev.costs)))
        if relative_span_converged(ev.costs, window, tol, strict=True):
            converged, message = True, "objective span below tolerance"
            break
    return OptResult(
        best_params=best["x"],
        best_cost=best["f"],
        converged=converged,
        log=log,
        evaluations=len(ev.costs),
        message=message,
        evaluation_costs=ev.costs,
    )


def write_log_csv(log: Sequence[GenerationEntry], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("generation", "mean_cost", "min_cost", "evals"))
        for e in log:
            w.writerow((e.generation, repr(e.mean_cost), repr(e.min_cost), e.evaluations))
