"""Variational quantum eigensolver toolkit for dynamic portfolio optimisation."""

from .baselines import SaeConfig, exhaustive_search, sae_run, simulated_annealing
from .circuits import Circuit, CouplingMap, Gate, build_ansatz, logical_depth, route_and_depth
from .kernels import BACKEND
from .market import MarketModel, PriceSeries, RebalanceGrid, build_market_model, generate_synthetic_prices, load_prices_csv
from .optimizers import DeConfig, conjugate_gradient_fd, de_convergence, differential_evolution
from .problem import (
    DpoConfig,
    IsingHamiltonian,
    QuboProblem,
    build_hamiltonian,
    build_qubo,
    cost_of_bitstring,
    decode_bitstring,
    objective_terms,
    offset,
    qubo_to_ising,
    sharpe_ratio,
)
from .simulator import StateVector, sample, simulate
from .vqe import VqeRunConfig, build_distribution, pct_below_offset, random_baseline, run_vqe

__version__ = "0.1.0"
