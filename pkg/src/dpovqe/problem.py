"""Dynamic portfolio QUBO, its Ising form, and trajectory-level metrics.

Bitstrings are left-to-right strings whose character ``q`` is the binary
variable of logical qubit ``q`` (``q = r + n_r*a + t*n_a*n_r``). Bit value 1
corresponds to Z eigenvalue -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import DimensionMismatch, IndexOutOfRange, LengthMismatch, ZeroRisk
from .market import MarketModel


@dataclass(frozen=True)
class DpoConfig:
    n_t: int
    n_a: int
    n_r: int
    k_budget: float
    gamma: float = 1000.0
    nu: float = 0.01
    rho: float = 1.0
    initial_holdings: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("n_t", "n_a", "n_r"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        if self.k_budget <= 0:
            raise ValueError("k_budget must be positive")
        holdings = self.initial_holdings
        holdings = (0.0,) * self.n_a if holdings is None else tuple(float(x) for x in holdings)
        if len(holdings) != self.n_a:
            raise DimensionMismatch(f"initial_holdings has {len(holdings)} entries, expected {self.n_a}")
        object.__setattr__(self, "initial_holdings", holdings)

    @property
    def n_q(self) -> int:
        return self.n_t * self.n_a * self.n_r

    @property
    def k_prime(self) -> int:
        return 2**self.n_r - 1

    def to_dict(self) -> dict:
        return {
            "n_t": self.n_t,
            "n_a": self.n_a,
            "n_r": self.n_r,
            "k_budget": self.k_budget,
            "gamma": self.gamma,
            "nu": self.nu,
            "rho": self.rho,
            "initial_holdings": list(self.initial_holdings),
        }


def lambda_coefficient(config: DpoConfig) -> float:
    """Scale of the quadratic stand-in for the L1 transaction cost: cbrt(2) K / K'."""
    return 2.0 ** (1.0 / 3.0) * config.k_budget / config.k_prime


def qubit_index(t: int, a: int, r: int, config: DpoConfig) -> int:
    if not (0 <= t < config.n_t and 0 <= a < config.n_a and 0 <= r < config.n_r):
        raise IndexOutOfRange(f"(t={t}, a={a}, r={r}) outside {config.n_t}x{config.n_a}x{config.n_r}")
    return r + config.n_r * a + t * (config.n_a * config.n_r)


def as_bits(b, n: int | None = None) -> np.ndarray:
    """Coerce a bitstring (``"0110"``) or 0/1 sequence to a uint8 array."""
    if isinstance(b, str):
        if not set(b) <= {"0", "1"}:
            raise ValueError(f"not a bitstring: {b!r}")
        arr = np.frombuffer(b.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(b, dtype=np.uint8)
        if arr.ndim != 1 or np.any(arr > 1):
            raise ValueError("bit sequences must be 1-D with entries 0/1")
    if n is not None and arr.shape[0] != n:
        raise LengthMismatch(f"bitstring has length {arr.shape[0]}, expected {n}")
    return arr.astype(np.uint8)


def index_to_bitstring(index: int, n: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n))


def bitstring_to_index(b) -> int:
    bits = as_bits(b)
    return int(sum(int(v) << q for q, v in enumerate(bits)))


@dataclass(frozen=True, eq=False)
class QuboProblem:
    n_vars: int
    constant: float
    linear: Mapping[int, float]
    quadratic: Mapping[tuple[int, int], float]

    def __post_init__(self):
        lin = {int(q): float(c) for q, c in self.linear.items()}
        quad = {}
        for (p, q), c in self.quadratic.items():
            p, q = int(p), int(q)
            if p == q:
                raise ValueError("quadratic terms must not contain self-pairs")
            key = (p, q) if p < q else (q, p)
            quad[key] = quad.get(key, 0.0) + float(c)
        for q in list(lin) + [v for k in quad for v in k]:
            if not 0 <= q < self.n_vars:
                raise IndexOutOfRange(f"variable {q} outside 0..{self.n_vars - 1}")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)

    def cost(self, b) -> float:
        x = as_bits(b, self.n_vars).astype(float)
        total = self.constant
        for q, c in self.linear.items():
            total += c * x[q]
        for (p, q), c in self.quadratic.items():
            total += c * x[p] * x[q]
        return float(total)

    def costs(self, indices) -> np.ndarray:
        """Vectorised cost for basis indices (bit q of the index is x_q)."""
        idx = np.asarray(indices, dtype=np.int64)
        x = ((idx[:, None] >> np.arange(self.n_vars)) & 1).astype(float)
        out = np.full(idx.shape[0], float(self.constant))
        if self.linear:
            qs = np.fromiter(self.linear.keys(), dtype=np.int64)
            out += x[:, qs] @ np.fromiter(self.linear.values(), dtype=float)
        if self.quadratic:
            pq = np.array(list(self.quadratic.keys()), dtype=np.int64)
            out += (x[:, pq[:, 0]] * x[:, pq[:, 1]]) @ np.fromiter(self.quadratic.values(), dtype=float)
        return out

    def to_json(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "constant": self.constant,
            "linear": [[q, c] for q, c in sorted(self.linear.items())],
            "quadratic": [[p, q, c] for (p, q), c in sorted(self.quadratic.items())],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QuboProblem":
        return cls(
            int(doc["n_vars"]),
            float(doc["constant"]),
            {int(q): float(c) for q, c in doc["linear"]},
            {(int(p), int(q)): float(c) for p, q, c in doc["quadratic"]},
        )


@dataclass(frozen=True, eq=False)
class IsingHamiltonian:
    """c*I + sum_q h_q Z_q + sum_{p<q} J_pq Z_p Z_q."""

    n_qubits: int
    identity_coeff: float
    h: Mapping[int, float] = field(default_factory=dict)
    j: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        h = {int(q): float(c) for q, c in self.h.items()}
        j = {}
        for (p, q), c in self.j.items():
            p, q = int(p), int(q)
            if p == q:
                raise ValueError("ZZ terms need two distinct qubits")
            key = (p, q) if p < q else (q, p)
            j[key] = j.get(key, 0.0) + float(c)
        for q in list(h) + [v for k in j for v in k]:
            if not 0 <= q < self.n_qubits:
                raise IndexOutOfRange(f"qubit {q} outside 0..{self.n_qubits - 1}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "identity_coeff", float(self.identity_coeff))

    @cached_property
    def h_vector(self) -> np.ndarray:
        vec = np.zeros(self.n_qubits)
        for q, c in self.h.items():
            vec[q] = c
        return vec

    @cached_property
    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        keys = sorted(self.j)
        jp = np.array([p for p, _ in keys], dtype=np.int64)
        jq = np.array([q for _, q in keys], dtype=np.int64)
        jv = np.array([self.j[k] for k in keys], dtype=float)
        return jp, jq, jv

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR adjacency (ptr, neighbour, coupling) of the ZZ terms."""
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.n_qubits)]
        for (p, q), c in sorted(self.j.items()):
            nbrs[p].append((q, c))
            nbrs[q].append((p, c))
        ptr = np.zeros(self.n_qubits + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(x) for x in nbrs])
        idx = np.array([q for row in nbrs for q, _ in row], dtype=np.int64)
        val = np.array([c for row in nbrs for _, c in row], dtype=float)
        return ptr, idx, val

    @property
    def coefficient_scale(self) -> float:
        return abs(self.identity_coeff) + sum(map(abs, self.h.values())) + sum(map(abs, self.j.values()))

    def costs(self, start: int = 0, count: int | None = None) -> np.ndarray:
        """Costs of the consecutive basis indices ``start .. start+count-1``."""
        if count is None:
            count = (1 << self.n_qubits) - start
        jp, jq, jv = self.pair_arrays
        return kernels.ising_costs(
            int(start), int(count), self.n_qubits, self.identity_coeff, self.h_vector, jp, jq, jv
        )

    def costs_at(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        z = 1.0 - 2.0 * ((idx[:, None] >> np.arange(self.n_qubits)) & 1)
        out = self.identity_coeff + z @ self.h_vector
        jp, jq, jv = self.pair_arrays
        if len(jv):
            out += (z[:, jp] * z[:, jq]) @ jv
        return out

    def diagonal(self) -> np.ndarray:
        """Full 2**n cost table indexed by basis index."""
        return self.costs(0, 1 << self.n_qubits)

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "identity": self.identity_coeff,
            "h": [[q, c] for q, c in sorted(self.h.items())],
            "j": [[p, q, c] for (p, q), c in sorted(self.j.items())],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IsingHamiltonian":
        return cls(
            int(doc["n_qubits"]),
            float(doc["identity"]),
            {int(q): float(c) for q, c in doc["h"]},
            {(int(p), int(q)): float(c) for p, q, c in doc["j"]},
        )


def _weight_matrix(config: DpoConfig) -> np.ndarray:
    """W[t, a, q] such that normalized omega[t, a] = W[t, a] @ x."""
    w = np.zeros((config.n_t, config.n_a, config.n_q))
    for t in range(config.n_t):
        for a in range(config.n_a):
            for r in range(config.n_r):
                w[t, a, qubit_index(t, a, r, config)] = 2.0**r / config.k_budget
    return w


def _check_dims(config: DpoConfig, model: MarketModel):
    if model.mu.shape != (config.n_t, config.n_a):
        raise DimensionMismatch(
            f"market model is {model.mu.shape[0]}x{model.mu.shape[1]}, config needs {config.n_t}x{config.n_a}"
        )


def build_qubo(config: DpoConfig, model: MarketModel) -> QuboProblem:
    """Expand the penalised, binary-encoded objective into QUBO coefficients.

    Per step t: -mu_t.w_t + gamma/2 w_t' S_t w_t + nu*lambda |w_t - w_{t-1}|^2
    + rho (sum_a w_ta - 1)^2, with w the budget-normalised investments and
    w_{-1} = initial_holdings / K.
    """
    _check_dims(config, model)
    n = config.n_q
    W = _weight_matrix(config)
    lam = lambda_coefficient(config)
    prev_const = np.asarray(config.initial_holdings) / config.k_budget

    quad = np.zeros((n, n))
    lin = np.zeros(n)
    const = 0.0

    def add_square(u, offset, weight):
        nonlocal const
        quad[:] += weight * np.outer(u, u)
        lin[:] += 2.0 * weight * offset * u
        const += weight * offset * offset

    for t in range(config.n_t):
        Wt = W[t]
        lin -= model.mu[t] @ Wt
        quad += 0.5 * config.gamma * (Wt.T @ model.sigma[t] @ Wt)
        for a in range(config.n_a):
            if t == 0:
                add_square(Wt[a], -prev_const[a], config.nu * lam)
            else:
                add_square(Wt[a] - W[t - 1, a], 0.0, config.nu * lam)
        add_square(Wt.sum(axis=0), -1.0, config.rho)

    # x^2 = x for binaries
    lin += np.diag(quad)
    sym = quad + quad.T
    linear = {q: float(lin[q]) for q in range(n) if lin[q] != 0.0}
    quadratic = {
        (p, q): float(sym[p, q]) for p in range(n) for q in range(p + 1, n) if sym[p, q] != 0.0
    }
    return QuboProblem(n, float(const), linear, quadratic)


def qubo_to_ising(qubo: QuboProblem) -> IsingHamiltonian:
    """Substitute x = (1 - Z)/2 term by term."""
    const = qubo.constant
    h: dict[int, float] = {}
    j: dict[tuple[int, int], float] = {}
    for q, c in qubo.linear.items():
        const += 0.5 * c
        h[q] = h.get(q, 0.0) - 0.5 * c
    for (p, q), c in qubo.quadratic.items():
        const += 0.25 * c
        h[p] = h.get(p, 0.0) - 0.25 * c
        h[q] = h.get(q, 0.0) - 0.25 * c
        j[(p, q)] = j.get((p, q), 0.0) + 0.25 * c
    return IsingHamiltonian(qubo.n_vars, const, h, j)


def cost_of_bitstring(h: IsingHamiltonian, b) -> float:
    z = 1.0 - 2.0 * as_bits(b, h.n_qubits).astype(float)
    total = h.identity_coeff
    for q, c in h.h.items():
        total += c * z[q]
    for (p, q), c in h.j.items():
        total += c * z[p] * z[q]
    return float(total)


def offset(h: IsingHamiltonian) -> float:
    """Mean cost under independent uniform bits; the identity coefficient."""
    return h.identity_coeff


@dataclass(frozen=True, eq=False)
class Trajectory:
    omega: np.ndarray
    normalized: np.ndarray

    @classmethod
    def from_omega(cls, omega, k_budget: float) -> "Trajectory":
        omega = np.array(omega, dtype=float)
        return cls(omega, omega / k_budget)


def decode_bitstring(b, config: DpoConfig) -> Trajectory:
    bits = as_bits(b, config.n_q).astype(float)
    weights = 2.0 ** np.arange(config.n_r)
    omega = bits.reshape(config.n_t, config.n_a, config.n_r) @ weights
    return Trajectory.from_omega(omega, config.k_budget)


def encode_trajectory(traj: Trajectory, config: DpoConfig) -> str:
    omega = np.rint(traj.omega).astype(np.int64)
    if omega.shape != (config.n_t, config.n_a):
        raise DimensionMismatch(f"trajectory shape {omega.shape}")
    if np.any(omega < 0) or np.any(omega > config.k_prime) or not np.allclose(omega, traj.omega):
        raise ValueError("trajectory entries must be integers in [0, K']")
    bits = (omega[:, :, None] >> np.arange(config.n_r)) & 1
    return "".join(str(int(v)) for v in bits.reshape(-1))


@dataclass(frozen=True)
class ObjectiveTerms:
    f: float
    r: float
    c_exact: float
    c_quadratic: float
    penalty: float
    f_money: float
    r_money: float
    c_exact_money: float

    def recombined(self, config: DpoConfig) -> float:
        """QUBO value: -F + gamma/2 R + quadratic transaction cost + penalty."""
        return -self.f + 0.5 * config.gamma * self.r + self.c_quadratic + self.penalty


def objective_terms(traj: Trajectory, model: MarketModel, config: DpoConfig) -> ObjectiveTerms:
    _check_dims(config, model)
    w = np.asarray(traj.normalized, dtype=float)
    omega = np.asarray(traj.omega, dtype=float)
    if w.shape != (config.n_t, config.n_a):
        raise DimensionMismatch(f"trajectory shape {w.shape}, expected {(config.n_t, config.n_a)}")
    prev_money = np.asarray(config.initial_holdings, dtype=float)
    steps_money = np.diff(np.vstack([prev_money, omega]), axis=0)
    steps = np.diff(np.vstack([prev_money / config.k_budget, w]), axis=0)
    f = float(np.sum(model.mu * w))
    r = float(np.einsum("ta,tab,tb->", w, model.sigma, w))
    return ObjectiveTerms(
        f=f,
        r=r,
        c_exact=config.nu * float(np.abs(steps).sum()),
        c_quadratic=config.nu * lambda_coefficient(config) * float((steps**2).sum()),
        penalty=config.rho * float(((w.sum(axis=1) - 1.0) ** 2).sum()),
        f_money=float(np.sum(model.mu * omega)),
        r_money=float(np.einsum("ta,tab,tb->", omega, model.sigma, omega)),
        c_exact_money=config.nu * float(np.abs(steps_money).sum()),
    )


def sharpe_ratio(traj, model: MarketModel) -> float:
    """Return over root risk of the money-scale trajectory.

    ``traj`` may be a :class:`Trajectory` or a raw ``[n_t, n_a]`` investment array.
    """
    omega = np.asarray(traj.omega if isinstance(traj, Trajectory) else traj, dtype=float)
    if omega.shape != model.mu.shape:
        raise DimensionMismatch(f"trajectory shape {omega.shape}, model {model.mu.shape}")
    f = float(np.sum(model.mu * omega))
    r = float(np.einsum("ta,tab,tb->", omega, model.sigma, omega))
    if r <= 1e-15:
        raise ZeroRisk("risk is zero; Sharpe ratio undefined")
    return f / math.sqrt(r)


def build_hamiltonian(config: DpoConfig, model: MarketModel) -> IsingHamiltonian:
    return qubo_to_ising(build_qubo(config, model))


def all_bitstrings(n: int) -> Sequence[str]:
    return [index_to_bitstring(i, n) for i in range(1 << n)]
