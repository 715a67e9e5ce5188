import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_costs, random_instance, termwise_cost, xs_instance
from dpovqe.errors import DimensionMismatch, IndexOutOfRange, LengthMismatch, ZeroRisk
from dpovqe.market import MarketModel
from dpovqe.problem import (
    DpoConfig,
    IsingHamiltonian,
    QuboProblem,
    Trajectory,
    all_bitstrings,
    build_hamiltonian,
    build_qubo,
    cost_of_bitstring,
    decode_bitstring,
    encode_trajectory,
    lambda_coefficient,
    objective_terms,
    offset,
    qubit_index,
    qubo_to_ising,
    sharpe_ratio,
)


def test_lambda_examples():
    assert lambda_coefficient(DpoConfig(1, 1, 2, 3)) == pytest.approx(1.2599210498948732, abs=1e-12)
    assert lambda_coefficient(DpoConfig(4, 7, 4, 25)) == pytest.approx(2.099868, abs=5e-7)
    assert lambda_coefficient(DpoConfig(1, 1, 2, 6)) == pytest.approx(2 * 2 ** (1 / 3), abs=1e-12)


def test_config_defaults_and_counts():
    cfg = DpoConfig(4, 7, 4, 25)
    assert (cfg.gamma, cfg.nu, cfg.rho) == (1000.0, 0.01, 1.0)
    assert cfg.initial_holdings == (0.0,) * 7
    assert cfg.n_q == 112 and cfg.k_prime == 15
    with pytest.raises(DimensionMismatch):
        DpoConfig(1, 2, 1, 1, initial_holdings=(1.0,))


def test_qubit_index():
    assert qubit_index(0, 0, 0, DpoConfig(2, 3, 1, 2)) == 0
    assert qubit_index(1, 2, 0, DpoConfig(2, 3, 1, 2)) == 5
    assert qubit_index(3, 6, 3, DpoConfig(4, 7, 4, 25)) == 111
    with pytest.raises(IndexOutOfRange):
        qubit_index(2, 0, 0, DpoConfig(2, 3, 1, 2))


def test_penalty_only_all_zeros():
    for cfg in (DpoConfig(2, 3, 1, 2), DpoConfig(3, 2, 2, 3)):
        q = build_qubo(cfg, MarketModel.zeros(cfg.n_t, cfg.n_a))
        assert q.cost("0" * cfg.n_q) == pytest.approx(cfg.n_t * cfg.rho, abs=1e-12)
        h = qubo_to_ising(q)
        assert cost_of_bitstring(h, "0" * cfg.n_q) == pytest.approx(cfg.n_t * cfg.rho, abs=1e-12)


def test_single_variable_penalty():
    cfg = DpoConfig(1, 1, 1, 1, nu=0.0)
    q = build_qubo(cfg, MarketModel.zeros(1, 1))
    assert q.cost("1") == pytest.approx(0.0, abs=1e-15)
    assert q.cost("0") == pytest.approx(1.0)


def test_qubo_has_no_self_pairs():
    cfg, model = random_instance(3)
    q = build_qubo(cfg, model)
    assert all(p < r for p, r in q.quadratic)


def test_xs_table_matches_termwise():
    cfg, model, h = xs_instance()
    q = build_qubo(cfg, model)
    table = h.diagonal()
    for i, b in enumerate(all_bitstrings(6)):
        ref = termwise_cost(b, cfg, model)
        assert q.cost(b) == pytest.approx(ref, abs=1e-9)
        assert table[i] == pytest.approx(ref, abs=1e-9)


def test_qubo_to_ising_single_terms():
    h = qubo_to_ising(QuboProblem(1, 0.0, {0: 1.0}, {}))
    assert h.identity_coeff == 0.5 and h.h == {0: -0.5} and h.j == {}
    h = qubo_to_ising(QuboProblem(2, 0.0, {}, {(0, 1): 1.0}))
    assert h.identity_coeff == 0.25
    assert h.h == {0: -0.25, 1: -0.25}
    assert h.j == {(0, 1): 0.25}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_qubo_matches_ising(seed):
    rng = np.random.default_rng(seed)
    n = 10
    lin = {q: float(rng.normal()) for q in range(n) if rng.random() < 0.8}
    quad = {(p, q): float(rng.normal()) for p, q in itertools.combinations(range(n), 2) if rng.random() < 0.4}
    qubo = QuboProblem(n, float(rng.normal()), lin, quad)
    h = qubo_to_ising(qubo)
    idx = np.arange(1 << n)
    np.testing.assert_allclose(h.costs_at(idx), qubo.costs(idx), atol=1e-9)
    np.testing.assert_allclose(h.diagonal(), brute_costs(h), atol=1e-9)


def test_cost_of_bitstring_examples():
    assert cost_of_bitstring(IsingHamiltonian(3, 3.0), "101") == 3.0
    h = IsingHamiltonian(1, 0.0, {0: 2.0})
    assert cost_of_bitstring(h, "0") == 2.0 and cost_of_bitstring(h, "1") == -2.0
    h = IsingHamiltonian(2, 0.0, {0: -0.5}, {(0, 1): 1.0})
    assert [cost_of_bitstring(h, b) for b in ("00", "01", "10", "11")] == [0.5, -1.5, -0.5, 1.5]
    with pytest.raises(LengthMismatch):
        cost_of_bitstring(h, "0")


def test_offset_is_mean():
    assert offset(IsingHamiltonian(1, 3.0, {0: 2.0})) == 3.0
    cfg = DpoConfig(2, 3, 1, 2)
    h = build_hamiltonian(cfg, MarketModel.zeros(2, 3))
    assert offset(h) == pytest.approx(h.diagonal().mean(), abs=1e-9)
    for seed in range(5):
        cfg, model = random_instance(seed, max_qubits=10)
        h = build_hamiltonian(cfg, model)
        assert offset(h) == pytest.approx(brute_costs(h).mean(), abs=1e-9)


def test_decode_examples():
    cfg = DpoConfig(2, 3, 2, 4)
    assert np.all(decode_bitstring("0" * 12, cfg).omega == 0)
    b = ["0"] * 12
    b[qubit_index(1, 2, 0, cfg)] = b[qubit_index(1, 2, 1, cfg)] = "1"
    traj = decode_bitstring("".join(b), cfg)
    assert traj.omega[1, 2] == 3 and traj.omega.sum() == 3
    np.testing.assert_allclose(traj.normalized, traj.omega / 4)
    full = decode_bitstring("1" * 112, DpoConfig(4, 7, 4, 25))
    assert np.all(full.omega == 15)
    with pytest.raises(LengthMismatch):
        decode_bitstring("01", cfg)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.data())
def test_encode_decode_round_trip(n_t, n_a, n_r, data):
    cfg = DpoConfig(n_t, n_a, n_r, 3)
    b = data.draw(st.text(alphabet="01", min_size=cfg.n_q, max_size=cfg.n_q))
    assert encode_trajectory(decode_bitstring(b, cfg), cfg) == b


def test_objective_terms_zero_trajectory():
    cfg = DpoConfig(3, 2, 1, 2, rho=1.5)
    t = objective_terms(Trajectory.from_omega(np.zeros((3, 2)), 2), MarketModel.zeros(3, 2), cfg)
    assert (t.f, t.r, t.c_exact) == (0.0, 0.0, 0.0)
    assert t.penalty == pytest.approx(3 * 1.5)


def test_objective_terms_single_purchase():
    cfg = DpoConfig(3, 2, 2, 3)
    traj = Trajectory.from_omega(np.array([[2.0, 1.0]] * 3), 3)
    t = objective_terms(traj, MarketModel.zeros(3, 2), cfg)
    assert t.f == 0 and t.r == 0 and t.penalty == pytest.approx(0.0, abs=1e-15)
    assert t.c_exact_money == pytest.approx(cfg.nu * cfg.k_budget)


def test_objective_terms_hand_checked():
    cfg, model, _ = xs_instance()
    traj = decode_bitstring("111111", cfg)
    t = objective_terms(traj, model, cfg)
    w = np.full((2, 3), 0.5)
    assert t.f == pytest.approx(0.5 * model.mu.sum(), abs=1e-14)
    assert t.r == pytest.approx(sum(w[k] @ model.sigma[k] @ w[k] for k in range(2)), abs=1e-14)
    assert t.c_exact == pytest.approx(0.01 * 1.5, abs=1e-14)
    assert t.c_quadratic == pytest.approx(0.01 * lambda_coefficient(cfg) * 0.75, abs=1e-14)
    assert t.penalty == pytest.approx(2 * 0.25, abs=1e-14)
    assert t.recombined(cfg) == pytest.approx(termwise_cost("111111", cfg, model), abs=1e-12)


def test_objective_terms_dimension_check():
    cfg = DpoConfig(2, 3, 1, 2)
    with pytest.raises(DimensionMismatch):
        objective_terms(Trajectory.from_omega(np.zeros((2, 2)), 2), MarketModel.zeros(2, 3), cfg)


def test_sharpe_examples():
    model = MarketModel(np.array([[0.1]]), np.array([[[0.0004]]]))
    assert sharpe_ratio(np.array([[1.0]]), model) == pytest.approx(5.0)
    with pytest.raises(ZeroRisk):
        sharpe_ratio(np.zeros((1, 1)), model)
    cfg, model, _ = xs_instance()
    base = sharpe_ratio(decode_bitstring("110011", cfg), model)
    for c in (0.5, 2.0, 10.0):
        assert sharpe_ratio(decode_bitstring("110011", cfg).omega * c, model) == pytest.approx(base, rel=1e-12)


def test_heavy_penalty_enforces_budget():
    cfg, model, _ = xs_instance()
    strict = DpoConfig(2, 3, 1, 2, rho=1e4)
    h = build_hamiltonian(strict, model)
    best = int(np.argmin(h.diagonal()))
    traj = decode_bitstring(format(best, "06b")[::-1], strict)
    np.testing.assert_array_equal(traj.omega.sum(axis=1), [2, 2])


def test_json_round_trips():
    cfg, model = random_instance(4)
    q = build_qubo(cfg, model)
    q2 = QuboProblem.from_json(json.loads(json.dumps(q.to_json())))
    idx = np.arange(1 << cfg.n_q)
    np.testing.assert_array_equal(q.costs(idx), q2.costs(idx))
    h = qubo_to_ising(q)
    h2 = IsingHamiltonian.from_json(json.loads(json.dumps(h.to_json())))
    np.testing.assert_array_equal(h.diagonal(), h2.diagonal())
    assert set(h.to_json()) == {"n_qubits", "identity", "h", "j"}
    assert set(q.to_json()) == {"n_vars", "constant", "linear", "quadratic"}
