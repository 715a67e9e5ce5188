"""Pure numpy/Python versions of the compiled kernels.

Gate kernels and cost tables are vectorised with numpy; the Gray-code walk and
Metropolis sweeps are plain loops that follow the compiled code step for step,
so both backends agree to floating-point round-off.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_CHUNK = 1 << 16


def _pair_view(psi, q):
    return psi.reshape(-1, 2, 1 << q)


def apply_ry(psi, q, theta):
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    v = _pair_view(psi, q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :].copy()
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def apply_rx(psi, q, theta):
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    v = _pair_view(psi, q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :].copy()
    v[:, 0, :] = c * a0 - 1j * s * a1
    v[:, 1, :] = -1j * s * a0 + c * a1


def apply_rz(psi, q, theta):
    v = _pair_view(psi, q)
    v[:, 0, :] *= complex(math.cos(0.5 * theta), -math.sin(0.5 * theta))
    v[:, 1, :] *= complex(math.cos(0.5 * theta), math.sin(0.5 * theta))


@lru_cache(maxsize=256)
def _parity_mask(dim, a, b):
    idx = np.arange(dim)
    return (((idx >> a) ^ (idx >> b)) & 1).astype(bool)


@lru_cache(maxsize=256)
def _flip_indices(dim, set_bit, clear_bit):
    idx = np.arange(dim)
    sel = idx[((idx >> set_bit) & 1 == 1) & ((idx >> clear_bit) & 1 == 0)]
    return sel, (sel ^ (1 << set_bit)) | (1 << clear_bit)


def apply_rzz(psi, a, b, theta):
    odd = _parity_mask(psi.shape[0], a, b)
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    psi[odd] *= complex(c, s)
    psi[~odd] *= complex(c, -s)


@lru_cache(maxsize=256)
def _cnot_indices(dim, control, target):
    idx = np.arange(dim)
    sel = idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]
    return sel, sel | (1 << target)


def apply_cnot(psi, control, target):
    sel, partner = _cnot_indices(psi.shape[0], control, target)
    psi[sel], psi[partner] = psi[partner], psi[sel].copy()


def apply_swap(psi, a, b):
    sel, partner = _flip_indices(psi.shape[0], a, b)
    psi[sel], psi[partner] = psi[partner], psi[sel].copy()


def ising_costs(start, count, n, const, h, jp, jq, jv):
    idx = np.arange(start, start + count, dtype=np.int64)
    z = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    out = const + z @ np.asarray(h, dtype=float)
    if len(jv):
        out += (z[:, jp] * z[:, jq]) @ np.asarray(jv, dtype=float)
    return out


def diag_expectation(probs, n, const, h, adj_ptr, adj_idx, adj_val):
    jp, jq, jv = _pairs_from_csr(n, adj_ptr, adj_idx, adj_val)
    total = 0.0
    dim = 1 << n
    for start in range(0, dim, _CHUNK):
        count = min(_CHUNK, dim - start)
        total += float(probs[start : start + count] @ ising_costs(start, count, n, const, h, jp, jq, jv))
    return total


def _pairs_from_csr(n, adj_ptr, adj_idx, adj_val):
    jp, jq, jv = [], [], []
    for p in range(n):
        for m in range(adj_ptr[p], adj_ptr[p + 1]):
            q = adj_idx[m]
            if p < q:
                jp.append(p)
                jq.append(q)
                jv.append(adj_val[m])
    return np.array(jp, dtype=np.int64), np.array(jq, dtype=np.int64), np.array(jv, dtype=float)


def _init_fields(n, const, h, adj_ptr, adj_val):
    field = [float(x) for x in h]
    cost = const + sum(field)
    half = 0.0
    for q in range(n):
        for m in range(adj_ptr[q], adj_ptr[q + 1]):
            field[q] += adj_val[m]
            half += adj_val[m]
    return cost + 0.5 * half, field, [1] * n


def gray_code_minimum(n, const, h, adj_ptr, adj_idx, adj_val, tie_tol):
    adj_ptr = [int(x) for x in adj_ptr]
    adj_idx = [int(x) for x in adj_idx]
    adj_val = [float(x) for x in adj_val]
    dim = 1 << n
    best = 0.0
    best_g = 0
    chosen = 0.0
    for sweep in range(2):
        cost, field, z = _init_fields(n, const, h, adj_ptr, adj_val)
        g = rev = 0
        if sweep == 0:
            best = cost
        else:
            best_rev = dim
            if cost <= best + tie_tol:
                best_g, best_rev, chosen = 0, 0, cost
        for i in range(1, dim):
            k = (i & -i).bit_length() - 1
            cost -= 2.0 * z[k] * field[k]
            z[k] = -z[k]
            zk = z[k]
            for m in range(adj_ptr[k], adj_ptr[k + 1]):
                field[adj_idx[m]] += 2.0 * adj_val[m] * zk
            g ^= 1 << k
            rev ^= 1 << (n - 1 - k)
            if sweep == 0:
                if cost < best:
                    best = cost
            elif cost <= best + tie_tol and rev < best_rev:
                best_g, best_rev, chosen = g, rev, cost
    return best_g, chosen


def metropolis_anneal(spins, const, h, adj_ptr, adj_idx, adj_val, betas, uniforms):
    n = spins.shape[0]
    s = [int(x) for x in spins]
    hh = [float(x) for x in h]
    ptr = [int(x) for x in adj_ptr]
    nbr = [int(x) for x in adj_idx]
    val = [float(x) for x in adj_val]
    energy = const
    half = 0.0
    for i in range(n):
        energy += hh[i] * s[i]
        for m in range(ptr[i], ptr[i + 1]):
            half += val[m] * s[i] * s[nbr[m]]
    energy += 0.5 * half
    best = energy
    best_spins = list(s)
    for k, beta in enumerate(betas):
        row = uniforms[k]
        for i in range(n):
            field = hh[i]
            for m in range(ptr[i], ptr[i + 1]):
                field += val[m] * s[nbr[m]]
            de = -2.0 * s[i] * field
            if de <= 0.0 or row[i] < math.exp(-beta * de):
                s[i] = -s[i]
                energy += de
                if energy < best:
                    best = energy
                    best_spins = list(s)
    spins[:] = s
    return best, np.array(best_spins, dtype=np.int8), energy
