# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: gate kernels, diagonal Ising evaluation, Gray-code
enumeration and Metropolis sweeps.

Signatures mirror :mod:`dpovqe._pykernels` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, fabs

cnp.import_array()

ctypedef long long i64


def apply_ry(double complex[::1] psi, int q, double theta):
    cdef i64 dim = psi.shape[0]
    cdef i64 mask = (<i64>1) << q
    cdef i64 base, i
    cdef double c = cos(0.5 * theta), s = sin(0.5 * theta)
    cdef double complex a0, a1
    with nogil:
        base = 0
        while base < dim:
            for i in range(base, base + mask):
                a0 = psi[i]
                a1 = psi[i + mask]
                psi[i] = c * a0 - s * a1
                psi[i + mask] = s * a0 + c * a1
            base += 2 * mask


def apply_rx(double complex[::1] psi, int q, double theta):
    cdef i64 dim = psi.shape[0]
    cdef i64 mask = (<i64>1) << q
    cdef i64 base, i
    cdef double c = cos(0.5 * theta), s = sin(0.5 * theta)
    cdef double complex mis = -1j * s
    cdef double complex a0, a1
    with nogil:
        base = 0
        while base < dim:
            for i in range(base, base + mask):
                a0 = psi[i]
                a1 = psi[i + mask]
                psi[i] = c * a0 + mis * a1
                psi[i + mask] = mis * a0 + c * a1
            base += 2 * mask


def apply_rz(double complex[::1] psi, int q, double theta):
    cdef i64 dim = psi.shape[0]
    cdef i64 mask = (<i64>1) << q
    cdef i64 i
    cdef double c = cos(0.5 * theta), s = sin(0.5 * theta)
    cdef double complex p0 = c - 1j * s
    cdef double complex p1 = c + 1j * s
    with nogil:
        for i in range(dim):
            if i & mask:
                psi[i] = psi[i] * p1
            else:
                psi[i] = psi[i] * p0


def apply_rzz(double complex[::1] psi, int a, int b, double theta):
    cdef i64 dim = psi.shape[0]
    cdef i64 i
    cdef double c = cos(0.5 * theta), s = sin(0.5 * theta)
    cdef double complex even = c - 1j * s
    cdef double complex odd = c + 1j * s
    with nogil:
        for i in range(dim):
            if ((i >> a) ^ (i >> b)) & 1:
                psi[i] = psi[i] * odd
            else:
                psi[i] = psi[i] * even


def apply_cnot(double complex[::1] psi, int control, int target):
    cdef i64 dim = psi.shape[0]
    cdef i64 cm = (<i64>1) << control
    cdef i64 tm = (<i64>1) << target
    cdef i64 i
    cdef double complex tmp
    with nogil:
        for i in range(dim):
            if (i & cm) and not (i & tm):
                tmp = psi[i]
                psi[i] = psi[i | tm]
                psi[i | tm] = tmp


def apply_swap(double complex[::1] psi, int a, int b):
    cdef i64 dim = psi.shape[0]
    cdef i64 am = (<i64>1) << a
    cdef i64 bm = (<i64>1) << b
    cdef i64 i, j
    cdef double complex tmp
    with nogil:
        for i in range(dim):
            if (i & am) and not (i & bm):
                j = (i ^ am) | bm
                tmp = psi[i]
                psi[i] = psi[j]
                psi[j] = tmp


def ising_costs(i64 start, i64 count, int n, double const,
                double[::1] h, cnp.int64_t[::1] jp, cnp.int64_t[::1] jq, double[::1] jv):
    """Costs of basis indices start .. start+count-1 (bit q of the index is x_q)."""
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] res = out
    cdef i64 k, idx
    cdef int q
    cdef Py_ssize_t m, nj = jv.shape[0]
    cdef double e
    with nogil:
        for k in range(count):
            idx = start + k
            e = const
            for q in range(n):
                if (idx >> q) & 1:
                    e -= h[q]
                else:
                    e += h[q]
            for m in range(nj):
                if ((idx >> jp[m]) ^ (idx >> jq[m])) & 1:
                    e -= jv[m]
                else:
                    e += jv[m]
            res[k] = e
    return out


cdef inline int _ctz(i64 x) nogil:
    cdef int k = 0
    while not ((x >> k) & 1):
        k += 1
    return k


def diag_expectation(double[::1] probs, int n, double const, double[::1] h,
                     cnp.int64_t[::1] adj_ptr, cnp.int64_t[::1] adj_idx, double[::1] adj_val):
    """Sum of probs[i] * cost(i), walking indices in Gray-code order."""
    cdef i64 dim = (<i64>1) << n
    cdef double[::1] field = np.empty(n)
    cdef signed char[::1] z = np.ones(n, dtype=np.int8)
    cdef double cost = const, total, half_pairs = 0.0
    cdef i64 i, g = 0
    cdef int k, q
    cdef cnp.int64_t m
    for q in range(n):
        field[q] = h[q]
        for m in range(adj_ptr[q], adj_ptr[q + 1]):
            field[q] += adj_val[m]
            half_pairs += adj_val[m]
        cost += h[q]
    cost += 0.5 * half_pairs
    total = probs[0] * cost
    with nogil:
        for i in range(1, dim):
            k = _ctz(i)
            cost -= 2.0 * z[k] * field[k]
            z[k] = -z[k]
            for m in range(adj_ptr[k], adj_ptr[k + 1]):
                field[adj_idx[m]] += 2.0 * adj_val[m] * z[k]
            g ^= (<i64>1) << k
            total += probs[g] * cost
    return total


cdef double _init_fields(int n, double const, double[::1] h, cnp.int64_t[::1] adj_ptr,
                         double[::1] adj_val, double[::1] field, signed char[::1] z):
    cdef double cost = const, half_pairs = 0.0
    cdef int q
    cdef cnp.int64_t m
    for q in range(n):
        z[q] = 1
        field[q] = h[q]
        for m in range(adj_ptr[q], adj_ptr[q + 1]):
            field[q] += adj_val[m]
            half_pairs += adj_val[m]
        cost += h[q]
    return cost + 0.5 * half_pairs


def gray_code_minimum(int n, double const, double[::1] h,
                      cnp.int64_t[::1] adj_ptr, cnp.int64_t[::1] adj_idx, double[::1] adj_val,
                      double tie_tol):
    """Global minimum over all 2**n bit assignments by incremental Gray-code walk.

    First walk finds the minimum cost; second walk picks, among costs within
    ``tie_tol`` of it, the lexicographically lowest left-to-right bitstring.
    Returns (best_index, best_cost_as_walked).
    """
    cdef i64 dim = (<i64>1) << n
    cdef double[::1] field = np.empty(n)
    cdef signed char[::1] z = np.ones(n, dtype=np.int8)
    cdef double cost, best, chosen_cost
    cdef i64 i, g, rev, best_g, best_rev
    cdef int k, sweep
    cdef cnp.int64_t m
    best = 0.0
    best_g = 0
    chosen_cost = 0.0
    for sweep in range(2):
        cost = _init_fields(n, const, h, adj_ptr, adj_val, field, z)
        g = 0
        rev = 0
        if sweep == 0:
            best = cost
        else:
            best_rev = dim
            if cost <= best + tie_tol:
                best_g = 0
                best_rev = 0
                chosen_cost = cost
        with nogil:
            for i in range(1, dim):
                k = _ctz(i)
                cost -= 2.0 * z[k] * field[k]
                z[k] = -z[k]
                for m in range(adj_ptr[k], adj_ptr[k + 1]):
                    field[adj_idx[m]] += 2.0 * adj_val[m] * z[k]
                g ^= (<i64>1) << k
                rev ^= (<i64>1) << (n - 1 - k)
                if sweep == 0:
                    if cost < best:
                        best = cost
                elif cost <= best + tie_tol and rev < best_rev:
                    best_g = g
                    best_rev = rev
                    chosen_cost = cost
    return best_g, chosen_cost


def metropolis_anneal(signed char[::1] spins, double const, double[::1] h,
                      cnp.int64_t[::1] adj_ptr, cnp.int64_t[::1] adj_idx, double[::1] adj_val,
                      double[::1] betas, double[:, ::1] uniforms):
    """Single-spin-flip Metropolis sweeps, in place on ``spins``.

    Sweep k visits spins 0..n-1 at inverse temperature betas[k]; uniforms[k, i]
    is the acceptance draw for spin i. Returns (best_energy, best_spins, final_energy).
    """
    cdef Py_ssize_t n = spins.shape[0], sweeps = betas.shape[0]
    cdef Py_ssize_t k, i
    cdef cnp.int64_t m
    cdef double energy = const, half = 0.0, field, de, best
    best_arr = np.asarray(spins).copy()
    cdef signed char[::1] best_spins = best_arr
    for i in range(n):
        energy += h[i] * spins[i]
        for m in range(adj_ptr[i], adj_ptr[i + 1]):
            half += adj_val[m] * spins[i] * spins[adj_idx[m]]
    energy += 0.5 * half
    best = energy
    with nogil:
        for k in range(sweeps):
            for i in range(n):
                field = h[i]
                for m in range(adj_ptr[i], adj_ptr[i + 1]):
                    field += adj_val[m] * spins[adj_idx[m]]
                de = -2.0 * spins[i] * field
                if de <= 0.0 or uniforms[k, i] < exp(-betas[k] * de):
                    spins[i] = -spins[i]
                    energy += de
                    if energy < best:
                        best = energy
                        best_spins[:] = spins
    return best, best_arr, energy
