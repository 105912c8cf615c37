"""Inner loops over the weight-k sector.

Every kernel has a numba version and a numpy version with identical output.
The public names dispatch on :data:`hwqaoa._accel.HAS_NUMBA`; both twins are
importable directly so tests and the benchmark can compare them.

Bit convention: bit ``i`` (value ``2**i``) of a state is vertex/qubit ``i``.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit

# objective edge predicates, indexed by ProblemKind.code
KIND_AND, KIND_OR, KIND_XOR = 0, 1, 2


def binomial_table(n):
    """``table[a, b] = C(a, b)`` for ``0 <= a, b <= n`` as int64."""
    table = np.zeros((n + 1, n + 1), dtype=np.int64)
    for a in range(n + 1):
        table[a, 0] = 1
        for b in range(1, a + 1):
            table[a, b] = table[a - 1, b - 1] + table[a - 1, b]
    return table


# -- enumeration -------------------------------------------------------------

def _weight_k_states_py(n, k, dim):
    out = np.empty(dim, dtype=np.int64)
    x = (1 << k) - 1
    for r in range(dim):
        out[r] = x
        # Gosper's hack: next integer with the same popcount
        c = x & -x
        y = x + c
        x = (((x ^ y) >> 2) // c) | y
    return out


_weight_k_states_nb = njit(_weight_k_states_py)


def weight_k_states_numpy(n, k, dim):
    xs = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros_like(xs)
    for i in range(n):
        pop += (xs >> i) & 1
    out = xs[pop == k]
    assert out.size == dim
    return out


def weight_k_states_numba(n, k, dim):
    return _weight_k_states_nb(n, k, dim)


# -- ranking -----------------------------------------------------------------

def _rank_states_py(states, n, binom):
    out = np.empty(states.shape[0], dtype=np.int64)
    for idx in range(states.shape[0]):
        x = states[idx]
        r = 0
        t = 0
        for b in range(n):
            if (x >> b) & 1:
                t += 1
                r += binom[b, t]
        out[idx] = r
    return out


_rank_states_nb = njit(_rank_states_py)


def rank_states_numpy(states, n, binom):
    states = np.asarray(states, dtype=np.int64)
    r = np.zeros(states.shape, dtype=np.int64)
    t = np.zeros(states.shape, dtype=np.int64)
    for b in range(n):
        bit = (states >> b) & 1
        t += bit
        r += bit * binom[b, np.minimum(t, n)]
    return r


def rank_states_numba(states, n, binom):
    return _rank_states_nb(np.ascontiguousarray(states, dtype=np.int64), n, binom)


# -- cost --------------------------------------------------------------------

def _cost_values_py(states, eu, ev, kind):
    out = np.zeros(states.shape[0], dtype=np.int64)
    for idx in range(states.shape[0]):
        x = states[idx]
        c = 0
        for e in range(eu.shape[0]):
            a = (x >> eu[e]) & 1
            b = (x >> ev[e]) & 1
            if kind == 0:
                c += a & b
            elif kind == 1:
                c += a | b
            else:
                c += a ^ b
        out[idx] = c
    return out


_cost_values_nb = njit(_cost_values_py)


def cost_values_numpy(states, eu, ev, kind):
    if eu.size == 0:
        return np.zeros(states.shape[0], dtype=np.int64)
    a = (states[:, None] >> eu[None, :]) & 1
    b = (states[:, None] >> ev[None, :]) & 1
    if kind == KIND_AND:
        f = a & b
    elif kind == KIND_OR:
        f = a | b
    else:
        f = a ^ b
    return f.sum(axis=1).astype(np.int64)


def cost_values_numba(states, eu, ev, kind):
    return _cost_values_nb(states, eu, ev, kind)


# -- XY hop matrix -----------------------------------------------------------

def _hop_matrix_py(states, pi, pj, n, binom):
    dim = states.shape[0]
    h = np.zeros((dim, dim), dtype=np.float64)
    for r in range(dim):
        x = states[r]
        for q in range(pi.shape[0]):
            i = pi[q]
            j = pj[q]
            if ((x >> i) & 1) != ((x >> j) & 1):
                y = x ^ ((1 << i) | (1 << j))
                s = 0
                t = 0
                for b in range(n):
                    if (y >> b) & 1:
                        t += 1
                        s += binom[b, t]
                h[r, s] += 2.0
    return h


_hop_matrix_nb = njit(_hop_matrix_py)


def hop_matrix_numpy(states, pi, pj, n, binom):
    dim = states.shape[0]
    h = np.zeros((dim, dim), dtype=np.float64)
    rows = np.arange(dim)
    for i, j in zip(pi.tolist(), pj.tolist()):
        differ = ((states >> i) & 1) != ((states >> j) & 1)
        src = rows[differ]
        dst = np.searchsorted(states, states[differ] ^ ((1 << i) | (1 << j)))
        h[src, dst] += 2.0
    return h


def hop_matrix_numba(states, pi, pj, n, binom):
    return _hop_matrix_nb(states, pi, pj, n, binom)


if HAS_NUMBA:
    weight_k_states = weight_k_states_numba
    rank_states = rank_states_numba
    cost_values = cost_values_numba
    hop_matrix = hop_matrix_numba
else:
    weight_k_states = weight_k_states_numpy
    rank_states = rank_states_numpy
    cost_values = cost_values_numpy
    hop_matrix = hop_matrix_numpy
