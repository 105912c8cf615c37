"""Brute-force references for checking the subspace simulator.

Nothing here reuses the operator or kernel code: Hamiltonians are assembled
from explicit Kronecker products of 2x2 Pauli matrices on the full 2**n space
and exponentiated by a dense eigendecomposition. Only the bit convention
(bit ``i`` = qubit ``i`` = vertex ``i``) is shared.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .graphs import ProblemInstance, ProblemKind, objective

MAX_FULL_QUBITS = 12

_I = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)


def pauli_string(n: int, ops: dict) -> np.ndarray:
    """Full ``2**n`` matrix of a Pauli product; ``ops`` maps qubit -> 2x2 matrix.

    Qubit ``i`` is bit ``i`` of the basis index, so the leftmost Kronecker
    factor is qubit ``n-1``.
    """
    out = np.ones((1, 1), dtype=np.complex128)
    for q in range(n - 1, -1, -1):
        out = np.kron(out, ops.get(q, _I))
    return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def full_dicke(n: int, k: int) -> np.ndarray:
    psi = np.array([1.0 if _popcount(x) == k else 0.0 for x in range(1 << n)],
                   dtype=np.complex128)
    return psi / np.linalg.norm(psi)


def _pairs(mixer: str, n: int):
    if mixer == "clique":
        return [(i, j) for i in range(n) for j in range(n) if j > i]
    seen = set()
    for i in range(n):
        e = frozenset((i, (i + 1) % n))
        if len(e) == 2:
            seen.add(e)
    return [tuple(sorted(e)) for e in seen]


def full_mixer_hamiltonian(mixer: str, n: int, k: int) -> np.ndarray:
    mixer = str(getattr(mixer, "value", mixer)).lower()
    if mixer == "grover":
        psi0 = full_dicke(n, k)
        return np.outer(psi0, psi0.conj())
    h = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for i, j in _pairs(mixer, n):
        h += pauli_string(n, {i: _X, j: _X}) + pauli_string(n, {i: _Y, j: _Y})
    return h


@lru_cache(maxsize=16)
def _full_mixer_eig(mixer: str, n: int, k: int):
    return np.linalg.eigh(full_mixer_hamiltonian(mixer, n, k))


def full_cost(instance: ProblemInstance) -> np.ndarray:
    """Edge-predicate count for every n-bit string (any weight)."""
    pred = {ProblemKind.DENSEST: lambda a, b: a and b,
            ProblemKind.COVER: lambda a, b: a or b,
            ProblemKind.BISECTION: lambda a, b: a != b}[instance.kind]
    out = np.zeros(1 << instance.n)
    for x in range(1 << instance.n):
        out[x] = sum(1 for u, v in instance.graph.edges if pred(x >> u & 1, x >> v & 1))
    return out


def full_space_run(instance: ProblemInstance, variant, schedule, threshold=None) -> np.ndarray:
    """Amplitudes on all ``2**n`` basis states after the alternating evolution."""
    n, k = instance.n, instance.k
    if n > MAX_FULL_QUBITS:
        raise ValueError(f"full-space reference limited to n <= {MAX_FULL_QUBITS}")
    mixer = variant.mixer.value
    thresholded = variant.thresholded
    if thresholded and threshold is None:
        raise ValueError("threshold required")
    c = full_cost(instance)
    h_p = (c > threshold).astype(float) if thresholded else c
    w, v = _full_mixer_eig(mixer, n, k)
    psi = full_dicke(n, k)
    for beta, gamma in zip(schedule.betas, schedule.gammas):
        psi = np.exp(-1j * gamma * h_p) * psi
        psi = v @ (np.exp(-1j * beta * w) * (v.conj().T @ psi))
    return psi


def weight_sector_leakage(psi: np.ndarray, n: int, k: int) -> float:
    """Total probability outside the weight-k sector."""
    off = np.array([_popcount(x) != k for x in range(1 << n)])
    return float(np.sum(np.abs(psi[off]) ** 2))


def brute_force_optimum(instance: ProblemInstance) -> tuple[int, int]:
    """``(max objective, lowest bitstring attaining it)`` by enumeration."""
    best = None
    for x in range(1 << instance.n):
        if _popcount(x) != instance.k:
            continue
        c = objective(instance, x)
        if best is None or c > best[0]:
            best = (c, x)
    return best


def amplitude_amplification_probability(N: int, M: int, p: int) -> float:
    """Marked-state probability after ``p`` Grover iterations on ``M`` of ``N`` items."""
    if not (N >= 1 and 0 <= M <= N):
        raise ValueError(f"need N >= 1 and 0 <= M <= N, got N={N}, M={M}")
    if M == 0:
        return 0.0
    if M == N:
        return 1.0
    return math.sin((2 * p + 1) * math.asin(math.sqrt(M / N))) ** 2


def align_global_phase(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` multiplied by the unit phase that best matches it to ``b``."""
    ov = np.vdot(a, b)
    if abs(ov) == 0:
        return a
    return a * (ov / abs(ov))
