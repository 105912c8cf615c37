"""Mixers and phase separators restricted to the weight-k sector.

Clique and Ring mixers are stored as a dense eigendecomposition of their
subspace matrix and exponentiated exactly; the Grover mixer is the projector
onto the Dicke state and is applied as a rank-1 update.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .subspace import CapacityError, SubspaceIndex, build_index

DEFAULT_MAX_OPERATOR_DIM = 5000


class MixerKind(str, enum.Enum):
    CLIQUE = "clique"
    RING = "ring"
    GROVER = "grover"

    @classmethod
    def parse(cls, s) -> MixerKind:
        return s if isinstance(s, cls) else cls(str(s).strip().lower())

    @property
    def label(self) -> str:
        return self.value.capitalize()


def mixer_pairs(kind: MixerKind, n: int) -> list[tuple[int, int]]:
    """Qubit pairs carrying an ``XX + YY`` term.

    The ring is periodic; its pair set is deduplicated, so for ``n = 2`` the
    single pair ``(0, 1)`` appears once.
    """
    kind = MixerKind.parse(kind)
    if kind is MixerKind.CLIQUE:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if kind is MixerKind.RING:
        return sorted({(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)
                       if i != (i + 1) % n})
    raise ValueError("the Grover mixer has no pair structure")


def mixer_matrix(kind: MixerKind, index: SubspaceIndex) -> np.ndarray:
    """Dense real symmetric matrix of a Clique/Ring mixer on the sector."""
    pairs = mixer_pairs(kind, index.n)
    pi = np.array([p[0] for p in pairs], dtype=np.int64)
    pj = np.array([p[1] for p in pairs], dtype=np.int64)
    return kernels.hop_matrix(index.states, pi, pj, index.n, index.binom)


@dataclass(frozen=True, eq=False)
class MixerOperator:
    kind: MixerKind
    n: int
    k: int
    dim: int
    eigenvalues: np.ndarray | None = None   # None for the rank-1 Grover mixer
    eigenvectors: np.ndarray | None = None  # real orthogonal, columns are eigenvectors

    @property
    def is_rank1(self) -> bool:
        return self.eigenvectors is None

    @property
    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues grouped within 1e-9: (group means, group index per eigenvalue)."""
        cached = self.__dict__.get("_levels")
        if cached is None:
            w = self.eigenvalues  # ascending, from eigh
            group = np.concatenate([[0], np.cumsum(np.diff(w) > 1e-9)])
            means = np.bincount(group, weights=w) / np.bincount(group)
            cached = (means, group)
            object.__setattr__(self, "_levels", cached)
        return cached

    def matrix(self) -> np.ndarray:
        """Reconstructed subspace Hamiltonian (dense)."""
        if self.is_rank1:
            return np.full((self.dim, self.dim), 1.0 / self.dim)
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def build_mixer(kind, index: SubspaceIndex,
                max_dim: int = DEFAULT_MAX_OPERATOR_DIM) -> MixerOperator:
    kind = MixerKind.parse(kind)
    if kind is MixerKind.GROVER:
        return MixerOperator(kind, index.n, index.k, index.dim)
    if index.dim > max_dim:
        raise CapacityError(f"{kind.label} mixer on C({index.n},{index.k}) = {index.dim} "
                            f"states exceeds the dense operator budget of {max_dim}")
    h = mixer_matrix(kind, index)
    w, q = np.linalg.eigh(h)
    w.setflags(write=False)
    q = np.ascontiguousarray(q)
    q.setflags(write=False)
    return MixerOperator(kind, index.n, index.k, index.dim, w, q)


_cache: dict = {}
_cache_lock = threading.Lock()
_key_locks: dict = {}


def get_mixer(kind, n: int, k: int, max_dim: int = DEFAULT_MAX_OPERATOR_DIM) -> MixerOperator:
    """Cached :func:`build_mixer`; each (kind, n, k) is built once per process."""
    key = (MixerKind.parse(kind), n, k)
    op = _cache.get(key)
    if op is not None:
        return op
    with _cache_lock:
        lock = _key_locks.setdefault(key, threading.Lock())
    with lock:
        op = _cache.get(key)
        if op is None:
            op = build_mixer(key[0], build_index(n, k), max_dim=max_dim)
            _cache[key] = op
    return op


def clear_mixer_cache() -> None:
    with _cache_lock:
        _cache.clear()
        _key_locks.clear()


def _real_matmul(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``m @ z`` for real ``m`` and complex ``z`` of shape (dim, cols)."""
    zr = np.ascontiguousarray(z).view(np.float64)  # (dim, 2*cols), interleaved re/im
    return (m @ zr).view(np.complex128)


def _level_phases(levels, angle):
    """``exp(-i angle * value)`` per entry, exponentiating each distinct value once."""
    vals, inverse = levels
    return np.exp(-1j * np.multiply.outer(vals, angle))[inverse]


def apply_mixer(state: np.ndarray, op: MixerOperator, beta) -> np.ndarray:
    """``exp(-i beta H_M) state``.

    ``state`` may be a vector of length ``dim`` or a (dim, m) batch, in which
    case ``beta`` may be a scalar or a length-m array (one angle per column).
    """
    vec = state.ndim == 1
    z = state[:, None] if vec else state
    beta = np.asarray(beta, dtype=np.float64)
    if op.is_rank1:
        overlap = z.sum(axis=0) / math.sqrt(op.dim)
        coef = (np.exp(-1j * beta) - 1.0) * overlap / math.sqrt(op.dim)
        out = z + coef
    else:
        q = op.eigenvectors
        y = _real_matmul(q.T, z)
        y *= _level_phases(op.levels, beta).reshape(op.dim, -1)
        out = _real_matmul(q, y)
    return out[:, 0] if vec else out


def apply_phase_separator(state: np.ndarray, cost, gamma, threshold: int | None = None):
    """``exp(-i gamma H_P) state``.

    ``threshold=None`` selects the objective-value separator; an integer selects
    the threshold separator, which phases exactly the states with cost > threshold.
    Batched states follow the same conventions as :func:`apply_mixer`.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if threshold is None:
        phase = _level_phases(cost.levels, gamma)
        if state.ndim == 2 and gamma.ndim == 0:
            phase = phase[:, None]
        return state * phase
    marked = cost.values > int(threshold)
    out = state.copy()
    out[marked] *= np.exp(-1j * gamma)
    return out
