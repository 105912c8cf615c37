"""The weight-k sector: ranking, Dicke state, cost vector.

States of the feasible subspace are stored densely, ordered by the numeric
value of their bitstring. That order coincides with the colexicographic
combinatorial number system, so ``rank(x) = sum_t C(c_t, t)`` over the set
bit positions ``c_1 < c_2 < ... < c_k``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .graphs import ProblemInstance

DEFAULT_MAX_DIM = 10**6


class CapacityError(RuntimeError):
    """A requested vector or matrix would exceed its memory budget."""


@dataclass(frozen=True, eq=False)
class SubspaceIndex:
    n: int
    k: int
    dim: int
    states: np.ndarray  # int64 bitmasks, strictly increasing
    binom: np.ndarray

    def rank(self, x: int) -> int:
        x = int(x)
        if bin(x).count("1") != self.k or x >> self.n:
            raise ValueError(f"{x} is not a weight-{self.k} string on {self.n} bits")
        r, t = 0, 0
        for b in range(self.n):
            if x >> b & 1:
                t += 1
                r += math.comb(b, t)
        return r

    def unrank(self, r: int) -> int:
        r = int(r)
        if not 0 <= r < self.dim:
            raise IndexError(f"rank {r} out of range [0, {self.dim})")
        x = 0
        b = self.n - 1
        for t in range(self.k, 0, -1):
            # largest position b with C(b, t) <= r
            while math.comb(b, t) > r:
                b -= 1
            x |= 1 << b
            r -= math.comb(b, t)
            b -= 1
        return x

    def rank_many(self, xs) -> np.ndarray:
        return kernels.rank_states(np.asarray(xs, dtype=np.int64), self.n, self.binom)

    def bitstring(self, r: int) -> str:
        """Rank ``r`` as a string, most significant (vertex n-1) first."""
        return format(int(self.states[r]), f"0{self.n}b")


def build_index(n: int, k: int, max_dim: int = DEFAULT_MAX_DIM) -> SubspaceIndex:
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got n={n}, k={k}")
    if n > 62:
        raise CapacityError("bitmasks are limited to 62 bits")
    dim = math.comb(n, k)
    if dim > max_dim:
        raise CapacityError(f"C({n},{k}) = {dim} exceeds the vector budget of {max_dim}")
    return _cached_index(n, k)


@lru_cache(maxsize=64)
def _cached_index(n, k):
    dim = math.comb(n, k)
    states = kernels.weight_k_states(n, k, dim)
    states.setflags(write=False)
    binom = kernels.binomial_table(n)
    binom.setflags(write=False)
    return SubspaceIndex(n, k, dim, states, binom)


def dicke_state(index: SubspaceIndex) -> np.ndarray:
    return np.full(index.dim, 1.0 / math.sqrt(index.dim), dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class CostVector:
    values: np.ndarray  # int64, values[r] = objective(unrank(r))
    c_max: int
    c_min: int

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct cost values and, per rank, the index of its value."""
        cached = self.__dict__.get("_levels")
        if cached is None:
            cached = np.unique(self.values, return_inverse=True)
            object.__setattr__(self, "_levels", cached)
        return cached


def build_cost_vector(instance: ProblemInstance, index: SubspaceIndex) -> CostVector:
    if (instance.n, instance.k) != (index.n, index.k):
        raise ValueError(f"index is for (n={index.n}, k={index.k}) but instance has "
                         f"(n={instance.n}, k={instance.k})")
    eu, ev = instance.graph.edge_arrays()
    values = kernels.cost_values(index.states, eu, ev, instance.kind.code)
    values.setflags(write=False)
    return CostVector(values, int(values.max()), int(values.min()))


def export_cost_csv(path, index: SubspaceIndex, cost: CostVector) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "bitstring", "cost"])
        for r in range(index.dim):
            w.writerow([r, index.bitstring(r), int(cost.values[r])])
