"""Graphs, problem instances and the three Hamming-weight-constrained objectives."""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels


class ProblemKind(str, enum.Enum):
    """Problem class; the value is the name used in instance files."""

    DENSEST = "densest"
    COVER = "cover"
    BISECTION = "bisection"

    @property
    def code(self) -> int:
        """Edge predicate code: AND, OR, XOR."""
        return {"densest": kernels.KIND_AND, "cover": kernels.KIND_OR,
                "bisection": kernels.KIND_XOR}[self.value]

    @classmethod
    def parse(cls, s: str | ProblemKind) -> ProblemKind:
        if isinstance(s, cls):
            return s
        aliases = {"kds": "densest", "k-ds": "densest", "densestsubgraph": "densest",
                   "vc": "cover", "mkvc": "cover", "vertexcover": "cover",
                   "maxbisection": "bisection", "mb": "bisection"}
        key = str(s).strip().lower().replace("_", "").replace(" ", "")
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``edges`` is normalized to sorted ``(u, v)`` pairs with ``u < v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs n >= 1, got {self.n}")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            a, b = min(u, v), max(u, v)
            if (a, b) in norm:
                raise ValueError(f"duplicate edge ({a}, {b})")
            norm.add((a, b))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_arrays(self):
        """Endpoints as two int64 arrays (u, v)."""
        if not self.edges:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        e = np.asarray(self.edges, dtype=np.int64)
        return e[:, 0].copy(), e[:, 1].copy()

    def relabel(self, perm) -> Graph:
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return Graph(self.n, tuple((perm[u], perm[v]) for u, v in self.edges))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> Graph:
        return cls(int(d["n"]), tuple(tuple(e) for e in d.get("edges", [])))


@dataclass(frozen=True)
class ProblemInstance:
    graph: Graph
    kind: ProblemKind
    k: int
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind.parse(self.kind))
        n = self.graph.n
        if not 0 < self.k < n:
            raise ValueError(f"need 0 < k < n, got k={self.k}, n={n}")
        if self.kind is ProblemKind.BISECTION and 2 * self.k != n:
            raise ValueError(f"bisection needs k = n/2, got k={self.k}, n={n}")

    @property
    def n(self) -> int:
        return self.graph.n

    def to_dict(self) -> dict:
        d = self.graph.to_dict()
        d.update(kind=self.kind.value, k=self.k, seed=self.seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ProblemInstance:
        seed = d.get("seed")
        return cls(Graph.from_dict(d), ProblemKind.parse(d["kind"]), int(d["k"]),
                   None if seed is None else int(seed))


def objective(instance: ProblemInstance, x: int) -> int:
    """Number of edges satisfying the problem's predicate for vertex set ``x``.

    ``x`` is an integer bitmask; bit ``i`` set means vertex ``i`` is selected.
    """
    x = int(x)
    if x < 0 or x >> instance.n:
        raise ValueError(f"bitstring {x} has bits beyond n={instance.n}")
    if bin(x).count("1") != instance.k:
        raise ValueError(f"bitstring {x:0{instance.n}b} does not have weight k={instance.k}")
    total = 0
    for u, v in instance.graph.edges:
        a, b = (x >> u) & 1, (x >> v) & 1
        if instance.kind is ProblemKind.DENSEST:
            total += a & b
        elif instance.kind is ProblemKind.COVER:
            total += a | b
        else:
            total += a ^ b
    return total


def generate_erdos_renyi(n: int, edge_probability: float, seed: int) -> Graph:
    """G(n, p) with one uniform draw per vertex pair, pairs in lexicographic order.

    Uses numpy's PCG64 seeded with ``seed``, so the graph is a pure function of
    ``(n, p, seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= edge_probability <= 1.0:
        raise ValueError(f"edge probability {edge_probability} not in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = list(itertools.combinations(range(n), 2))
    draws = rng.random(len(pairs))
    return Graph(n, tuple(pr for pr, u in zip(pairs, draws) if u < edge_probability))


def all_four_vertex_graphs() -> list[Graph]:
    """All 64 labelled graphs on 4 vertices.

    Graph ``i`` contains the ``j``-th pair of ``combinations(range(4), 2)``
    iff bit ``j`` of ``i`` is set, so index 0 is empty and index 63 is K4.
    """
    pairs = list(itertools.combinations(range(4), 2))
    return [Graph(4, tuple(pr for j, pr in enumerate(pairs) if mask >> j & 1))
            for mask in range(1 << len(pairs))]


def instance_seed(master_seed: int, index: int, *salt: int) -> int:
    """Per-instance 63-bit seed split deterministically from a master seed.

    ``salt`` (e.g. the vertex count) separates otherwise identical indices.
    """
    ss = np.random.SeedSequence([int(master_seed), int(index), *map(int, salt)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def random_instances(kind, n: int, k: int, count: int, master_seed: int,
                     edge_probability: float = 0.5) -> list[ProblemInstance]:
    kind = ProblemKind.parse(kind)
    out = []
    for i in range(count):
        s = instance_seed(master_seed, i)
        out.append(ProblemInstance(generate_erdos_renyi(n, edge_probability, s), kind, k, s))
    return out


def save_instances(path, instances) -> None:
    """Write one instance (dict) or a list of them as JSON."""
    path = Path(path)
    if isinstance(instances, ProblemInstance):
        payload = instances.to_dict()
    else:
        payload = [inst.to_dict() for inst in instances]
    path.write_text(json.dumps(payload, indent=1))


def load_instances(path) -> list[ProblemInstance]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    return [ProblemInstance.from_dict(d) for d in data]
