"""Undirected graph with self loops, conductance arithmetic, and small-graph oracles.

Input graphs are simple; self loops arise only internally (edge removal and
contraction convert edges to loops so that degrees never change).  Each self
loop contributes exactly 1 to its vertex degree.  Conductance is computed in
exact rational arithmetic; float views are provided for the hot path.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateCut, Disconnected, FormatError, MissingEdge, TooLarge

N_ORACLE_MAX = 16
MIXING_STEP_CAP = 500_000


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class Graph:
    """Immutable undirected graph: simple adjacency plus per-vertex loop counts."""

    __slots__ = ("n", "neighbors", "self_loops", "_edges", "_deg")

    def __init__(self, n: int, neighbors: Sequence[Iterable[int]], self_loops=None):
        if len(neighbors) != n:
            raise FormatError(f"adjacency has {len(neighbors)} rows for n={n}")
        self.n = n
        self.neighbors = tuple(tuple(sorted(set(ns))) for ns in neighbors)
        self.self_loops = tuple(self_loops) if self_loops is not None else (0,) * n
        if len(self.self_loops) != n or any(s < 0 for s in self.self_loops):
            raise FormatError("bad self-loop vector")
        for v, ns in enumerate(self.neighbors):
            for u in ns:
                if not 0 <= u < n or u == v:
                    raise FormatError(f"bad neighbor {u} of {v}")
                if v not in self.neighbors[u]:
                    raise FormatError(f"asymmetric adjacency at ({u}, {v})")
        self._edges = None
        self._deg = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], self_loops=None) -> "Graph":
        adj = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise FormatError(f"endpoint out of range in edge ({u}, {v})")
            if u == v:
                raise FormatError(f"explicit self loop ({u}, {v}) not allowed in edge list")
            k = edge_key(u, v)
            if k in seen:
                raise FormatError(f"duplicate edge {k}")
            seen.add(k)
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, adj, self_loops)

    # -- basic accessors -------------------------------------------------

    def degree(self, v: int) -> int:
        return len(self.neighbors[v]) + self.self_loops[v]

    @property
    def deg(self) -> np.ndarray:
        if self._deg is None:
            self._deg = np.array([self.degree(v) for v in range(self.n)], dtype=np.int64)
        return self._deg

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        if self._edges is None:
            self._edges = tuple(
                (v, u) for v in range(self.n) for u in self.neighbors[v] if v < u
            )
        return self._edges

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and v in self.neighbors[u]

    def volume(self, s=None) -> int:
        if s is None:
            return int(self.deg.sum())
        return sum(self.degree(v) for v in s)

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self.neighbors[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.n

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.neighbors == other.neighbors
            and self.self_loops == other.self_loops
        )

    def __hash__(self):
        return hash((self.n, self.neighbors, self.self_loops))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, loops={sum(self.self_loops)})"


@dataclass(frozen=True)
class Cut:
    """A proper vertex subset with its exact cut statistics."""

    members: frozenset
    vol_s: int
    boundary: int
    conductance: Fraction
    balance: Fraction

    @property
    def conductance_float(self) -> float:
        return float(self.conductance)


def volume(g: Graph, s: Iterable[int]) -> int:
    return g.volume(list(s))


def boundary_size(g: Graph, s) -> int:
    sset = set(s)
    return sum(1 for u, v in g.edges if (u in sset) != (v in sset))


def cut_stats(g: Graph, s) -> Cut:
    sset = frozenset(s)
    if not sset or len(sset) == g.n:
        raise DegenerateCut(f"|S|={len(sset)} of n={g.n}")
    vol_s = g.volume(sset)
    vol_rest = g.volume() - vol_s
    bnd = boundary_size(g, sset)
    small = min(vol_s, vol_rest)
    conductance = Fraction(0) if bnd == 0 else Fraction(bnd, small)
    balance = Fraction(small, g.volume()) if g.volume() else Fraction(0)
    return Cut(sset, vol_s, bnd, conductance, balance)


def contract(g: Graph, s) -> Graph:
    """Induced subgraph on sorted(s) with loops added to preserve every degree."""
    keep = sorted(set(s))
    index = {v: i for i, v in enumerate(keep)}
    adj = []
    loops = []
    for v in keep:
        live = [index[u] for u in g.neighbors[v] if u in index]
        adj.append(live)
        loops.append(g.degree(v) - len(live))
    return Graph(len(keep), adj, loops)


def remove_edge_to_loops(g: Graph, u: int, v: int) -> Graph:
    """Remove a simple edge, converting it to one self loop at each endpoint."""
    if not g.has_edge(u, v):
        raise MissingEdge(f"({u}, {v})")
    adj = [list(ns) for ns in g.neighbors]
    adj[u].remove(v)
    adj[v].remove(u)
    loops = list(g.self_loops)
    loops[u] += 1
    loops[v] += 1
    return Graph(g.n, adj, loops)


def min_conductance_oracle(g: Graph, n_max: int = N_ORACLE_MAX) -> tuple[Fraction, frozenset]:
    """Exact graph conductance by exhaustive enumeration of all proper cuts.

    Vertex 0 is pinned to one side; complements cover the rest.  Returns the
    minimum conductance and one witness cut.
    """
    n = g.n
    if n < 2:
        raise DegenerateCut("need at least 2 vertices")
    if n > n_max:
        raise TooLarge(f"n={n} exceeds oracle cap {n_max}")
    masks = np.arange(1, 1 << (n - 1), dtype=np.uint64) << np.uint64(1)  # vertex 0 stays out
    bnd = np.zeros(len(masks), dtype=np.int64)
    for u, v in g.edges:
        bnd += (((masks >> np.uint64(u)) ^ (masks >> np.uint64(v))) & np.uint64(1)).astype(np.int64)
    vol = np.zeros(len(masks), dtype=np.int64)
    for v in range(n):
        vol += ((masks >> np.uint64(v)) & np.uint64(1)).astype(np.int64) * g.degree(v)
    total = g.volume()
    small = np.minimum(vol, total - vol)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(small > 0, bnd / np.maximum(small, 1), np.where(bnd > 0, np.inf, 0.0))
    order = np.argsort(phi)
    best_idx = order[0]
    best = _exact_phi(int(bnd[best_idx]), int(small[best_idx]))
    # Re-check near-ties of the float argmin exactly.
    for idx in order[1 : min(len(order), 64)]:
        if phi[idx] > phi[best_idx] + 1e-9:
            break
        cand = _exact_phi(int(bnd[idx]), int(small[idx]))
        if cand < best:
            best, best_idx = cand, idx
    mask = int(masks[best_idx])
    witness = frozenset(v for v in range(n) if (mask >> v) & 1)
    return best, witness


def _exact_phi(bnd: int, small: int) -> Fraction:
    if small == 0:
        return Fraction(0) if bnd == 0 else Fraction(10**9)
    return Fraction(bnd, small)


def lazy_walk_matrix(g: Graph) -> np.ndarray:
    """Dense lazy-walk matrix (column-stochastic); self loops keep mass in place."""
    n = g.n
    a = np.zeros((n, n))
    for u, v in g.edges:
        a[u, v] += 1.0
        a[v, u] += 1.0
    for v in range(n):
        a[v, v] += g.self_loops[v]
    d = np.maximum(g.deg, 1).astype(float)
    m = (a / d[None, :] + np.eye(n)) / 2.0
    for v in range(n):
        if g.degree(v) == 0:
            m[v, v] = 1.0  # an isolated vertex holds its mass
    return m


def mixing_time_estimate(g: Graph, tol: float, step_cap: int = MIXING_STEP_CAP) -> int:
    """Smallest t with max_v ||p_t^v - psi_V||_1 <= tol, by powering the lazy walk."""
    if not g.is_connected():
        raise Disconnected("mixing time undefined on a disconnected graph")
    n = g.n
    psi = g.deg.astype(float) / g.volume()
    p = np.eye(n)
    err = np.abs(p - psi[:, None]).sum(axis=0).max()
    if err <= tol:
        return 0
    m = lazy_walk_matrix(g)
    for t in range(1, step_cap + 1):
        p = m @ p
        err = np.abs(p - psi[:, None]).sum(axis=0).max()
        if err <= tol:
            return t
    raise TooLarge(f"no mixing within {step_cap} steps at tol={tol}")


# -- text format ---------------------------------------------------------


def parse_graph_text(text: str) -> Graph:
    """Parse `p <n> <m>` followed by m undirected edge lines, strictly."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty input")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "p":
        raise FormatError(f"bad header {lines[0]!r}")
    try:
        n, m = int(head[1]), int(head[2])
    except ValueError as exc:
        raise FormatError(f"bad header {lines[0]!r}") from exc
    if n < 0 or m < 0:
        raise FormatError("negative counts in header")
    body = lines[1:]
    if len(body) != m:
        raise FormatError(f"expected {m} edge lines, found {len(body)}")
    edges = []
    for ln in body:
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"bad edge line {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise FormatError(f"bad edge line {ln!r}") from exc
        edges.append((u, v))
    return Graph.from_edges(n, edges)


def format_graph_text(g: Graph) -> str:
    if any(g.self_loops):
        raise FormatError("text format carries simple graphs only")
    out = [f"p {g.n} {g.m}"]
    out.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(out) + "\n"
