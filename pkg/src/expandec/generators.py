"""Seeded graph generators and planted-structure instances for tests and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, Infeasible
from .graph import Graph, edge_key


@dataclass(frozen=True)
class GraphSpec:
    family: str
    params: tuple = ()
    seed: int = 0


def parse_spec(text: str, seed: int = 0) -> GraphSpec:
    """Parse `family:arg1:arg2...`, e.g. `barbell:8:1` or `erdos_renyi:100:0.5`."""
    parts = text.split(":")
    family = parts[0]
    args = []
    for p in parts[1:]:
        try:
            args.append(int(p))
        except ValueError:
            try:
                args.append(float(p))
            except ValueError as exc:
                raise FormatError(f"bad spec argument {p!r}") from exc
    return GraphSpec(family, tuple(args), seed)


def clique(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(v, (v + 1) % n) for v in range(n)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(v, v + 1) for v in range(n - 1)])


def star(n: int) -> Graph:
    """Star with n leaves (n+1 vertices, center 0)."""
    return Graph.from_edges(n + 1, [(0, v) for v in range(1, n + 1)])


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def barbell(c: int, bridges: int = 1) -> Graph:
    """Two c-cliques joined by `bridges` disjoint-endpoint edges."""
    if bridges > c:
        raise Infeasible(f"{bridges} bridges need {bridges} endpoints per side of {c}")
    edges = [(u, v) for u in range(c) for v in range(u + 1, c)]
    edges += [(c + u, c + v) for u in range(c) for v in range(u + 1, c)]
    edges += [(i, c + i) for i in range(bridges)]
    return Graph.from_edges(2 * c, edges)


def cliques_chain(count: int, size: int, bridges: int = 1) -> Graph:
    if bridges > size:
        raise Infeasible("more bridges than clique vertices")
    edges = []
    for i in range(count):
        base = i * size
        edges += [(base + u, base + v) for u in range(size) for v in range(u + 1, size)]
        if i + 1 < count:
            # Stagger junction endpoints so consecutive bridges stay disjoint.
            for j in range(bridges):
                edges.append((base + size - 1 - j, base + size + j))
    return Graph.from_edges(count * size, edges)


def erdos_renyi(n: int, p: float, seed: int = 0) -> Graph:
    rng = np.random.default_rng([seed, 0xE4D05])
    upper = np.triu(rng.random((n, n)) < p, k=1)
    us, vs = np.nonzero(upper)
    return Graph.from_edges(n, list(zip(us.tolist(), vs.tolist())))


def random_regular(n: int, r: int, seed: int = 0, attempts: int = 2000) -> Graph:
    """Configuration model with whole-sample rejection of loops and multi-edges."""
    if n * r % 2 == 1:
        raise Infeasible(f"n*r = {n * r} is odd")
    if r >= n:
        raise Infeasible(f"degree {r} needs at least {r + 1} vertices")
    rng = np.random.default_rng([seed, 0x4E9])
    stubs = np.repeat(np.arange(n), r)
    for _ in range(attempts):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        seen = set()
        ok = True
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                ok = False
                break
            k = edge_key(u, v)
            if k in seen:
                ok = False
                break
            seen.add(k)
        if ok:
            return Graph.from_edges(n, sorted(seen))
    raise Infeasible(f"no simple {r}-regular pairing found in {attempts} attempts")


_FAMILIES = {
    "clique": clique,
    "cycle": cycle,
    "path": path,
    "star": star,
    "grid": grid,
    "barbell": barbell,
    "cliques_chain": cliques_chain,
}


def generate(spec: GraphSpec | str, seed: int | None = None) -> Graph:
    """Build the graph for a spec; deterministic for a given (spec, seed)."""
    if isinstance(spec, str):
        spec = parse_spec(spec, seed if seed is not None else 0)
    use_seed = spec.seed if seed is None else seed
    if spec.family in _FAMILIES:
        return _FAMILIES[spec.family](*[int(a) for a in spec.params])
    if spec.family == "erdos_renyi":
        n, p = spec.params
        return erdos_renyi(int(n), float(p), use_seed)
    if spec.family == "random_regular":
        n, r = spec.params
        return random_regular(int(n), int(r), use_seed)
    raise FormatError(f"unknown family {spec.family!r}")
