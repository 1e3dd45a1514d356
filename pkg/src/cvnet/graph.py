"""Network topologies, gate rounds (edge colourings), cuts and conductance."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected simple graph with optional integer coordinates.

    Vertices are indexed ``0..n-1``; for Cartesian lattices the index order is
    row-major in the coordinates, so outputs are reproducible.
    """

    adjacency: np.ndarray
    coords: np.ndarray | None = None
    dim: int = 0
    side: int | None = None

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=np.int8)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(A != A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A)):
            raise ValueError("self-edges are not allowed in the base graph")
        if np.any((A != 0) & (A != 1)):
            raise ValueError("adjacency entries must be 0/1")
        object.__setattr__(self, "adjacency", A)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=int)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != A.shape[0]:
                raise ValueError("one coordinate tuple per vertex required")
            object.__setattr__(self, "coords", c)

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """Edges as an ``(|E|, 2)`` array with ``u < v``, lexicographically sorted."""
        u, v = np.nonzero(np.triu(self.adjacency, 1))
        return np.stack([u, v], axis=1)

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(int)

    def neighbors(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[x])

    def is_connected(self) -> bool:
        n = self.n_vertices
        if n == 0:
            return False
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = np.array([0])
        while frontier.size:
            nxt = np.flatnonzero(self.adjacency[frontier].any(axis=0) & ~seen)
            seen[nxt] = True
            frontier = nxt
        return bool(seen.all())

    def require_connected(self):
        if not self.is_connected():
            raise ValueError("graph is disconnected; equilibrium analyses need a connected graph")

    @property
    def is_cartesian(self) -> bool:
        return self.dim >= 1 and self.side is not None

    def index_of(self, coord) -> int:
        """Vertex index of a coordinate tuple (Cartesian graphs) or pass through an int."""
        if self.coords is None:
            return int(coord)
        c = np.atleast_1d(np.asarray(coord, dtype=int))
        hit = np.flatnonzero(np.all(self.coords == c, axis=1))
        if hit.size != 1:
            raise KeyError(f"no vertex at coordinate {tuple(c.tolist())}")
        return int(hit[0])

    def center(self) -> int:
        if self.coords is None:
            return self.n_vertices // 2
        return self.index_of(np.zeros(self.coords.shape[1], dtype=int))


@dataclass(frozen=True)
class EdgeColoring:
    """Partition of the edges into ``K`` matchings, applied in order.

    ``rounds[k]`` is an ``(n_k, 2)`` integer array of edges.
    """

    rounds: tuple
    n_vertices: int
    _loops: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rounds = tuple(np.asarray(r, dtype=int).reshape(-1, 2) for r in self.rounds)
        object.__setattr__(self, "rounds", rounds)
        loops = []
        for k, r in enumerate(rounds):
            flat = r.ravel()
            if flat.size != np.unique(flat).size:
                raise ValueError(f"round {k + 1} is not a matching")
            covered = np.zeros(self.n_vertices, dtype=bool)
            covered[flat] = True
            loops.append(np.flatnonzero(~covered))
        object.__setattr__(self, "_loops", tuple(loops))

    @property
    def K(self) -> int:
        return len(self.rounds)

    def loops(self, k: int) -> np.ndarray:
        """Vertices idle in round ``k`` (0-based); they carry a self-loop."""
        return self._loops[k]

    def round_adjacency(self, k: int) -> np.ndarray:
        """Adjacency of round ``k`` with ones on the diagonal for idle vertices."""
        A = np.zeros((self.n_vertices, self.n_vertices))
        e = self.rounds[k]
        A[e[:, 0], e[:, 1]] = 1.0
        A[e[:, 1], e[:, 0]] = 1.0
        idle = self._loops[k]
        A[idle, idle] = 1.0
        return A

    @property
    def max_round_size(self) -> int:
        return max((len(r) for r in self.rounds), default=0)

    def validate_against(self, graph: NetworkGraph):
        """Check that the rounds are disjoint and cover exactly the graph's edges."""
        all_edges = [tuple(sorted(e)) for r in self.rounds for e in r.tolist()]
        if len(all_edges) != len(set(all_edges)):
            raise ValueError("rounds are not disjoint")
        if set(all_edges) != set(map(tuple, graph.edges.tolist())):
            raise ValueError("rounds do not cover the graph's edges")


def cartesian_lattice(D: int, M: int):
    """``D``-dimensional grid with side ``M = 2N+1`` and coordinates in ``[-N, N]``.

    The colouring has ``K = 2D`` rounds: for each axis in order, first the bonds
    whose lower end has even offset ``x_d + N``, then the odd ones.

    Returns:
        tuple: ``(NetworkGraph, EdgeColoring)``.
    """
    if D < 1:
        raise ValueError("dimension must be >= 1")
    if M < 3 or M % 2 == 0:
        raise ValueError(f"side length M must be odd and >= 3, got {M}")
    N = (M - 1) // 2
    axes = [np.arange(-N, N + 1)] * D
    coords = np.array(list(itertools.product(*axes)), dtype=int)
    n = coords.shape[0]
    strides = np.array([M ** (D - 1 - d) for d in range(D)])
    A = np.zeros((n, n), dtype=np.int8)
    rounds = []
    for d in range(D):
        for parity in (0, 1):
            lower = np.flatnonzero((coords[:, d] < N) & ((coords[:, d] + N) % 2 == parity))
            upper = lower + strides[d]
            rounds.append(np.stack([lower, upper], axis=1))
            A[lower, upper] = 1
            A[upper, lower] = 1
    graph = NetworkGraph(A, coords=coords, dim=D, side=M)
    return graph, EdgeColoring(tuple(rounds), n)


def path_graph(n: int):
    """Open chain of ``n`` vertices (any ``n >= 2``) with alternating bond rounds.

    Coordinates run ``-(n//2) .. n-1-n//2``. This covers even lengths, which
    :func:`cartesian_lattice` rejects.
    """
    if n < 2:
        raise ValueError("a path needs at least two vertices")
    A = np.zeros((n, n), dtype=np.int8)
    idx = np.arange(n - 1)
    A[idx, idx + 1] = 1
    A[idx + 1, idx] = 1
    rounds = tuple(np.stack([idx[p::2], idx[p::2] + 1], axis=1) for p in (0, 1))
    graph = NetworkGraph(A, coords=np.arange(n) - n // 2, dim=1, side=n)
    return graph, EdgeColoring(rounds, n)


def greedy_edge_coloring(graph: NetworkGraph) -> EdgeColoring:
    """Proper edge colouring by first-fit over lexicographically ordered edges."""
    used: list[set] = []
    rounds: list[list] = []
    for u, v in graph.edges.tolist():
        for k, verts in enumerate(used):
            if u not in verts and v not in verts:
                verts.update((u, v))
                rounds[k].append((u, v))
                break
        else:
            used.append({u, v})
            rounds.append([(u, v)])
    return EdgeColoring(tuple(np.array(r, dtype=int) for r in rounds), graph.n_vertices)


def _as_mask(graph: NetworkGraph, L) -> np.ndarray:
    L = np.asarray(L)
    if L.dtype == bool:
        mask = L.copy()
    else:
        mask = np.zeros(graph.n_vertices, dtype=bool)
        mask[L.astype(int)] = True
    return mask


def boundary_sets(graph: NetworkGraph, L):
    """Inner boundary, outer boundary and crossing edges of the cut ``(L, G\\L)``.

    Returns:
        tuple: ``(inner, outer, cut_edges)`` as sorted index arrays and an
        ``(n, 2)`` edge array.
    """
    mask = _as_mask(graph, L)
    if not mask.any() or mask.all():
        raise ValueError("subsystem must be a nonempty proper subset")
    A = graph.adjacency.astype(bool)
    inner = np.flatnonzero(mask & A[:, ~mask].any(axis=1))
    outer = np.flatnonzero(~mask & A[:, mask].any(axis=1))
    e = graph.edges
    cross = mask[e[:, 0]] != mask[e[:, 1]]
    return inner, outer, e[cross]


@dataclass(frozen=True)
class ConductanceResult:
    value: float
    cut: np.ndarray
    exact: bool

    @property
    def upper_bound(self) -> bool:
        return not self.exact


def _cut_ratio(n_cross, size_l, n, n_edges):
    return n_cross * n**2 / (2.0 * n_edges * size_l * (n - size_l))


def _exact_conductance(graph: NetworkGraph) -> ConductanceResult:
    n = graph.n_vertices
    e = graph.edges
    best, best_mask = np.inf, None
    # vertex n-1 is fixed in R, which enumerates each cut once
    total = 1 << (n - 1)
    bits = np.arange(n - 1, dtype=np.int64)
    chunk = 1 << 16
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        member = ((masks[:, None] >> bits[None, :]) & 1).astype(bool)
        member = np.concatenate([member, np.zeros((masks.size, 1), dtype=bool)], axis=1)
        size_l = member.sum(axis=1)
        n_cross = (member[:, e[:, 0]] != member[:, e[:, 1]]).sum(axis=1)
        ratio = _cut_ratio(n_cross, size_l, n, graph.n_edges)
        i = int(np.argmin(ratio))
        if ratio[i] < best:
            best, best_mask = float(ratio[i]), member[i]
    return ConductanceResult(best, np.flatnonzero(best_mask), True)


def _heuristic_conductance(graph: NetworkGraph, rng: np.random.Generator,
                           restarts: int = 200, sweeps: int = 5) -> ConductanceResult:
    n = graph.n_vertices
    A = graph.adjacency.astype(float)
    n_edges = graph.n_edges
    e = graph.edges
    nbrs = [np.flatnonzero(A[x]).tolist() for x in range(n)]

    def sweep(order):
        # crossing-edge count of every prefix of ``order`` in one pass
        pos = np.empty(n, dtype=int)
        pos[order] = np.arange(n)
        lo = np.minimum(pos[e[:, 0]], pos[e[:, 1]])
        hi = np.maximum(pos[e[:, 0]], pos[e[:, 1]])
        diff = np.zeros(n + 1)
        np.add.at(diff, lo + 1, 1.0)
        np.add.at(diff, hi + 1, -1.0)
        cross = np.cumsum(diff)[1:n]
        ratio = _cut_ratio(cross, np.arange(1, n), n, n_edges)
        i = int(np.argmin(ratio))
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(order)[: i + 1]] = True
        return float(ratio[i]), mask, int(cross[i])

    best, best_mask = np.inf, None
    lap = np.diag(A.sum(axis=1)) - A
    _, vecs = np.linalg.eigh(lap)
    for vec in (vecs[:, 1], -vecs[:, 1]):
        val, mask, _ = sweep(np.argsort(vec, kind="stable"))
        if val < best:
            best, best_mask = val, mask

    for _ in range(restarts):
        # breadth-first ball from a random root, then annealed single-vertex flips
        root = int(rng.integers(n))
        order, seen, frontier = [root], {root}, [root]
        while frontier:
            nxt = [y for x in frontier for y in nbrs[x] if not (y in seen or seen.add(y))]
            rng.shuffle(nxt)
            order.extend(nxt)
            frontier = nxt
        order.extend(i for i in range(n) if i not in seen)
        val, mask, cross = sweep(order)
        side = mask.tolist()
        size = int(mask.sum())
        cur = val
        temp = 0.1 * cur
        for _ in range(sweeps * n):
            x = int(rng.integers(n))
            same = sum(1 for y in nbrs[x] if side[y] == side[x])
            new_cross = cross + same - (len(nbrs[x]) - same)
            new_size = size - 1 if side[x] else size + 1
            if new_size == 0 or new_size == n:
                continue
            new = _cut_ratio(new_cross, new_size, n, n_edges)
            if new <= cur or rng.random() < np.exp(-(new - cur) / max(temp, 1e-300)):
                side[x] = not side[x]
                cross, size, cur = new_cross, new_size, new
                if cur < best:
                    best, best_mask = cur, np.array(side)
            temp *= 0.99
    return ConductanceResult(best, np.flatnonzero(best_mask), False)


def conductance(graph: NetworkGraph, mode: str = "auto", rng: np.random.Generator | None = None,
                restarts: int = 200) -> ConductanceResult:
    """Graph conductance ``min_L |dL| |G|^2 / (2 |E| |L| |R|)``.

    ``mode="exact"`` enumerates all cuts (only for ``|G| <= 20``);
    ``mode="heuristic"`` returns an upper bound from spectral sweeps plus
    seeded annealing restarts; ``"auto"`` picks exact when feasible.
    """
    graph.require_connected()
    n = graph.n_vertices
    if mode == "auto":
        mode = "exact" if n <= 20 else "heuristic"
    if mode == "exact":
        if n > 20:
            raise ValueError("exact conductance is limited to |G| <= 20")
        return _exact_conductance(graph)
    if mode == "heuristic":
        return _heuristic_conductance(graph, rng or np.random.default_rng(0), restarts=restarts)
    raise ValueError(f"unknown conductance mode {mode!r}")


def write_edge_list(path, graph: NetworkGraph):
    """Write ``D M`` (Cartesian) or ``generic |G|`` followed by ``u v`` lines."""
    lines = []
    if graph.is_cartesian and graph.side % 2 == 1:
        lines.append(f"{graph.dim} {graph.side}")
    else:
        lines.append(f"generic {graph.n_vertices}")
    lines.extend(f"{u} {v}" for u, v in graph.edges.tolist())
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_edge_list(path):
    """Read an edge-list file.

    Returns:
        tuple: ``(NetworkGraph, EdgeColoring)``. Cartesian headers rebuild the
        lattice with its parity colouring (and check the listed edges); generic
        graphs get a greedy colouring.
    """
    rows = [ln.split() for ln in Path(path).read_text().splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty edge list")
    head = rows[0]
    edges = np.array([[int(a), int(b)] for a, b in rows[1:]], dtype=int).reshape(-1, 2)
    if head[0] == "generic":
        n = int(head[1])
        A = np.zeros((n, n), dtype=np.int8)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"{path}: vertex index out of range")
        A[edges[:, 0], edges[:, 1]] = 1
        A[edges[:, 1], edges[:, 0]] = 1
        g = NetworkGraph(A)
        return g, greedy_edge_coloring(g)
    D, M = int(head[0]), int(head[1])
    g, col = cartesian_lattice(D, M)
    listed = {tuple(sorted(e)) for e in edges.tolist()}
    if listed != set(map(tuple, g.edges.tolist())):
        raise ValueError(f"{path}: edges do not match the {D}-D lattice of side {M}")
    return g, col
