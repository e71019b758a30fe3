"""Graphs, shortest-path distances and reply-compatibility sets.

Vertices are dense integer ids ``0..n-1``.  Edges are stored normalized as
``(u, v, length)`` with ``u < v`` and sorted lexicographically, so that the
position of an edge in :attr:`Graph.edges` doubles as its tie-break rank.
"""

from __future__ import annotations

import heapq
import json
import math
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "GraphError",
    "MalformedGraphError",
    "DuplicateEdgeError",
    "DisconnectedGraphError",
    "NonPositiveWeightError",
    "Graph",
    "DistanceMatrix",
    "VertexQuery",
    "EdgeQuery",
    "GraphSpace",
    "parse_graph",
    "format_graph",
    "graph_to_json",
    "graph_from_json",
    "all_pairs_distances",
    "compatible_mask",
    "compatible_set",
    "generate_graph",
    "GRAPH_KINDS",
]

WEIGHT_TOL = 1e-9


class GraphError(ValueError):
    """Base class for invalid graph input."""


class MalformedGraphError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class NonPositiveWeightError(GraphError):
    pass


class VertexQuery(NamedTuple):
    vertex: int

    kind = "vertex"

    def __str__(self):
        return str(self.vertex)


class EdgeQuery(NamedTuple):
    u: int
    v: int

    kind = "edge"

    def __str__(self):
        return f"{self.u}-{self.v}"


class Graph:
    """Connected undirected graph with positive edge lengths.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : sequence of (u, v) or (u, v, length)
        Missing lengths default to 1.

    Raises
    ------
    MalformedGraphError, DuplicateEdgeError, NonPositiveWeightError,
    DisconnectedGraphError
    """

    def __init__(self, n: int, edges: Sequence[Sequence[float]]):
        if n < 1:
            raise MalformedGraphError(f"vertex count must be >= 1, got {n}")
        self.n = int(n)
        seen = {}
        for e in edges:
            if len(e) not in (2, 3):
                raise MalformedGraphError(f"edge {tuple(e)!r} must be (u, v) or (u, v, w)")
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) == 3 else 1.0
            if not (0 <= u < n and 0 <= v < n):
                raise MalformedGraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise MalformedGraphError(f"self-loop at vertex {u}")
            if not w > 0 or not math.isfinite(w):
                raise NonPositiveWeightError(f"edge ({u}, {v}) has non-positive length {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge {key}")
            seen[key] = w
        self.edges = tuple((u, v, w) for (u, v), w in sorted(seen.items()))
        self._length = seen
        adj = [[] for _ in range(n)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)
        self._neighbor_sets = tuple(frozenset(a) for a in self.adjacency)
        self.edge_index = {(u, v): i for i, (u, v, _) in enumerate(self.edges)}
        if n > 1:
            ncomp, _ = connected_components(self._csr(), directed=False)
            if ncomp != 1:
                raise DisconnectedGraphError(f"graph has {ncomp} connected components")

    def _csr(self) -> csr_matrix:
        m = len(self.edges)
        rows = np.fromiter((e[0] for e in self.edges), dtype=np.int64, count=m)
        cols = np.fromiter((e[1] for e in self.edges), dtype=np.int64, count=m)
        vals = np.fromiter((e[2] for e in self.edges), dtype=np.float64, count=m)
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def length(self, u: int, v: int) -> float:
        return self._length[(min(u, v), max(u, v))]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._neighbor_sets[u]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    @cached_property
    def is_unit(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    @cached_property
    def integral(self) -> bool:
        return all(float(w).is_integer() for _, _, w in self.edges)

    @cached_property
    def is_tree(self) -> bool:
        return self.m == self.n - 1

    @cached_property
    def is_path(self) -> bool:
        return self.is_tree and self.max_degree <= 2

    @cached_property
    def is_bipartite(self) -> bool:
        color = [-1] * self.n
        color[0] = 0
        stack = [0]
        while stack:
            x = stack.pop()
            for y in self.adjacency[x]:
                if color[y] < 0:
                    color[y] = 1 - color[x]
                    stack.append(y)
                elif color[y] == color[x]:
                    return False
        return True

    @cached_property
    def distances(self) -> "DistanceMatrix":
        return all_pairs_distances(self)

    def unit(self) -> "Graph":
        """Same topology with every length set to 1."""
        return Graph(self.n, [(u, v) for u, v, _ in self.edges])


def all_pairs_distances(g: Graph) -> "DistanceMatrix":
    """Exact shortest-path lengths (BFS for unit lengths, Dijkstra otherwise)."""
    if g.n == 1:
        return DistanceMatrix(g, np.zeros((1, 1)))
    d = shortest_path(g._csr(), directed=False, unweighted=g.is_unit,
                      method="D")
    return DistanceMatrix(g, np.ascontiguousarray(d))


class DistanceMatrix:
    """Shortest-path lengths plus the potential evaluations built on them.

    ``d[u, v]`` is the vertex distance; :attr:`edge_d` holds the edge-vertex
    distance ``min(d(x, v), d(y, v))`` for every edge ``{x, y}``.
    """

    def __init__(self, graph: Graph, d: np.ndarray):
        self.graph = graph
        self.d = d
        self.d.setflags(write=False)
        self.tol = 0.0 if graph.integral else WEIGHT_TOL

    def __getitem__(self, idx):
        return self.d[idx]

    def edge_distance(self, edge: tuple[int, int], v: int) -> float:
        x, y = edge
        return min(self.d[x, v], self.d[y, v])

    @cached_property
    def edge_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.graph
        xs = np.array([e[0] for e in g.edges], dtype=np.int64)
        ys = np.array([e[1] for e in g.edges], dtype=np.int64)
        return xs, ys

    @cached_property
    def edge_d(self) -> np.ndarray:
        xs, ys = self.edge_endpoints
        return np.minimum(self.d[xs], self.d[ys])

    @cached_property
    def int_d(self) -> np.ndarray:
        """Object-dtype integer distances for exact arithmetic."""
        if not self.graph.integral:
            raise ValueError("exact mode needs integer edge lengths")
        return np.array([[int(x) for x in row] for row in self.d], dtype=object)

    @cached_property
    def int_edge_d(self) -> np.ndarray:
        return np.array([[int(x) for x in row] for row in self.edge_d], dtype=object)

    # -- potentials -----------------------------------------------------
    @cached_property
    def _path_layout(self):
        g = self.graph
        ends = [v for v in range(g.n) if g.degree(v) <= 1]
        order = [ends[0]]
        prev = -1
        while len(order) < g.n:
            x = order[-1]
            nxt = [y for y in g.adjacency[x] if y != prev]
            prev = x
            order.append(nxt[0])
        order = np.array(order, dtype=np.int64)
        pos = self.d[order[0], order]
        return order, pos

    @cached_property
    def _tree_layout(self):
        # A[v, x] = 1 iff x lies on the root->v path (root excluded).
        g = self.graph
        parent = [-1] * g.n
        order = [0]
        for x in order:
            for y in g.adjacency[x]:
                if y != parent[x] and y != 0:
                    parent[y] = x
                    order.append(y)
        rows, cols = [], []
        anc = {0: ()}
        for x in order[1:]:
            chain = anc[parent[x]] + (x,)
            anc[x] = chain
            rows.extend([x] * len(chain))
            cols.extend(chain)
        if len(rows) > g.n * g.n // 6:
            return None
        a = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))
        pw = np.zeros(g.n)
        for x in order[1:]:
            pw[x] = g.length(x, parent[x])
        return a, a.T.tocsr(), pw, self.d[0].copy()

    def vertex_potentials(self, w: np.ndarray) -> np.ndarray:
        """``Phi(v) = sum_u w(u) d(v, u)`` for every vertex."""
        g = self.graph
        if w.dtype == object:
            return self.int_d.dot(w)
        if g.n > 2 and g.is_path:
            order, pos = self._path_layout
            ws = w[order]
            cw = np.cumsum(ws)
            cwp = np.cumsum(ws * pos)
            total, total_p = cw[-1], cwp[-1]
            phi_sorted = pos * cw - cwp + (total_p - cwp) - pos * (total - cw)
            phi = np.empty_like(phi_sorted)
            phi[order] = phi_sorted
            return phi
        if g.n > 16 and g.is_tree:
            layout = self._tree_layout
            if layout is not None:
                a, at, pw, droot = layout
                sub = at @ w
                c = pw * (w.sum() - 2.0 * sub)
                return float(w @ droot) + a @ c
        return self.d @ w

    def edge_potentials(self, w: np.ndarray) -> np.ndarray:
        """``Psi(e) = sum_u w(u) d(e, u)`` for every edge, in edge order."""
        g = self.graph
        if w.dtype == object:
            return self.int_edge_d.dot(w)
        if g.is_unit and g.is_bipartite:
            # No ties across an edge: min(a, b) = (a + b - 1) / 2.
            phi = self.vertex_potentials(w)
            xs, ys = self.edge_endpoints
            return 0.5 * (phi[xs] + phi[ys] - w.sum())
        return self.edge_d @ w


def compatible_mask(g: Graph, d: DistanceMatrix, query, reply: int,
                    strict: bool = False) -> np.ndarray:
    """Boolean mask of vertices consistent with ``reply`` to ``query``.

    For a vertex query ``q`` the reply ``q`` is the yes-answer; any
    neighbor ``u`` selects ``N(q, u)``.  For an edge query ``{u, v}`` the
    reply ``v`` selects ``N(e, v)`` (``N_<(e, v)`` when ``strict``).
    """
    dm = d.d
    if query.kind == "vertex":
        q = query.vertex
        if reply == q:
            mask = np.zeros(g.n, dtype=bool)
            mask[q] = True
            return mask
        if not g.has_edge(q, reply):
            raise ValueError(f"reply {reply} is not adjacent to queried vertex {q}")
        w = g.length(q, reply)
        if d.tol == 0.0:
            return dm[reply] + w == dm[q]
        return np.abs(dm[reply] + w - dm[q]) <= d.tol
    u, v = query
    if reply == u:
        other = v
    elif reply == v:
        other = u
    else:
        raise ValueError(f"reply {reply} is not an endpoint of edge {tuple(query)}")
    if strict:
        return dm[reply] < dm[other] - d.tol
    return dm[reply] <= dm[other] + d.tol


def compatible_set(g: Graph, d: DistanceMatrix, query, reply: int,
                   strict: bool = False) -> frozenset:
    return frozenset(np.flatnonzero(compatible_mask(g, d, query, reply, strict)).tolist())


class GraphSpace:
    """Query/reply rules of a finite graph, shared by strategies and responders."""

    def __init__(self, graph: Graph, dist: DistanceMatrix | None = None):
        self.graph = graph
        self.dist = dist if dist is not None else graph.distances
        self.n = graph.n

    def replies(self, query) -> tuple:
        if query.kind == "vertex":
            q = query.vertex
            return (q,) + self.graph.adjacency[q]
        return (query.u, query.v)

    def is_legal(self, query, reply) -> bool:
        if query.kind == "vertex":
            return reply == query.vertex or self.graph.has_edge(query.vertex, reply)
        return reply == query.u or reply == query.v

    def truthful_replies(self, query, target: int) -> tuple:
        dm = self.dist.d
        tol = self.dist.tol
        if query.kind == "vertex":
            q = query.vertex
            if q == target:
                return (q,)
            g = self.graph
            dq = dm[q, target]
            return tuple(u for u in g.adjacency[q]
                         if abs(dm[u, target] + g.length(q, u) - dq) <= tol)
        u, v = query
        du, dv = dm[u, target], dm[v, target]
        if du < dv - tol:
            return (u,)
        if dv < du - tol:
            return (v,)
        return (u, v)

    def compatible(self, query, reply, strict: bool = False) -> np.ndarray:
        return compatible_mask(self.graph, self.dist, query, reply, strict)

    def shadow(self, gamma):
        """Weight state an adversary uses to score its replies."""
        from .responders import GraphShadow
        return GraphShadow(self, gamma)


# -- text / JSON formats --------------------------------------------------

def parse_graph(text: str) -> Graph:
    """Parse an edge-list document: header ``n m`` then ``m`` lines ``u v [w]``.

    Blank lines and ``#`` comments are ignored.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if s:
            lines.append((lineno, s.split()))
    if not lines:
        raise MalformedGraphError("empty document")
    lineno, head = lines[0]
    if len(head) != 2:
        raise MalformedGraphError(f"line {lineno}: header must be 'n m'")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise MalformedGraphError(f"line {lineno}: header must be two integers") from None
    if n < 1 or m < 0:
        raise MalformedGraphError(f"line {lineno}: bad header values n={n} m={m}")
    body = lines[1:]
    if len(body) != m:
        raise MalformedGraphError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for lineno, tok in body:
        if len(tok) not in (2, 3):
            raise MalformedGraphError(f"line {lineno}: expected 'u v [w]'")
        try:
            u, v = int(tok[0]), int(tok[1])
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError:
            raise MalformedGraphError(f"line {lineno}: non-numeric field") from None
        edges.append((u, v, w))
    return Graph(n, edges)


def _fmt_len(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def format_graph(g: Graph) -> str:
    out = [f"{g.n} {g.m}"]
    for u, v, w in g.edges:
        out.append(f"{u} {v}" if w == 1.0 else f"{u} {v} {_fmt_len(w)}")
    return "\n".join(out) + "\n"


def graph_to_json(g: Graph) -> str:
    edges = [[u, v, int(w) if float(w).is_integer() else w] for u, v, w in g.edges]
    return json.dumps({"n": g.n, "edges": edges})


def graph_from_json(text: str) -> Graph:
    obj = json.loads(text)
    try:
        return Graph(obj["n"], [tuple(e) for e in obj["edges"]])
    except (KeyError, TypeError) as exc:
        raise MalformedGraphError(f"bad JSON graph: {exc}") from None


# -- generators -----------------------------------------------------------

GRAPH_KINDS = ("path", "cycle", "star", "random-tree", "grid", "random-connected")


def _prufer_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def _bounded_tree(n: int, max_degree: int, rng: np.random.Generator):
    if max_degree < 2 and n > 2:
        raise ValueError("max_degree must be >= 2 for trees with more than 2 vertices")
    degree = [0] * n
    open_ = [0]
    edges = []
    for v in range(1, n):
        i = int(rng.integers(len(open_)))
        u = open_[i]
        edges.append((u, v))
        degree[u] += 1
        degree[v] += 1
        if degree[u] >= max_degree:
            open_[i] = open_[-1]
            open_.pop()
        open_.append(v)
    return edges


def generate_graph(kind: str, seed: int = 0, *, n: int | None = None,
                   leaves: int | None = None, rows: int | None = None,
                   cols: int | None = None, p: float = 0.1,
                   max_degree: int | None = None,
                   weights: tuple[int, int] | None = None) -> Graph:
    """Build a graph from a named family; deterministic in ``(kind, params, seed)``.

    ``weights=(lo, hi)`` draws integer lengths uniformly from ``lo..hi``.
    """
    rng = np.random.default_rng(seed)

    def need(x, name, lo=1):
        if x is None or int(x) < lo:
            raise ValueError(f"{kind} needs {name} >= {lo}")
        return int(x)

    if kind == "path":
        n = need(n, "n")
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        n = need(n, "n", 3)
        pairs = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "star":
        k = need(leaves, "leaves")
        n = k + 1
        pairs = [(0, i) for i in range(1, n)]
    elif kind == "random-tree":
        n = need(n, "n")
        if n == 1:
            pairs = []
        elif max_degree is not None:
            pairs = _bounded_tree(n, int(max_degree), rng)
        else:
            pairs = _prufer_tree(n, rng)
    elif kind == "grid":
        r, c = need(rows, "rows"), need(cols, "cols")
        n = r * c
        pairs = []
        for i in range(r):
            for j in range(c):
                v = i * c + j
                if j + 1 < c:
                    pairs.append((v, v + 1))
                if i + 1 < r:
                    pairs.append((v, v + c))
    elif kind == "random-connected":
        n = need(n, "n")
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        pairs = _prufer_tree(n, rng) if n > 1 else []
        present = {(min(a, b), max(a, b)) for a, b in pairs}
        iu, ju = np.triu_indices(n, k=1)
        coins = rng.random(iu.size)
        for a, b, c in zip(iu.tolist(), ju.tolist(), coins.tolist()):
            if c < p and (a, b) not in present:
                present.add((a, b))
        pairs = sorted(present)
    else:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")

    if weights is not None:
        lo, hi = int(weights[0]), int(weights[1])
        if lo < 1 or hi < lo:
            raise ValueError("weights must be a range lo..hi with 1 <= lo <= hi")
        ws = rng.integers(lo, hi + 1, size=len(pairs)).tolist()
        return Graph(n, [(a, b, w) for (a, b), w in zip(pairs, ws)])
    return Graph(n, pairs)
