"""Graph types for causal structures: DAGs, PDAGs/CPDAGs and PAGs.

Nodes are the integers ``0 .. n-1`` (the column index of the originating
dataset).  Optional ``names`` are carried only for display and serialization.
All graph values are immutable; algorithms work on numpy adjacency matrices and
convert at the boundaries.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or unknown node identifiers."""


class CycleError(GraphError):
    pass


class InconsistentOrientation(GraphError):
    """An orientation rule would create a directed cycle or a new unshielded collider."""


class Mark(str, enum.Enum):
    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"


# integer codes used in PAG mark matrices: M[i, j] is the mark at j on edge i *-* j
NO_EDGE, CIRCLE, ARROW, TAIL = 0, 1, 2, 3
_MARK_CODE = {Mark.CIRCLE: CIRCLE, Mark.ARROW: ARROW, Mark.TAIL: TAIL}
_CODE_MARK = {v: k for k, v in _MARK_CODE.items()}


def _check_names(n: int, names: Sequence[str] | None) -> tuple[str, ...]:
    if names is None:
        return tuple(f"X{i}" for i in range(n))
    names = tuple(str(s) for s in names)
    if len(names) != n:
        raise GraphError(f"expected {n} node names, got {len(names)}")
    if len(set(names)) != n:
        raise GraphError("node names must be unique")
    return names


def _check_node(n: int, v) -> int:
    if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
        raise GraphError(f"node identifier must be an integer index, got {v!r}")
    if not 0 <= v < n:
        raise GraphError(f"unknown node {v!r} (graph has {n} nodes)")
    return int(v)


def topological_order(n: int, edges: Iterable[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm with smallest-index-first tie breaking; None if cyclic."""
    children = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b in edges:
        children[a].append(b)
        indeg[b] += 1
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return order if len(order) == n else None


def is_acyclic(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    """True iff the directed edge set over ``n`` nodes admits a topological order."""
    edges = list(edges)
    for a, b in edges:
        _check_node(n, a)
        _check_node(n, b)
        if a == b:
            return False
    return topological_order(n, edges) is not None


@dataclass(frozen=True, eq=True)
class Dag:
    """Directed acyclic graph over nodes ``0 .. n-1``."""

    n: int
    edges: frozenset = frozenset()
    names: tuple = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            _check_node(self.n, a)
            _check_node(self.n, b)
            if a == b:
                raise GraphError(f"self-loop at node {a}")
            if (b, a) in edges:
                raise CycleError(f"both {a}->{b} and {b}->{a} present")
        if topological_order(self.n, edges) is None:
            raise CycleError("edge set contains a directed cycle")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "names", _check_names(self.n, self.names))

    @classmethod
    def from_matrix(cls, adj, names=None) -> "Dag":
        adj = np.asarray(adj)
        rows, cols = np.nonzero(adj)
        return cls(adj.shape[0], zip(rows.tolist(), cols.tolist()), names)

    def to_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
        return a

    @cached_property
    def _parents(self) -> tuple[frozenset, ...]:
        pa = [set() for _ in range(self.n)]
        for a, b in self.edges:
            pa[b].add(a)
        return tuple(frozenset(p) for p in pa)

    @cached_property
    def _children(self) -> tuple[frozenset, ...]:
        ch = [set() for _ in range(self.n)]
        for a, b in self.edges:
            ch[a].add(b)
        return tuple(frozenset(c) for c in ch)

    def parents(self, v: int) -> frozenset:
        return self._parents[_check_node(self.n, v)]

    def children(self, v: int) -> frozenset:
        return self._children[_check_node(self.n, v)]

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        return tuple(topological_order(self.n, self.edges))

    def descendants(self, v: int) -> frozenset:
        """Descendants of ``v``, including ``v`` itself."""
        return _reach(self._children, [_check_node(self.n, v)])

    def ancestors(self, vs) -> frozenset:
        """Ancestors of a node or node set, including the nodes themselves."""
        if isinstance(vs, (int, np.integer)):
            vs = [vs]
        return _reach(self._parents, [_check_node(self.n, v) for v in vs])

    def skeleton(self) -> frozenset:
        return frozenset((min(a, b), max(a, b)) for a, b in self.edges)

    def unshielded_colliders(self) -> frozenset:
        """Triples ``(a, c, b)`` with ``a < b``, ``a -> c <- b`` and ``a, b`` nonadjacent."""
        out = set()
        for c in range(self.n):
            for a, b in itertools.combinations(sorted(self._parents[c]), 2):
                if not self.adjacent(a, b):
                    out.add((a, c, b))
        return frozenset(out)

    def to_pdag(self) -> "Pdag":
        return Pdag(self.n, self.edges, (), self.names)

    def __repr__(self):
        e = ", ".join(f"{a}->{b}" for a, b in sorted(self.edges))
        return f"Dag(n={self.n}, {{{e}}})"


def _reach(nbrs, start) -> frozenset:
    seen = set(start)
    stack = list(start)
    while stack:
        v = stack.pop()
        for w in nbrs[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


@dataclass(frozen=True, eq=True)
class Pdag:
    """Partially directed graph: directed pairs plus undirected pairs ``(i, j)``, ``i < j``."""

    n: int
    directed: frozenset = frozenset()
    undirected: frozenset = frozenset()
    names: tuple = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset((min(int(a), int(b)), max(int(a), int(b))) for a, b in self.undirected)
        seen = set()
        for a, b in itertools.chain(directed, undirected):
            _check_node(self.n, a)
            _check_node(self.n, b)
            if a == b:
                raise GraphError(f"self-loop at node {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise GraphError(f"more than one edge between {key[0]} and {key[1]}")
            seen.add(key)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        object.__setattr__(self, "names", _check_names(self.n, self.names))

    @classmethod
    def from_matrix(cls, amat, names=None) -> "Pdag":
        """``amat[i, j] and not amat[j, i]`` is ``i -> j``; both set is ``i - j``."""
        amat = np.asarray(amat, dtype=bool)
        n = amat.shape[0]
        directed, undirected = [], []
        for i, j in zip(*np.nonzero(amat)):
            i, j = int(i), int(j)
            if amat[j, i]:
                if i < j:
                    undirected.append((i, j))
            else:
                directed.append((i, j))
        return cls(n, directed, undirected, names)

    def to_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.directed:
            a[i, j] = True
        for i, j in self.undirected:
            a[i, j] = a[j, i] = True
        return a

    def skeleton(self) -> frozenset:
        return frozenset((min(a, b), max(a, b)) for a, b in self.directed) | self.undirected

    def edge_status(self, a: int, b: int) -> int:
        """0 absent, 1 undirected, 2 for ``a -> b``, 3 for ``b -> a``."""
        if (a, b) in self.directed:
            return 2
        if (b, a) in self.directed:
            return 3
        if (min(a, b), max(a, b)) in self.undirected:
            return 1
        return 0

    def is_dag(self) -> bool:
        return not self.undirected and is_acyclic(self.n, self.directed)

    def to_dag(self) -> Dag:
        if self.undirected:
            raise GraphError("PDAG has undirected edges")
        return Dag(self.n, self.directed, self.names)

    def __repr__(self):
        e = [f"{a}->{b}" for a, b in sorted(self.directed)]
        e += [f"{a}-{b}" for a, b in sorted(self.undirected)]
        return f"Pdag(n={self.n}, {{{', '.join(e)}}})"


@dataclass(frozen=True, eq=True)
class Pag:
    """Partial ancestral graph: edges ``(i, j, mark_at_i, mark_at_j)`` with ``i < j``."""

    n: int
    edges: frozenset = frozenset()
    names: tuple = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        norm = {}
        for i, j, mi, mj in self.edges:
            i, j = _check_node(self.n, i), _check_node(self.n, j)
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            mi, mj = Mark(mi), Mark(mj)
            if i > j:
                i, j, mi, mj = j, i, mj, mi
            if (i, j) in norm:
                raise GraphError(f"more than one edge between {i} and {j}")
            norm[(i, j)] = (mi, mj)
        object.__setattr__(self, "edges", frozenset((i, j, mi, mj) for (i, j), (mi, mj) in norm.items()))
        object.__setattr__(self, "names", _check_names(self.n, self.names))

    @classmethod
    def from_marks(cls, marks, names=None) -> "Pag":
        """Build from an integer mark matrix (``marks[i, j]`` = mark at ``j``)."""
        marks = np.asarray(marks)
        edges = []
        for i, j in zip(*np.nonzero(np.triu(marks))):
            i, j = int(i), int(j)
            if marks[j, i] == NO_EDGE:
                raise GraphError(f"edge {i}-{j} lacks a mark at {i}")
            edges.append((i, j, _CODE_MARK[int(marks[j, i])], _CODE_MARK[int(marks[i, j])]))
        return cls(marks.shape[0], edges, names)

    def to_marks(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j, mi, mj in self.edges:
            m[j, i] = _MARK_CODE[mi]
            m[i, j] = _MARK_CODE[mj]
        return m

    def mark(self, a: int, b: int) -> Mark | None:
        """Mark at ``b`` on the edge between ``a`` and ``b`` (None if nonadjacent)."""
        return _CODE_MARK.get(int(self._marks[a, b]))

    @cached_property
    def _marks(self) -> np.ndarray:
        return self.to_marks()

    def skeleton(self) -> frozenset:
        return frozenset((i, j) for i, j, _, _ in self.edges)

    def to_pdag(self) -> Pdag:
        """Tail-arrow edges become directed; every other mark combination becomes undirected.

        A circle or arrowhead at the source end does not assert that the source causes
        the target, so only ``a -> b`` is kept as a directed claim.
        """
        directed, undirected = [], []
        for i, j, mi, mj in self.edges:
            if mi is Mark.TAIL and mj is Mark.ARROW:
                directed.append((i, j))
            elif mj is Mark.TAIL and mi is Mark.ARROW:
                directed.append((j, i))
            else:
                undirected.append((i, j))
        return Pdag(self.n, directed, undirected, self.names)

    def __repr__(self):
        sym_l = {Mark.TAIL: "-", Mark.ARROW: "<", Mark.CIRCLE: "o"}
        sym_r = {Mark.TAIL: "-", Mark.ARROW: ">", Mark.CIRCLE: "o"}
        e = [f"{i}{sym_l[mi]}-{sym_r[mj]}{j}" for i, j, mi, mj in sorted(self.edges)]
        return f"Pag(n={self.n}, {{{', '.join(e)}}})"


class SepsetMap(dict):
    """Unordered node pair -> separating set recorded when the pair's edge was removed."""

    def __setitem__(self, pair, sepset):
        a, b = pair
        sepset = frozenset(sepset)
        if a in sepset or b in sepset:
            raise GraphError(f"separating set for {pair} contains a pair member")
        super().__setitem__((min(a, b), max(a, b)), sepset)

    def __getitem__(self, pair):
        a, b = pair
        return super().__getitem__((min(a, b), max(a, b)))

    def __contains__(self, pair):
        a, b = pair
        return super().__contains__((min(a, b), max(a, b)))

    def get(self, pair, default=None):
        return self[pair] if pair in self else default


# -- d-separation -----------------------------------------------------------


def d_separated(dag: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """Whether ``x`` and ``y`` are d-separated by ``z`` in ``dag``.

    Uses the reachable-trail search (a trail is active if every collider on it is in
    ``An(z)`` and no non-collider is in ``z``).
    """
    x, y = _check_node(dag.n, x), _check_node(dag.n, y)
    z = frozenset(_check_node(dag.n, v) for v in z)
    if x == y:
        raise GraphError("x and y must differ")
    if x in z or y in z:
        raise GraphError("x and y must not be in the conditioning set")
    anc_z = dag.ancestors(z) if z else frozenset()
    # state: (node, arrived_from_child). Leaving x counts as arriving from a child.
    visited = set()
    queue = deque([(x, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == y:
            return False
        if up:
            if v in z:
                continue
            for p in dag._parents[v]:
                queue.append((p, True))
            for c in dag._children[v]:
                queue.append((c, False))
        else:
            if v not in z:
                for c in dag._children[v]:
                    queue.append((c, False))
            if v in anc_z:
                for p in dag._parents[v]:
                    queue.append((p, True))
    return True


# -- orientation ------------------------------------------------------------


def _has_directed_path(amat: np.ndarray, src: int, dst: int) -> bool:
    """Directed path ``src -> ... -> dst`` using only directed edges of a PDAG matrix."""
    directed = amat & ~amat.T
    seen = {src}
    stack = [src]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(directed[v]):
            w = int(w)
            if w == dst:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _orient(amat: np.ndarray, a: int, b: int, strict: bool) -> bool:
    """Orient undirected ``a - b`` as ``a -> b`` if that is consistent.

    Returns True if oriented.  Inconsistent orientations raise when ``strict`` and
    are skipped otherwise.
    """
    directed = amat & ~amat.T
    adj = amat | amat.T
    problem = None
    for d in np.flatnonzero(directed[:, b]):
        if d != a and not adj[a, d]:
            problem = f"orienting {a}->{b} creates unshielded collider {a}->{b}<-{int(d)}"
            break
    if problem is None and _has_directed_path(amat, b, a):
        problem = f"orienting {a}->{b} creates a directed cycle"
    if problem is not None:
        if strict:
            raise InconsistentOrientation(problem)
        return False
    amat[b, a] = False
    return True


def _meek_inplace(amat: np.ndarray, strict: bool) -> None:
    n = amat.shape[0]
    changed = True
    while changed:
        changed = False
        for a in range(n):
            for b in range(n):
                if not (amat[a, b] and amat[b, a]) or a == b:
                    continue
                # a - b undirected: try each rule for orienting a -> b
                directed = amat & ~amat.T
                adj = amat | amat.T
                fire = False
                # R1: c -> a - b, c and b nonadjacent
                for c in np.flatnonzero(directed[:, a]):
                    if c != b and not adj[c, b]:
                        fire = True
                        break
                # R2: a -> c -> b
                if not fire and np.any(directed[a] & directed[:, b]):
                    fire = True
                # R3: a - c -> b, a - d -> b, c and d nonadjacent
                if not fire:
                    und_a = amat[a] & amat[:, a]
                    cands = np.flatnonzero(und_a & directed[:, b])
                    for c, d in itertools.combinations(cands, 2):
                        if not adj[c, d]:
                            fire = True
                            break
                if fire and _orient(amat, a, b, strict):
                    changed = True


def meek_closure(pdag: Pdag, strict: bool = True) -> Pdag:
    """Apply Meek rules R1-R3 to a fixed point.

    Previously directed edges are never changed.  With ``strict`` an orientation
    that would create a directed cycle or a new unshielded collider raises
    :class:`InconsistentOrientation`; otherwise such orientations are skipped.
    """
    amat = pdag.to_matrix()
    if not is_acyclic(pdag.n, pdag.directed):
        raise InconsistentOrientation("directed part of the PDAG is cyclic")
    _meek_inplace(amat, strict)
    return Pdag.from_matrix(amat, pdag.names)


def dag_to_cpdag(dag: Dag) -> Pdag:
    """CPDAG of the Markov equivalence class of ``dag``."""
    n = dag.n
    amat = np.zeros((n, n), dtype=bool)
    for a, b in dag.skeleton():
        amat[a, b] = amat[b, a] = True
    for a, c, b in dag.unshielded_colliders():
        amat[c, a] = False
        amat[c, b] = False
    _meek_inplace(amat, strict=True)
    return Pdag.from_matrix(amat, dag.names)


def extend_to_dag(pdag: Pdag) -> tuple[Dag, bool]:
    """Consistent DAG extension of a PDAG (Dor and Tarsi sink elimination).

    Returns ``(dag, used_fallback)``.  Candidate sinks are tried in ascending node
    order.  When no consistent extension exists the skeleton is oriented from lower
    to higher index and ``used_fallback`` is True.
    """
    n = pdag.n
    amat = pdag.to_matrix()
    result = amat.copy()
    alive = list(range(n))
    ok = True
    while alive:
        found = None
        for x in alive:
            out = [y for y in alive if amat[x, y] and not amat[y, x]]
            if out:
                continue
            und = [y for y in alive if amat[x, y] and amat[y, x]]
            nbrs = [y for y in alive if y != x and (amat[x, y] or amat[y, x])]
            if all(all(w == y or amat[y, w] or amat[w, y] for w in nbrs) for y in und):
                found = x
                break
        if found is None:
            ok = False
            break
        x = found
        for y in alive:
            if amat[x, y] and amat[y, x]:
                result[x, y] = False
        alive.remove(x)
    if ok:
        return Dag.from_matrix(result, pdag.names), False
    fallback = Dag(n, [(a, b) for a, b in sorted(pdag.skeleton())], pdag.names)
    return fallback, True


# -- Possible-D-SEP ---------------------------------------------------------


def possible_d_sep_marks(marks: np.ndarray, x: int, y: int | None = None) -> frozenset:
    """Possible-D-SEP(x) on an integer mark matrix, excluding ``x`` and ``y``.

    ``v`` qualifies when some path from ``x`` to ``v`` has, at every inner node ``b``
    with path-neighbours ``a`` and ``c``, either ``a *-> b <-* c`` or ``a, b, c`` a
    triangle.
    """
    n = marks.shape[0]
    adj = marks != NO_EDGE
    seen_edges = set()
    queue = deque()
    reached = set()
    for b in np.flatnonzero(adj[x]):
        b = int(b)
        seen_edges.add((x, b))
        queue.append((x, b))
        reached.add(b)
    while queue:
        a, b = queue.popleft()
        for c in np.flatnonzero(adj[b]):
            c = int(c)
            if c == a or (b, c) in seen_edges:
                continue
            collider = marks[a, b] == ARROW and marks[c, b] == ARROW
            if collider or adj[a, c]:
                seen_edges.add((b, c))
                queue.append((b, c))
                reached.add(c)
    reached.discard(x)
    if y is not None:
        reached.discard(y)
    return frozenset(reached)


def possible_d_sep(graph: Pag, x: int, y: int | None = None) -> frozenset:
    """Possible-D-SEP set of ``x`` (minus ``y``) in a partially oriented graph."""
    x = _check_node(graph.n, x)
    if y is not None:
        y = _check_node(graph.n, y)
    return possible_d_sep_marks(graph.to_marks(), x, y)


# -- serialization ----------------------------------------------------------


def graph_to_json(graph: Dag | Pdag | Pag) -> dict:
    """JSON document with ``nodes`` and endpoint-marked ``edges``."""
    edges = []
    if isinstance(graph, Dag):
        for a, b in sorted(graph.edges):
            edges.append({"a": a, "b": b, "mark_a": "tail", "mark_b": "arrow"})
    elif isinstance(graph, Pdag):
        items = [(a, b, "tail", "arrow") for a, b in graph.directed]
        items += [(a, b, "undirected", "undirected") for a, b in graph.undirected]
        for a, b, ma, mb in sorted(items):
            edges.append({"a": a, "b": b, "mark_a": ma, "mark_b": mb})
    elif isinstance(graph, Pag):
        for i, j, mi, mj in sorted(graph.edges):
            edges.append({"a": i, "b": j, "mark_a": mi.value, "mark_b": mj.value})
    else:
        raise TypeError(f"not a graph: {type(graph).__name__}")
    return {"nodes": list(graph.names), "edges": edges}


def graph_from_json(doc: dict | str) -> Dag | Pdag | Pag:
    """Inverse of :func:`graph_to_json`.

    Returns a Dag when every edge is tail-arrow, a Pdag when edges are directed or
    undirected, and a Pag when any circle (or non-directed arrow) mark appears.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    names = doc["nodes"]
    n = len(names)
    directed, undirected, pag_edges = [], [], []
    is_pag = False
    for e in doc["edges"]:
        a, b, ma, mb = int(e["a"]), int(e["b"]), e["mark_a"], e["mark_b"]
        if ma == "undirected" or mb == "undirected":
            if ma != mb:
                raise GraphError(f"edge {a}-{b}: 'undirected' must be used on both ends")
            undirected.append((a, b))
            pag_edges.append((a, b, Mark.TAIL, Mark.TAIL))
            continue
        ma, mb = Mark(ma), Mark(mb)
        pag_edges.append((a, b, ma, mb))
        if ma is Mark.TAIL and mb is Mark.ARROW:
            directed.append((a, b))
        elif ma is Mark.ARROW and mb is Mark.TAIL:
            directed.append((b, a))
        else:
            is_pag = True
    if is_pag:
        if undirected:
            raise GraphError("cannot mix 'undirected' marks with PAG marks")
        return Pag(n, pag_edges, names)
    if not undirected:
        return Dag(n, directed, names)
    return Pdag(n, directed, undirected, names)


def save_graph(graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(graph), fh, indent=1)
        fh.write("\n")


def load_graph(path):
    with open(path, encoding="utf-8") as fh:
        return graph_from_json(json.load(fh))
