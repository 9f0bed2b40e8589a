"""Brute-force reference implementations used only by the tests.

Nothing here imports the algorithms under test; graphs are plain edge sets.
"""

import itertools

import numpy as np


def has_cycle_bruteforce(n, edges):
    """Search every simple directed path for a return to its start."""
    succ = {v: [b for a, b in edges if a == v] for v in range(n)}

    def walk(start, v, seen):
        for w in succ[v]:
            if w == start:
                return True
            if w not in seen and walk(start, w, seen | {w}):
                return True
        return False

    return any(walk(v, v, {v}) for v in range(n))


def descendants(n, edges, v):
    out = {v}
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            if a in out and b not in out:
                out.add(b)
                changed = True
    return out


def simple_paths(n, edges, x, y):
    nbrs = {v: set() for v in range(n)}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)

    def rec(path):
        v = path[-1]
        if v == y:
            yield list(path)
            return
        for w in sorted(nbrs[v]):
            if w not in path:
                yield from rec(path + [w])

    yield from rec([x])


def d_separated_bruteforce(n, edges, x, y, z):
    """Every simple path between x and y must be blocked."""
    edges = set(edges)
    z = set(z)
    for path in simple_paths(n, edges, x, y):
        blocked = False
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = (a, b) in edges and (c, b) in edges
            if collider:
                if not (descendants(n, edges, b) & z):
                    blocked = True
                    break
            elif b in z:
                blocked = True
                break
        if not blocked:
            return False
    return True


def all_dags(n):
    """Every DAG on n labelled nodes, as frozensets of edges."""
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = set()
        for (a, b), s in zip(pairs, states):
            if s == 1:
                edges.add((a, b))
            elif s == 2:
                edges.add((b, a))
        if not has_cycle_bruteforce(n, edges):
            yield frozenset(edges)


def skeleton(edges):
    return frozenset(frozenset(e) for e in edges)


def v_structures(n, edges):
    edges = set(edges)
    skel = skeleton(edges)
    out = set()
    for c in range(n):
        pa = sorted(a for a, b in edges if b == c)
        for a, b in itertools.combinations(pa, 2):
            if frozenset((a, b)) not in skel:
                out.add((a, c, b))
    return frozenset(out)


def markov_equivalent(n, e1, e2):
    return skeleton(e1) == skeleton(e2) and v_structures(n, e1) == v_structures(n, e2)


def orientations(n, directed, undirected):
    """All acyclic orientations of the undirected part that keep the directed part."""
    undirected = sorted(undirected)
    for bits in itertools.product((0, 1), repeat=len(undirected)):
        edges = set(directed)
        for (a, b), bit in zip(undirected, bits):
            edges.add((a, b) if bit == 0 else (b, a))
        if not has_cycle_bruteforce(n, edges):
            yield frozenset(edges)


def random_dag_edges(rng, n, p):
    order = rng.permutation(n)
    return frozenset(
        (int(order[i]), int(order[j]))
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    )


def ols_residuals(y, design):
    design = np.column_stack([np.ones(len(y)), design]) if design.size else np.ones((len(y), 1))
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef
