"""PC algorithm: skeleton search by CI tests, collider orientation, Meek closure."""

from __future__ import annotations

import itertools

import numpy as np

from ..graphs import Pdag, SepsetMap, _has_directed_path, _meek_inplace
from ..stats import Dataset
from .options import DiscoveryOptions, as_ci_test


def learn_skeleton(ci_test, opts: DiscoveryOptions) -> tuple[np.ndarray, SepsetMap]:
    """Edge deletion by conditioning sets of increasing size.

    Returns a symmetric boolean adjacency matrix and the separating sets.  For
    each pair the conditioning sets are drawn from ``adj(x) \\ {y}`` and then
    ``adj(y) \\ {x}``, each in lexicographic order; the first set certifying
    independence is recorded.
    """
    n = ci_test.n_vars
    adj = ~np.eye(n, dtype=bool)
    sepsets = SepsetMap()
    limit = opts.cond_limit(n)
    level = 0
    while level <= limit:
        snapshot = adj.copy() if opts.stable_skeleton else adj
        if all(snapshot[x].sum() - 1 < level for x in range(n)):
            break
        for x in range(n):
            for y in range(x + 1, n):
                if not adj[x, y]:
                    continue
                tried = set()
                removed = False
                for a, b in ((x, y), (y, x)):
                    nbrs = [int(v) for v in np.flatnonzero(snapshot[a]) if v != b]
                    if len(nbrs) < level:
                        continue
                    for s in itertools.combinations(nbrs, level):
                        if s in tried:
                            continue
                        tried.add(s)
                        if ci_test(x, y, s):
                            adj[x, y] = adj[y, x] = False
                            sepsets[(x, y)] = s
                            removed = True
                            break
                    if removed:
                        break
        level += 1
    return adj, sepsets


def orient_colliders(adj: np.ndarray, sepsets: SepsetMap) -> np.ndarray:
    """PDAG matrix with unshielded colliders ``x -> z <- y`` where ``z`` is not in sepset(x, y).

    Triples are processed in lexicographic order.  An arrow is skipped if the pair
    is already oriented the other way or if it would close a directed cycle.
    """
    n = adj.shape[0]
    amat = adj.copy()
    for x in range(n):
        for y in range(x + 1, n):
            if adj[x, y]:
                continue
            for z in np.flatnonzero(adj[x] & adj[y]):
                z = int(z)
                if z in sepsets.get((x, y), frozenset()):
                    continue
                for a in (x, y):
                    if amat[a, z] and amat[z, a]:
                        if not _has_directed_path(amat, z, a):
                            amat[z, a] = False
    return amat


def pc(data, opts: DiscoveryOptions | None = None) -> tuple[Pdag, SepsetMap]:
    """Learn a CPDAG with the PC algorithm.

    ``data`` is a :class:`Dataset`, a :class:`CorrelationMatrix`, or any CI-test
    object (callable ``(x, y, S) -> independent`` with an ``n_vars`` attribute).
    """
    opts = opts or DiscoveryOptions()
    ci_test = as_ci_test(data, opts.alpha)
    if ci_test.n_vars < 2:
        raise ValueError("PC needs at least two variables")
    adj, sepsets = learn_skeleton(ci_test, opts)
    amat = orient_colliders(adj, sepsets)
    _meek_inplace(amat, strict=False)
    names = data.columns if isinstance(data, Dataset) else None
    return Pdag.from_matrix(amat, names), sepsets
