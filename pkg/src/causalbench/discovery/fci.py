"""FCI: PC skeleton, Possible-D-SEP edge removal, collider and arrowhead orientation."""

from __future__ import annotations

import itertools

import numpy as np

from ..graphs import ARROW, CIRCLE, NO_EDGE, TAIL, Pag, SepsetMap, possible_d_sep_marks
from ..stats import Dataset
from .options import DiscoveryOptions, as_ci_test
from .pc import learn_skeleton


def _circle_graph(adj: np.ndarray) -> np.ndarray:
    marks = np.zeros(adj.shape, dtype=np.int8)
    marks[adj] = CIRCLE
    return marks


def _orient_colliders(marks: np.ndarray, sepsets: SepsetMap) -> None:
    n = marks.shape[0]
    adj = marks != NO_EDGE
    for x in range(n):
        for y in range(x + 1, n):
            if adj[x, y]:
                continue
            for z in np.flatnonzero(adj[x] & adj[y]):
                if int(z) not in sepsets.get((x, y), frozenset()):
                    marks[x, z] = ARROW
                    marks[y, z] = ARROW


def _possible_d_sep_removal(marks, ci_test, sepsets, limit) -> np.ndarray:
    n = marks.shape[0]
    adj = marks != NO_EDGE
    pds = [possible_d_sep_marks(marks, x) for x in range(n)]
    start_adj = adj.copy()
    for x in range(n):
        for y in range(x + 1, n):
            if not adj[x, y]:
                continue
            removed = False
            for a, b in ((x, y), (y, x)):
                cand = sorted(pds[a] - {b})
                local = set(int(v) for v in np.flatnonzero(start_adj[a])) - {b}
                if set(cand) <= local:
                    continue
                for size in range(1, min(len(cand), limit) + 1):
                    for s in itertools.combinations(cand, size):
                        if set(s) <= local:
                            continue
                        if ci_test(x, y, s):
                            adj[x, y] = adj[y, x] = False
                            sepsets[(x, y)] = s
                            removed = True
                            break
                    if removed:
                        break
                if removed:
                    break
    return adj


def _apply_rules(marks: np.ndarray) -> None:
    """Arrowhead rules R1-R3 on circle marks, to a fixed point."""
    n = marks.shape[0]
    adj = marks != NO_EDGE
    changed = True
    while changed:
        changed = False
        for b in range(n):
            for a in np.flatnonzero(adj[b]):
                for c in np.flatnonzero(adj[b]):
                    if a == c:
                        continue
                    # R1: a *-> b o-* c, a and c nonadjacent  =>  b -> c
                    if marks[a, b] == ARROW and marks[c, b] == CIRCLE and not adj[a, c]:
                        marks[c, b] = TAIL
                        marks[b, c] = ARROW
                        changed = True
                    # R2: (a -> b *-> c or a *-> b -> c) and a *-o c  =>  a *-> c
                    if adj[a, c] and marks[a, c] == CIRCLE and marks[a, b] == ARROW and marks[b, c] == ARROW:
                        if marks[b, a] == TAIL or marks[c, b] == TAIL:
                            marks[a, c] = ARROW
                            changed = True
        # R3: a *-> b <-* c, a *-o d o-* c, a and c nonadjacent, d *-o b  =>  d *-> b
        for b in range(n):
            for d in np.flatnonzero(adj[b]):
                if marks[d, b] != CIRCLE:
                    continue
                into_b = [int(v) for v in np.flatnonzero(adj[b]) if v != d and marks[v, b] == ARROW]
                for a, c in itertools.combinations(into_b, 2):
                    if adj[a, c] or not (adj[a, d] and adj[c, d]):
                        continue
                    if marks[a, d] == CIRCLE and marks[c, d] == CIRCLE:
                        marks[d, b] = ARROW
                        changed = True
                        break


def fci(data, opts: DiscoveryOptions | None = None) -> Pag:
    """Learn a PAG with FCI.

    Steps: PC skeleton with sepsets; colliders marked; edges re-tested against
    subsets of Possible-D-SEP; colliders re-oriented on the reduced skeleton; R1-R3.
    """
    opts = opts or DiscoveryOptions()
    ci_test = as_ci_test(data, opts.alpha)
    if ci_test.n_vars < 2:
        raise ValueError("FCI needs at least two variables")
    adj, sepsets = learn_skeleton(ci_test, opts)
    marks = _circle_graph(adj)
    _orient_colliders(marks, sepsets)
    adj = _possible_d_sep_removal(marks, ci_test, sepsets, opts.cond_limit(ci_test.n_vars))
    marks = _circle_graph(adj)
    _orient_colliders(marks, sepsets)
    _apply_rules(marks)
    names = data.columns if isinstance(data, Dataset) else None
    return Pag.from_marks(marks, names)
