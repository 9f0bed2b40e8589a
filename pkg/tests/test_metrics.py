import itertools

import numpy as np
import pytest

from causalbench.gbn import GbnModel, random_gbn, sample_observational
from causalbench.graphs import Dag, GraphError, Mark, Pag, Pdag
from causalbench.metrics import (
    ConfusionCounts,
    MetricReport,
    NormalizationError,
    _adjustment_failures,
    as_pdag,
    auc,
    edge_confusion,
    nrmse_av,
    prf,
    shd,
    sid,
    sid_oracle_mc,
)
from causalbench.stats import Dataset

from oracles import all_dags, random_dag_edges


def all_pdags(n):
    """Every PDAG over n nodes whose directed part is acyclic, with its status vector."""
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for states in itertools.product(range(4), repeat=len(pairs)):
        directed, undirected = [], []
        for (a, b), s in zip(pairs, states):
            if s == 1:
                directed.append((a, b))
            elif s == 2:
                directed.append((b, a))
            elif s == 3:
                undirected.append((a, b))
        try:
            out.append((Pdag(n, directed, undirected), states))
        except GraphError:
            continue
    return out


# -- confusion / PRF ---------------------------------------------------------


def test_confusion_identical():
    truth = Dag(3, [(0, 1), (1, 2)])
    c = edge_confusion(truth, truth)
    assert (c.tp, c.fp, c.fn) == (2, 0, 0) and prf(c).f_score == 1.0


def test_confusion_empty_learned():
    truth = Dag(3, [(0, 1)])
    c = edge_confusion(Pdag(3), truth)
    assert c.tp == c.fp == 0 and prf(c).recall == 0.0


def test_undirected_counts_both_directions():
    c = edge_confusion(Pdag(2, [], [(0, 1)]), Dag(2, [(0, 1)]))
    assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 0, 0)


def test_prf_conventions():
    assert prf(ConfusionCounts(0, 0, 0, 6)) == (1.0, 1.0, 0.0, 1.0)
    p = prf(ConfusionCounts(1, 1, 0, 4))
    assert p.precision == 0.5 and p.recall == 1.0 and p.f_score == pytest.approx(2 / 3)


def test_pag_to_pdag_mapping():
    pag = Pag(3, [(0, 1, Mark.TAIL, Mark.ARROW), (1, 2, Mark.CIRCLE, Mark.ARROW), (0, 2, Mark.ARROW, Mark.ARROW)])
    p = as_pdag(pag)
    assert p.directed == {(0, 1)} and p.undirected == {(1, 2), (0, 2)}


# -- AUC ---------------------------------------------------------------------


def test_auc_perfect_sweep():
    truth = Dag(4, [(0, 1), (2, 3)])
    assert auc([truth, truth, truth], truth) == 1.0


def test_auc_empty_graph_is_diagonal():
    assert auc([Pdag(4)], Dag(4, [(0, 1)])) == 0.5


def test_auc_random_guessing():
    rng = np.random.default_rng(0)
    truth = Dag(8, random_dag_edges(rng, 8, 0.3))
    vals = []
    for _ in range(50):
        graphs = []
        for _ in range(5):
            # each ordered pair present with probability 0.5; two-way pairs become undirected
            pick = rng.random((8, 8)) < 0.5
            np.fill_diagonal(pick, False)
            und = [(a, b) for a in range(8) for b in range(a + 1, 8) if pick[a, b] and pick[b, a]]
            dirs = [(a, b) for a in range(8) for b in range(8) if pick[a, b] and not pick[b, a]]
            try:
                graphs.append(Pdag(8, dirs, und))
            except GraphError:
                graphs.append(Pdag(8, [], und))
        vals.append(auc(graphs, truth))
    assert abs(np.mean(vals) - 0.5) <= 0.1


# -- SHD ---------------------------------------------------------------------


def test_shd_simple_cases():
    g = Dag(3, [(0, 1), (1, 2)])
    assert shd(g, g) == 0
    assert shd(g, Dag(3, [(1, 0), (1, 2)])) == 1
    assert shd(g, Dag(3, [(0, 1)])) == 1
    assert shd(g.to_pdag(), Pdag(3, [], [(0, 1), (1, 2)])) == 2


def test_shd_axioms_exhaustive_4_nodes():
    pdags = all_pdags(4)
    status = np.array([s for _, s in pdags])
    rng = np.random.default_rng(1)
    probes = rng.choice(len(pdags), 40, replace=False)
    for k, (g, _) in enumerate(pdags):
        assert shd(g, g) == 0
        for p in probes:
            h = pdags[p][0]
            d = shd(g, h)
            # equals the Hamming distance between pair-status vectors
            assert d == int(np.sum(status[k] != status[p]))
            assert d == shd(h, g)
            assert (d == 0) == (g == h)
    # triangle inequality over random triples
    idx = rng.integers(0, len(pdags), size=(5000, 3))
    for a, b, c in idx:
        ga, gb, gc = pdags[a][0], pdags[b][0], pdags[c][0]
        assert shd(ga, gc) <= shd(ga, gb) + shd(gb, gc)


def test_shd_rejects_mismatched_sizes():
    with pytest.raises(GraphError):
        shd(Pdag(2), Pdag(3))


# -- SID ---------------------------------------------------------------------


def test_sid_identity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = Dag(6, random_dag_edges(rng, 6, 0.4))
        assert sid(g, g) == 0 and sid_oracle_mc(g, g) == 0


def test_sid_chain_versus_empty():
    # empty adjustment is valid for the three causal pairs; the three anti-causal
    # pairs regress a non-descendant on a dependent node and are counted
    truth = Dag(3, [(0, 1), (1, 2)])
    assert sid(truth, Dag(3)) == 3 == sid_oracle_mc(truth, Dag(3))
    assert _adjustment_failures(truth, 0, frozenset()) == frozenset()


def test_sid_confounder_versus_empty():
    x, y, z = 0, 1, 2
    truth = Dag(3, [(z, x), (z, y), (x, y)])
    assert sid(truth, Dag(3)) == sid_oracle_mc(truth, Dag(3))
    # (x, y) is counted: the back-door path through z stays open
    assert y in _adjustment_failures(truth, x, frozenset())
    assert y not in _adjustment_failures(truth, x, frozenset({z}))


def test_sid_matches_oracle_exhaustive_3_nodes():
    dags = [Dag(3, e) for e in all_dags(3)]
    for a in dags:
        for b in dags:
            assert sid(a, b) == sid_oracle_mc(a, b)


def test_sid_is_not_symmetric():
    a, b = Dag(3, [(0, 1), (1, 2)]), Dag(3)
    assert sid(a, b) != sid(b, a)


def test_sid_accepts_cpdag_estimate():
    truth = Dag(3, [(0, 1), (1, 2)])
    assert sid(truth, truth.to_pdag()) == 0


# -- NRMSE -------------------------------------------------------------------


def test_nrmse_near_zero_on_near_noiseless_data():
    w = np.zeros((3, 3))
    w[0, 1], w[1, 2] = 0.5, 0.8
    model = GbnModel(Dag(3, [(0, 1), (1, 2)]), w, [100, 50, 80], [10, 1e-4, 1e-4])
    d = sample_observational(model, 2000, seed=3)
    assert nrmse_av(model.dag, d) < 1e-3


def test_true_graph_beats_empty_graph():
    model = random_gbn(8, 0.4, seed=4)
    d = sample_observational(model, 5000, seed=5)
    assert nrmse_av(model.dag, d) <= nrmse_av(Dag(8), d)


def test_zero_mean_column_is_reported():
    x = np.random.default_rng(6).standard_normal((100, 2))
    x[:, 1] -= x[:, 1].mean()
    with pytest.raises(NormalizationError, match="'b'"):
        nrmse_av(Dag(2), Dataset(["a", "b"], x + [5.0, 0.0]))


# -- report ------------------------------------------------------------------


def test_report_roundtrip_and_validation():
    rep = MetricReport()
    rep.add(algorithm="pc", threshold=0.05, selected=True, status="ok", tp=3, fp=1, fn=0, tn=8,
            f_score=0.857142857142857, shd=1, sid=2, nrmse_av=12.5)
    rep.add(algorithm="ges", status="timeout")
    text = rep.to_csv()
    assert MetricReport.from_csv(text).to_csv() == text
    assert "| pc | 0.050 |" in rep.to_markdown()
    with pytest.raises(ValueError):
        rep.add(algorithm="x", f_score=1.5)
    with pytest.raises(KeyError):
        rep.add(algorithm="x", bogus=1)
