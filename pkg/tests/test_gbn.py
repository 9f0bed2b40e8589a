import numpy as np
import pytest

from causalbench.gbn import (
    ClampSpec,
    GbnModel,
    fit_gbn,
    joint_gaussian,
    mutilated_gaussian,
    predict_node_given_rest,
    random_gbn,
    random_weight,
    sample_interventional,
    sample_observational,
    total_effects,
)
from causalbench.graphs import Dag
from causalbench.stats import Dataset, DegenerateError


def two_node(weight=2.0, sd=(1.0, 1.0)):
    w = np.zeros((2, 2))
    w[0, 1] = weight
    return GbnModel(Dag(2, [(0, 1)], ["x", "y"]), w, [1.0, 0.0], list(sd))


def chain3():
    w = np.zeros((3, 3))
    w[0, 1], w[1, 2] = 1.5, -0.5
    return GbnModel(Dag(3, [(0, 1), (1, 2)]), w, [2.0, 1.0, -1.0], [1.0, 0.5, 2.0])


# -- construction -------------------------------------------------------------


def test_single_node_model():
    m = random_gbn(1, seed=0)
    assert m.dag.edges == frozenset()
    assert 50 <= m.intercepts[0] <= 500


def test_weight_distribution():
    w = random_weight(np.random.default_rng(0), 10**5)
    assert np.all(np.abs(w) > 0.25) and np.all(np.abs(w) < 1)
    assert abs(np.mean(w > 0) - 0.5) < 0.01
    # uniform within each branch: quartiles of |w| near 0.4375, 0.625, 0.8125
    q = np.quantile(np.abs(w), [0.25, 0.5, 0.75])
    assert np.allclose(q, [0.4375, 0.625, 0.8125], atol=0.01)


def test_random_gbn_is_deterministic():
    a, b = random_gbn(10, 0.3, seed=42), random_gbn(10, 0.3, seed=42)
    assert a.dag == b.dag
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.intercepts, b.intercepts)
    assert np.array_equal(a.noise_sd, b.noise_sd)
    assert np.all((a.noise_sd >= 5) & (a.noise_sd <= 100))


def test_rejects_weight_off_the_dag():
    w = np.zeros((2, 2))
    w[1, 0] = 1.0
    with pytest.raises(ValueError):
        GbnModel(Dag(2, [(0, 1)]), w, [0, 0], [1, 1])


def test_json_roundtrip(tmp_path):
    m = random_gbn(6, 0.5, seed=3)
    m.save(tmp_path / "m.json")
    back = GbnModel.load(tmp_path / "m.json")
    assert back.dag == m.dag and back.names == m.names
    assert np.array_equal(back.weights, m.weights)


# -- moments ----------------------------------------------------------------


def test_joint_gaussian_hand_case():
    mean, cov = joint_gaussian(two_node())
    assert np.allclose(mean, [1, 2])
    assert np.allclose(cov, [[1, 2], [2, 5]])


def test_edgeless_moments():
    m = GbnModel(Dag(3), np.zeros((3, 3)), [1, 2, 3], [1, 2, 3])
    mean, cov = joint_gaussian(m)
    assert np.allclose(mean, [1, 2, 3]) and np.allclose(cov, np.diag([1, 4, 9]))


def test_random_model_covariance_is_pd():
    _, cov = joint_gaussian(random_gbn(10, 0.5, seed=9))
    np.linalg.cholesky(cov)


def test_sample_means_two_node():
    d = sample_observational(two_node(), 10**6, seed=1)
    assert np.allclose(d.values.mean(0), [1, 2], atol=0.01)


def test_noiseless_structural_equation():
    d = sample_observational(two_node(sd=(1.0, 1e-9)), 100, seed=2)
    assert np.allclose(d.column("y"), 2 * d.column("x"), atol=1e-7)


def test_sample_covariance_within_five_se():
    model = chain3()
    n = 10**6
    x = sample_observational(model, n, seed=3).values
    mean, cov = joint_gaussian(model)
    emp = np.cov(x.T)
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / n)
    assert np.all(np.abs(emp - cov) <= 5 * se)
    assert np.all(np.abs(x.mean(0) - mean) <= 5 * np.sqrt(np.diag(cov) / n))


# -- interventions ----------------------------------------------------------


def test_clamp_root_shifts_by_path_products():
    model = chain3()
    d = sample_interventional(model, ClampSpec(0, 0.0), 10**5, seed=4)
    assert np.all(d.column(0) == 0.0)
    mean_obs, _ = joint_gaussian(model)
    te = total_effects(model)
    expected = mean_obs + te[0] * (0.0 - mean_obs[0])
    assert te[0, 2] == pytest.approx(1.5 * -0.5)
    _, cov = mutilated_gaussian(model, ClampSpec(0, 0.0))
    se = np.sqrt(np.diag(cov) / d.n)
    assert np.all(np.abs(d.values.mean(0) - expected) <= 5 * se + 1e-12)


def test_clamp_leaf_leaves_others_unchanged():
    model = chain3()
    m_obs, _ = joint_gaussian(model)
    m_int, _ = mutilated_gaussian(model, ClampSpec(2, 7.0))
    assert np.allclose(m_int[:2], m_obs[:2]) and m_int[2] == 7.0


def test_clamp_at_mean_keeps_downstream_means():
    model = chain3()
    m_obs, _ = joint_gaussian(model)
    m_int, _ = mutilated_gaussian(model, ClampSpec(1, m_obs[1]))
    assert np.allclose(m_int, m_obs)


def test_interventional_sampling_matches_mutilated_law():
    model = random_gbn(6, 0.5, seed=5)
    for node in range(6):
        clamp = ClampSpec(node, 0.0)
        d = sample_interventional(model, clamp, 20_000, seed=node)
        assert d.interventions[0].node == node
        mean, cov = mutilated_gaussian(model, clamp)
        se = np.sqrt(np.diag(cov) / d.n)
        assert np.all(np.abs(d.values.mean(0) - mean) <= 5 * se + 1e-9)


# -- fitting ----------------------------------------------------------------


def test_fit_recovers_weights():
    model = random_gbn(6, 0.5, seed=6)
    d = sample_observational(model, 10**5, seed=7)
    fit = fit_gbn(model.dag, d)
    assert np.allclose(fit.weights, model.weights, atol=0.02)


def test_root_intercept_is_sample_mean():
    d = sample_observational(chain3(), 1000, seed=8)
    fit = fit_gbn(Dag(3, [(1, 2)]), d)
    assert fit.intercepts[0] == pytest.approx(d.column(0).mean(), abs=1e-9)


def test_noiseless_refit_is_exact():
    # random roots, deterministic child c = 2 + 0.7 a - 0.3 b
    rng = np.random.default_rng(9)
    a, b = rng.normal(size=50), rng.normal(size=50)
    c = 2 + 0.7 * a - 0.3 * b
    fit = fit_gbn(Dag(3, [(0, 2), (1, 2)]), Dataset(["a", "b", "c"], np.column_stack([a, b, c])))
    assert fit.weights[0, 2] == pytest.approx(0.7, abs=1e-9)
    assert fit.weights[1, 2] == pytest.approx(-0.3, abs=1e-9)
    assert fit.intercepts[2] == pytest.approx(2.0, abs=1e-9)


def test_rank_deficient_design_names_node():
    x = np.random.default_rng(11).normal(size=40)
    d = Dataset(["a", "b", "c"], np.column_stack([x, 2 * x, x + np.random.default_rng(12).normal(size=40)]))
    with pytest.raises(DegenerateError, match="'c'"):
        fit_gbn(Dag(3, [(0, 2), (1, 2)]), d)


# -- conditional prediction --------------------------------------------------


def test_predict_hand_case():
    assert predict_node_given_rest(two_node(), 0, {1: 2.0}) == pytest.approx(1.0)
    assert predict_node_given_rest(two_node(), 0, [4.5]) == pytest.approx(1 + 0.4 * 2.5)


def test_predict_at_joint_mean():
    model = random_gbn(5, 0.5, seed=13)
    mean, _ = joint_gaussian(model)
    for v in range(5):
        rest = [mean[u] for u in range(5) if u != v]
        assert predict_node_given_rest(model, v, rest) == pytest.approx(mean[v], rel=1e-9)


def test_predict_against_rejection_sampling():
    model = chain3()
    x = sample_observational(model, 2 * 10**6, seed=14).values
    target = (3.0, -0.5)  # values of nodes 1 and 2
    near = (np.abs(x[:, 1] - target[0]) < 0.05) & (np.abs(x[:, 2] - target[1]) < 0.05)
    sel = x[near, 0]
    assert len(sel) > 200
    pred = predict_node_given_rest(model, 0, list(target))
    assert abs(sel.mean() - pred) <= 3 * sel.std() / np.sqrt(len(sel))
