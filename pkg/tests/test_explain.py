import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adshap.data import Dataset
from adshap.detectors import default_config, fit
from adshap.explain import (
    Background,
    ExplainError,
    ShapMatrix,
    default_budget,
    exact_shapley,
    explain_dataset,
    kernel_shap,
    summarize_background,
)


def shapley_by_permutations(f, x, bg):
    """Independent oracle: average marginal contribution over all orderings."""
    import itertools

    d = len(x)

    def v(S):
        H = bg.centroids.copy()
        H[:, list(S)] = x[list(S)]
        return float(f(H) @ bg.weights)

    phi = np.zeros(d)
    perms = list(itertools.permutations(range(d)))
    for perm in perms:
        S = []
        for j in perm:
            before = v(S)
            S.append(j)
            phi[j] += v(S) - before
    return phi / len(perms)


def random_bg(r, k, d):
    w = r.random(k) + 0.1
    return Background(r.normal(size=(k, d)), w / w.sum())


def test_exact_matches_permutation_oracle(rng):
    f = lambda Z: np.sin(Z[:, 0]) * Z[:, 1] + Z[:, 2] ** 2 - Z[:, 0] * Z[:, 2]
    bg = random_bg(rng, 4, 3)
    x = rng.normal(size=3)
    np.testing.assert_allclose(exact_shapley(f, x, bg), shapley_by_permutations(f, x, bg), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_kernel_full_enumeration_matches_exact(d):
    r = np.random.default_rng(d)
    W = r.normal(size=(d, d))
    f = lambda Z: np.tanh(Z @ W).sum(1) + (Z[:, 0] * Z[:, -1])
    bg = random_bg(r, 6, d)
    x = r.normal(size=d)
    phi, base = kernel_shap(f, x, bg)
    np.testing.assert_allclose(phi, exact_shapley(f, x, bg), atol=1e-8)
    assert base == pytest.approx(bg.base_value(f))


def test_linear_closed_form(rng):
    w = rng.normal(size=6)
    bg = random_bg(rng, 5, 6)
    x = rng.normal(size=6)
    phi, _ = kernel_shap(lambda Z: Z @ w, x, bg)
    mu = bg.weights @ bg.centroids
    np.testing.assert_allclose(phi, w * (x - mu), atol=1e-10)


def test_dummy_feature_gets_exact_zero(rng):
    bg = random_bg(rng, 3, 4)
    x = rng.normal(size=4)
    phi, _ = kernel_shap(lambda Z: Z[:, 0] * Z[:, 1] + Z[:, 3], x, bg)
    assert abs(phi[2]) < 1e-10


def test_feature_equal_to_all_centroids_is_exact_zero(rng):
    C = rng.normal(size=(4, 3))
    C[:, 1] = 0.5
    bg = Background(C, np.full(4, 0.25))
    x = np.array([1.0, 0.5, -1.0])
    phi, _ = kernel_shap(lambda Z: (Z**2).sum(1), x, bg)
    assert phi[1] == 0.0


def test_symmetric_features_share_credit(rng):
    bg = Background(np.zeros((1, 2)), np.ones(1))
    phi, _ = kernel_shap(lambda Z: Z[:, 0] * Z[:, 1], np.array([2.0, 2.0]), bg)
    assert phi[0] == pytest.approx(phi[1]) == pytest.approx(2.0)


def test_single_centroid_background_is_mean(rng):
    X = rng.normal(size=(30, 3))
    bg = summarize_background(X, k=1)
    np.testing.assert_allclose(bg.centroids[0], X.mean(0))
    assert bg.weights.tolist() == [1.0]


def test_background_weights_are_cluster_shares(rng):
    X = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(10, 2)) + 20])
    bg = summarize_background(X, k=2, seed=0)
    assert sorted(np.round(bg.weights, 6).tolist()) == [0.25, 0.75]


def test_background_k_larger_than_n(rng):
    X = rng.normal(size=(5, 2))
    bg = summarize_background(X, k=50)
    assert bg.k == 5
    assert bg.weights.sum() == pytest.approx(1.0)


def test_sampled_regime_keeps_local_accuracy_and_seed(rng):
    d = 12
    W = rng.normal(size=d)
    f = lambda Z: np.exp(np.tanh(Z @ W))
    bg = random_bg(rng, 3, d)
    x = rng.normal(size=d) * 2
    phi1, base = kernel_shap(f, x, bg, n_coalitions=300, seed=7)
    phi2, _ = kernel_shap(f, x, bg, n_coalitions=300, seed=7)
    np.testing.assert_array_equal(phi1, phi2)
    assert phi1.sum() + base == pytest.approx(float(f(x[None])[0]), abs=1e-9)
    # and it is near the enumerated answer
    ref = exact_shapley(f, x, bg)
    assert np.corrcoef(phi1, ref)[0, 1] > 0.95


def test_sampled_regime_additive_model_exact(rng):
    d = 13
    w = rng.normal(size=d)
    bg = random_bg(rng, 4, d)
    x = rng.normal(size=d)
    phi, _ = kernel_shap(lambda Z: Z @ w + np.sin(Z[:, 0]), x, bg, n_coalitions=400, seed=1)
    mu_sin = bg.weights @ np.sin(bg.centroids[:, 0])
    expect = w * (x - bg.weights @ bg.centroids)
    expect[0] += np.sin(x[0]) - mu_sin
    np.testing.assert_allclose(phi, expect, atol=1e-8)


def test_budget_default_and_validation(rng):
    assert default_budget(9) == 2 * 9 + 2048
    bg = random_bg(rng, 2, 20)
    with pytest.raises(ExplainError):
        kernel_shap(lambda Z: Z.sum(1), rng.normal(size=20), bg, n_coalitions=5)
    with pytest.raises(ExplainError, match="features"):
        kernel_shap(lambda Z: Z.sum(1), np.zeros(3), bg)


def test_exact_refuses_large_d(rng):
    bg = random_bg(rng, 2, 15)
    with pytest.raises(ExplainError):
        exact_shapley(lambda Z: Z.sum(1), np.zeros(15), bg)


def test_background_validation():
    with pytest.raises(ExplainError):
        Background(np.zeros((2, 2)), np.array([0.7, 0.7]))


@pytest.mark.parametrize("kind", ["KNN", "IFOREST", "HBOS", "ECOD"])
def test_explain_dataset_local_accuracy(kind, toy):
    det = fit(default_config(kind), toy)
    bg = summarize_background(toy, k=8)
    test = toy.subset(np.arange(6))
    sm = explain_dataset(det, test, bg, seed=3)
    assert sm.shape == (6, toy.d)
    np.testing.assert_allclose(sm.values.sum(1) + sm.base_value, det(test.features), atol=1e-6)
    assert sm.detector_id == kind and sm.feature_names == toy.feature_names


def test_explain_dataset_row_streams(toy):
    # wide enough that the sampling branch is taken
    wide = Dataset(np.hstack([toy.features] * 4), toy.labels)
    det = fit(default_config("KNN"), wide)
    bg = summarize_background(wide, k=5)
    test = wide.subset(np.arange(5))
    sm = explain_dataset(det, test, bg, n_coalitions=200, seed=11)
    for k in (0, 3):
        phi, _ = kernel_shap(det, test.features[k], bg, 200, seed=(11, k))
        np.testing.assert_array_equal(sm.values[k], phi)
    np.testing.assert_array_equal(explain_dataset(det, test, bg, 200, seed=11).values, sm.values)


def test_shap_matrix_roundtrip(tmp_path, rng):
    sm = ShapMatrix(rng.normal(size=(4, 3)), 0.25, "KNN", "toy", ("a", "b", "c"), 5)
    sm.save(tmp_path / "m.csv")
    back = ShapMatrix.load(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.values, sm.values)
    assert (back.base_value, back.detector_id, back.dataset_id, back.feature_names, back.seed) == (0.25, "KNN", "toy", ("a", "b", "c"), 5)


def test_shap_matrix_rejects_nan():
    with pytest.raises(ExplainError):
        ShapMatrix(np.array([[np.nan]]), 0.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(2, 7), k=st.integers(1, 5))
def test_property_local_accuracy_and_efficiency(seed, d, k):
    r = np.random.default_rng(seed)
    W = r.normal(size=(d, 3))
    f = lambda Z: np.abs(Z @ W).max(1)
    bg = random_bg(r, k, d)
    x = r.normal(size=d)
    phi, base = kernel_shap(f, x, bg)
    assert abs(phi.sum() + base - f(x[None])[0]) <= 1e-6
    np.testing.assert_allclose(phi, exact_shapley(f, x, bg), atol=1e-6)
