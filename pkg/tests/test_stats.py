import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adshap.similarity import DissimilarityMatrix
from adshap.stats import StatsError, mantel_test, pairwise_matrix_correlations, standardized_regression, vif


def random_dissimilarity(r, m):
    P = r.random((m, 2))
    D = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    return D


def brute_mantel(A, B, n, seed):
    iu = np.triu_indices(len(A), 1)
    r = np.corrcoef(A[iu], B[iu])[0, 1]
    hits = 0
    for i in range(n):
        p = np.random.default_rng([seed, i]).permutation(len(A))
        Bp = B[np.ix_(p, p)]
        hits += np.corrcoef(A[iu], Bp[iu])[0, 1] >= r
    return r, (1 + hits) / (n + 1)


def test_mantel_matches_loop(rng):
    A, B = random_dissimilarity(rng, 7), random_dissimilarity(rng, 7)
    res = mantel_test(A, B, 199, seed=4)
    r, p = brute_mantel(A, B, 199, 4)
    assert res.r_m == pytest.approx(r, abs=1e-12)
    assert res.p_value == pytest.approx(p)


def test_mantel_identical_matrices(rng):
    D = random_dissimilarity(rng, 10)
    res = mantel_test(D, D, 999, seed=0)
    assert res.r_m == pytest.approx(1.0)
    assert res.p_value == pytest.approx(1 / 1000)


def test_mantel_is_seeded(rng):
    A, B = random_dissimilarity(rng, 6), random_dissimilarity(rng, 6)
    assert mantel_test(A, B, 99, 3) == mantel_test(A, B, 99, 3)


def test_mantel_validation(rng):
    with pytest.raises(StatsError, match="m >= 3"):
        mantel_test(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(StatsError, match="symmetric"):
        mantel_test(rng.random((4, 4)), random_dissimilarity(rng, 4))
    with pytest.raises(StatsError, match="differ"):
        mantel_test(random_dissimilarity(rng, 4), random_dissimilarity(rng, 5))


def test_pairwise_table(rng):
    ids = ("a", "b", "c", "d", "e")
    mats = [DissimilarityMatrix(random_dissimilarity(rng, 5), k, ids) for k in ("PS", "NDCG", "SCORES")]
    t = pairwise_matrix_correlations(mats, 99, 1)
    R = t.r_matrix()
    np.testing.assert_allclose(np.diag(R), 1.0)
    np.testing.assert_allclose(R, R.T)
    assert t.get("PS", "SCORES") == mantel_test(mats[0], mats[2], 99, 1)
    assert set(t.to_dict()) == {"PS~NDCG", "PS~SCORES", "NDCG~SCORES"}


def test_pairwise_table_requires_same_order(rng):
    a = DissimilarityMatrix(random_dissimilarity(rng, 3), "PS", ("a", "b", "c"))
    b = DissimilarityMatrix(random_dissimilarity(rng, 3), "NDCG", ("b", "a", "c"))
    with pytest.raises(StatsError, match="ordering"):
        pairwise_matrix_correlations([a, b])


def test_regression_matches_normal_equations(rng):
    X = rng.normal(size=(40, 2)) * [2.0, 0.5] + [1.0, -3.0]
    y = 0.7 * X[:, 0] - 1.3 * X[:, 1] + rng.normal(size=40) * 0.1
    res = standardized_regression(y, X)
    Z = (X - X.mean(0)) / X.std(0)
    A = np.column_stack([np.ones(40), Z])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    assert res.intercept == pytest.approx(coef[0])
    assert res.weights["mean_individual_performance"] == pytest.approx(coef[1])
    assert res.weights["diversity"] == pytest.approx(coef[2])
    assert res.ratio == pytest.approx(coef[2] / coef[1])
    assert 0.9 < res.r_squared <= 1.0


def test_regression_constant_target():
    res = standardized_regression([1.0] * 5, np.arange(10.0).reshape(5, 2) ** [1, 2])
    assert res.weights == {"mean_individual_performance": 0.0, "diversity": 0.0}
    assert res.ratio is None


def test_regression_errors():
    with pytest.raises(StatsError, match="constant"):
        standardized_regression([1, 2, 3], [[1, 1], [1, 2], [1, 3]])
    with pytest.raises(StatsError, match="collinear"):
        standardized_regression([1, 2, 4], [[1, 2], [2, 4], [3, 6]])
    with pytest.raises(StatsError):
        standardized_regression([1, 2], [[1, 2], [2, 3]])


def test_vif_orthogonal_exactly_one():
    X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    assert vif(X).values == (1.0, 1.0)


def test_vif_r_squared_three_quarters():
    r = np.random.default_rng(0)
    a = r.normal(size=500)
    b = r.normal(size=500)
    a = (a - a.mean()) / a.std()
    b = b - b.mean()
    b = b - (b @ a) / (a @ a) * a
    b /= b.std()
    x2 = np.sqrt(0.75) * a + 0.5 * b
    values = vif(np.column_stack([a, x2])).values
    np.testing.assert_allclose(values, [4.0, 4.0], atol=1e-9)


def test_vif_perfect_collinearity_flagged():
    x = np.arange(6.0)
    res = vif(np.column_stack([x, 2 * x + 1]))
    assert res.values == (None, None) and res.overflow == (True, True)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 40))
def test_property_two_predictor_vifs_equal(seed, n):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 2))
    X[:, 1] += r.normal() * X[:, 0]
    a, b = vif(X).values
    assert a == pytest.approx(b, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_property_mantel_p_in_range(seed):
    r = np.random.default_rng(seed)
    res = mantel_test(random_dissimilarity(r, 5), random_dissimilarity(r, 5), 49, seed)
    assert 1 / 50 <= res.p_value <= 1.0
    assert -1.0 <= res.r_m <= 1.0
