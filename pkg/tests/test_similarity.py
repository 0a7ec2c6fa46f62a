import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adshap.detectors import ScoreVector
from adshap.explain import ShapMatrix
from adshap.similarity import (
    DissimilarityMatrix,
    SimilarityError,
    SimilarityMatrix,
    build_similarity_matrix,
    jaccard,
    ndcg,
    pearson,
    score_similarity,
    shap_ndcg_similarity,
    shap_pearson_similarity,
    to_dissimilarity,
)


def brute_ndcg(rel, sc):
    order = sorted(range(len(sc)), key=lambda i: (-sc[i], i))
    dcg = sum(rel[i] / np.log2(r + 2) for r, i in enumerate(order))
    idcg = sum(v / np.log2(r + 2) for r, v in enumerate(sorted(rel, reverse=True)))
    return 1.0 if idcg == 0 else dcg / idcg


def test_pearson_matches_numpy(rng):
    a, b = rng.normal(size=20), rng.normal(size=20)
    assert pearson(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)


def test_pearson_zero_variance_is_zero():
    assert pearson([1, 1, 1], [1, 2, 3]) == 0.0
    assert pearson([2, 2], [2, 2]) == 0.0


def test_ps_is_mean_row_correlation(rng):
    A, B = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    expect = np.mean([np.corrcoef(a, b)[0, 1] for a, b in zip(A, B)])
    assert shap_pearson_similarity(A, B) == pytest.approx(expect)


def test_ndcg_against_brute_force(rng):
    for _ in range(50):
        rel = np.abs(rng.normal(size=6))
        sc = np.abs(rng.normal(size=6))
        assert ndcg(rel, sc) == pytest.approx(brute_ndcg(rel, sc), abs=1e-12)


def test_ndcg_ties_prefer_lower_index():
    assert ndcg([1.0, 0.0], [0.5, 0.5]) == 1.0
    assert ndcg([0.0, 1.0], [0.5, 0.5]) == pytest.approx(1 / np.log2(3))


def test_ndcg_all_zero_relevance():
    assert ndcg([0, 0, 0], [1, 2, 3]) == 1.0


def test_ndcg_similarity_is_symmetric(rng):
    A, B = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
    assert shap_ndcg_similarity(A, B) == pytest.approx(shap_ndcg_similarity(B, A))


def test_score_similarity_accepts_vectors(rng):
    a = rng.normal(size=10)
    assert score_similarity(ScoreVector(a), ScoreVector(2 * a + 1)) == pytest.approx(1.0)


def test_jaccard_edge_cases():
    assert jaccard(set(), set()) == 1.0
    assert jaccard({1}, set()) == 0.0
    assert jaccard({1, 2, 3}, {2, 3, 4}) == 0.5


@pytest.mark.parametrize(
    "kind,make",
    [
        ("PS", lambda r: ShapMatrix(r.normal(size=(6, 3)), 0.0)),
        ("NDCG", lambda r: ShapMatrix(r.normal(size=(6, 3)), 0.0)),
        ("SCORES", lambda r: ScoreVector(r.normal(size=6))),
        ("JACCARD", lambda r: frozenset(r.choice(10, size=3, replace=False).tolist())),
    ],
)
def test_matrix_diagonal_and_symmetry(kind, make, rng):
    arts = [make(rng) for _ in range(4)]
    S = build_similarity_matrix(kind, arts, ["a", "b", "c", "d"], "syn")
    np.testing.assert_allclose(np.diag(S.values), 1.0)
    np.testing.assert_array_equal(S.values, S.values.T)
    D = to_dissimilarity(S)
    np.testing.assert_allclose(D.values, 1.0 - S.values)
    assert D.is_symmetric() and D.kind == kind


def test_matrix_shape_mismatch_raises(rng):
    with pytest.raises(SimilarityError):
        build_similarity_matrix("PS", [ShapMatrix(np.ones((3, 2)), 0), ShapMatrix(np.ones((4, 2)), 0)])
    with pytest.raises(SimilarityError):
        build_similarity_matrix("PS", [ShapMatrix(np.ones((3, 2)), 0)])
    with pytest.raises(SimilarityError):
        build_similarity_matrix("COSINE", [ScoreVector(np.ones(2))] * 2)


def test_similarity_matrix_rejects_asymmetry():
    with pytest.raises(SimilarityError):
        SimilarityMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]), "PS", ("a", "b"))


def test_matrix_roundtrip(tmp_path, rng):
    arts = [ScoreVector(rng.normal(size=8)) for _ in range(3)]
    S = build_similarity_matrix("SCORES", arts, ["x", "y", "z"], "toy")
    S.save(tmp_path / "s.csv")
    back = SimilarityMatrix.load(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.values, S.values)
    assert (back.kind, back.model_ids, back.dataset_id) == ("SCORES", ("x", "y", "z"), "toy")
    D = DissimilarityMatrix.from_csv(tmp_path / "s.csv")
    assert D.index("y") == 1
    with pytest.raises(SimilarityError):
        D.index("w")


sets = st.frozensets(st.integers(0, 12), max_size=8)


@settings(max_examples=200, deadline=None)
@given(a=sets, b=sets, c=sets)
def test_property_jaccard_distance_triangle(a, b, c):
    d = lambda x, y: 1.0 - jaccard(x, y)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(1, 9))
def test_property_ndcg_in_unit_interval(seed, d):
    r = np.random.default_rng(seed)
    rel = np.abs(r.normal(size=d)) * r.integers(0, 2, size=d)
    v = ndcg(rel, np.abs(r.normal(size=d)))
    assert 0.0 <= v <= 1.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_property_self_similarity_is_one(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(5, 4))
    assert shap_pearson_similarity(A, A) == pytest.approx(1.0)
    assert shap_ndcg_similarity(A, A) == pytest.approx(1.0)
    s = r.normal(size=7)
    assert score_similarity(s, s) == pytest.approx(1.0)
    flagged = set(r.choice(7, size=r.integers(0, 7), replace=False).tolist())
    assert jaccard(flagged, flagged) == 1.0


def test_ps_values_bounded(rng):
    for a, b in itertools.combinations([rng.normal(size=(4, 3)) for _ in range(4)], 2):
        assert -1.0 <= shap_pearson_similarity(a, b) <= 1.0
